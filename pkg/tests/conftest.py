import os

import pytest

N_CRITERIA = 15

# criterion -> list of (passed, detail); summarized once at the end of the run
ACCEPTANCE = {}


def record(criterion, passed, detail):
    passed = bool(passed)
    ACCEPTANCE.setdefault(criterion, []).append((passed, detail))
    print(f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}")
    return passed


@pytest.fixture
def acceptance():
    return record


@pytest.fixture(scope="session")
def data_dir():
    path = os.environ.get("TAYLORLAW_DATA_DIR")
    if not path or not os.path.isdir(path):
        pytest.skip("set TAYLORLAW_DATA_DIR to a directory holding the downloaded datasets")
    return path


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in range(1, N_CRITERIA + 1):
        parts = ACCEPTANCE.get(c)
        if not parts:
            terminalreporter.write_line(f"SKIP  criterion {c}: not run in this session")
            continue
        verdict = "PASS" if all(p for p, _ in parts) else "FAIL"
        detail = "; ".join(("" if p else "[FAIL] ") + d for p, d in parts)
        terminalreporter.write_line(f"{verdict}  criterion {c}: {detail}")
