import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from taylorlaw import sample_pareto, summarize
from taylorlaw.analysis import (convergence_diagnostic, log_spaced_sizes, ols_fit, taylor_points)
from taylorlaw.distributions import IID, TailModel
from taylorlaw.errors import DomainError, ParameterError, RegimeError
from taylorlaw.moments import LimitSpec


def test_log_spaced_sizes_examples():
    s = log_spaced_sizes(500, 147602, 100)
    assert len(s) == 100 and s[0] == 500 and s[-1] == 147602
    assert all(b >= a for a, b in zip(s, s[1:]))
    assert log_spaced_sizes(10, 10, 5) == [10] * 5
    assert log_spaced_sizes(1, 100, 3) == [1, 10, 100]


def test_log_spaced_sizes_errors():
    for args in ((0, 10, 3), (10, 5, 3), (1, 10, 1), (1.5, 10, 3)):
        with pytest.raises(ParameterError):
            log_spaced_sizes(*args)


def test_full_size_point_is_full_sample():
    x = sample_pareto(1, 0.5, 2000, seed=3).values
    pts = taylor_points(x, [2000], seed=1)
    s = summarize(x)
    assert pts[0].log_mean == pytest.approx(math.log10(s.mean), rel=1e-15)
    assert pts[0].log_variance == pytest.approx(math.log10(s.variance), rel=1e-15)
    assert taylor_points(x, [2000], seed=99) == pts


def test_subsample_points_use_without_replacement_draws():
    x = np.arange(1.0, 101.0)
    pts = taylor_points(x, [100, 100, 50], seed=2, log_base=math.e)
    assert pts[0] == pts[1]
    assert 50 == pts[2].size


def test_constant_data_skipped_with_warning():
    with pytest.warns(RuntimeWarning):
        pts = taylor_points(np.full(50, 3.0), [10, 20, 50], seed=0)
    assert len(pts) == 0 and pts.skipped == 3


def test_taylor_points_errors_and_threads():
    x = sample_pareto(1, 0.5, 5000, seed=1).values
    with pytest.raises(ParameterError):
        taylor_points(x, [10, 6000], seed=0)
    with pytest.raises(ParameterError):
        taylor_points(x, [10], seed=0, log_base=1.0)
    sizes = log_spaced_sizes(10, 5000, 40)
    assert taylor_points(x, sizes, seed=4, threads=1) == taylor_points(x, sizes, seed=4, threads=6)


def test_ols_exact_line():
    fit = ols_fit([(1, 0.0, 1.0), (2, 1.0, 3.0), (3, 2.0, 5.0)])
    assert fit.slope == pytest.approx(2.0, abs=1e-14)
    assert fit.intercept == pytest.approx(1.0, abs=1e-14)
    assert fit.r2 == 1.0 and fit.adj_r2 == 1.0
    assert fit.implied_alpha == pytest.approx(0.0, abs=1e-14)


def test_ols_matches_linregress_and_t_intervals():
    rng = np.random.default_rng(7)
    xs = rng.uniform(0, 5, 40)
    ys = 1.0 + 3.2 * xs + rng.normal(0, 0.4, 40)
    fit = ols_fit([(i, a, b) for i, (a, b) in enumerate(zip(xs, ys))])
    ref = stats.linregress(xs, ys)
    assert fit.slope == pytest.approx(ref.slope, rel=1e-12)
    assert fit.intercept == pytest.approx(ref.intercept, rel=1e-12)
    assert fit.se_slope == pytest.approx(ref.stderr, rel=1e-10)
    assert fit.se_intercept == pytest.approx(ref.intercept_stderr, rel=1e-10)
    assert fit.r2 == pytest.approx(ref.rvalue**2, rel=1e-12)
    assert fit.adj_r2 == pytest.approx(1 - (1 - ref.rvalue**2) * 39 / 38, rel=1e-12)
    q = stats.t.ppf(0.995, 38)
    lo, hi = fit.ci99["slope"]
    assert lo == pytest.approx(ref.slope - q * ref.stderr, rel=1e-12)
    assert hi == pytest.approx(ref.slope + q * ref.stderr, rel=1e-12)
    assert fit.ci95["slope"][0] > lo and fit.ci95["slope"][1] < hi
    assert fit.implied_alpha == pytest.approx((2 - fit.slope) / (1 - fit.slope))


def test_ci_width_tracks_residual_sd():
    # same residual pattern, more points: half-width = t_q * sd / sqrt(sxx)
    for m in (5, 20, 80):
        xs = np.linspace(0, 1, m)
        noise = np.where(np.arange(m) % 2 == 0, 0.1, -0.1)
        fit = ols_fit([(i, a, 2 * a + e) for i, (a, e) in enumerate(zip(xs, noise))])
        sxx = np.sum((xs - xs.mean()) ** 2)
        half = (fit.ci95["slope"][1] - fit.ci95["slope"][0]) / 2
        assert half == pytest.approx(stats.t.ppf(0.975, m - 2) * fit.residual_sd / math.sqrt(sxx), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10_000), m=st.integers(3, 40))
def test_base_invariance(seed, m):
    rng = np.random.default_rng(seed)
    mean = rng.uniform(1.5, 1e4, m)
    var = mean ** rng.uniform(1.5, 3.5) * rng.uniform(0.5, 2, m)
    nat = ols_fit([(i, math.log(a), math.log(b)) for i, (a, b) in enumerate(zip(mean, var))], log_base=math.e)
    ten = ols_fit([(i, math.log10(a), math.log10(b)) for i, (a, b) in enumerate(zip(mean, var))], log_base=10)
    assert ten.slope == pytest.approx(nat.slope, rel=1e-12, abs=1e-12)
    if nat.r2 == nat.r2 and nat.r2 < 1 - 1e-9:
        assert ten.adj_r2 == pytest.approx(nat.adj_r2, rel=1e-9, abs=1e-12)
    if abs(nat.slope - 1) > 1e-3:
        assert ten.implied_alpha == pytest.approx(nat.implied_alpha, rel=1e-9)


def test_ols_errors():
    with pytest.raises(DomainError):
        ols_fit([(1, 0.0, 1.0), (2, 1.0, 3.0)])
    with pytest.raises(DomainError):
        ols_fit([(1, 2.0, 1.0), (2, 2.0, 3.0), (3, 2.0, 4.0)])


def test_regression_report_keys():
    fit = ols_fit([(1, 0.0, 1.0), (2, 1.0, 3.1), (3, 2.0, 5.0), (4, 3.0, 6.8)])
    d = fit.to_dict()
    assert d["n_points"] == 4 and set(d["ci95"]) == {"slope", "intercept"}


def test_pareto_pipeline_slope_near_three():
    # pilot over 30 seeds: median slope 2.69, largest |slope - 3| = 0.58
    x = sample_pareto(1, 0.5, 10**6, seed=0).values
    fit = ols_fit(taylor_points(x, log_spaced_sizes(500, 10**6, 100), seed=0))
    assert abs(fit.slope - 3.0) <= 0.75
    assert fit.slope > 2.0


# --- convergence diagnostic -----------------------------------------------------------

def test_convergence_errors():
    spec = IID(TailModel.pareto(1, 0.5))
    with pytest.raises(ParameterError):
        convergence_diagnostic(spec, LimitSpec.variance(0.5), [100], 0, seed=0)
    with pytest.raises(RegimeError):
        convergence_diagnostic(spec, LimitSpec.variance(1.5), [100], 5, seed=0)


def test_convergence_rows_and_threads():
    spec = IID(TailModel.pareto(1, 0.5))
    a = convergence_diagnostic(spec, LimitSpec.variance(0.5), [100, 1000], 8, seed=3)
    b = convergence_diagnostic(spec, LimitSpec.variance(0.5), [100, 1000], 8, seed=3, threads=4)
    assert a == b
    row = a[0]
    assert row["limit"] == 3.0 and len(row["deviations"]) == 8 and row["failed"] == 0
    assert row["iqr"] == pytest.approx(row["q75"] - row["q25"])


def test_smaller_alpha_closer_to_limit():
    devs = {}
    for a in (0.2, 0.8):
        rows = convergence_diagnostic(IID(TailModel.pareto(1, a)), LimitSpec.variance(a), [10**4], 20, seed=5)
        devs[a] = rows[0]["median_abs"]
    assert devs[0.2] < devs[0.8]


@pytest.mark.slow
def test_median_deviation_shrinks_with_n():
    rows = convergence_diagnostic(IID(TailModel.pareto(1, 0.5)), LimitSpec.variance(0.5),
                                  [10**3, 10**4, 10**5, 10**6], 20, seed=1)
    med = [r["median_abs"] for r in rows]
    inversions = sum(b > a for a, b in zip(med, med[1:]))
    assert inversions <= 1
    assert med[-1] < med[0]
