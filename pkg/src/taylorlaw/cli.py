"""Command-line interface.

Every command writes its outputs atomically and records the fully resolved
configuration (including the seed) in a JSON report or a ``.meta.json``
sidecar next to CSV output. Settings resolve in the order
built-in default < ``--config`` JSON file < ``TAYLORLAW_SEED`` (seed only) <
explicit flag.

Exit codes: 0 success, 2 bad parameters, 3 data outside a method's domain,
4 non-convergence or failed generation, 5 unparseable input, 6 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import warnings
from contextlib import contextmanager

import numpy as np

from . import __version__
from .analysis import log_spaced_sizes, ols_fit, taylor_points
from .asymptotics import condition_a_probe
from .distributions import (
    AR1,
    IID,
    Equicorrelated,
    ExponentialLaw,
    GaussianModulated,
    Heterogeneous,
    StableLaw,
    TailModel,
    sample_process,
)
from .errors import (
    ConvergenceError,
    DomainError,
    GenerationError,
    ParameterError,
    ParseError,
)
from .moments import summarize
from .network import NetworkProcess, gen_erdos_renyi, load_edge_list, node_activity, verify_distance_decorrelation
from .tailfit import alt_hill_curve, bootstrap_ci, fit_gpd_mle, fit_negbinomial, fit_pareto_ls

EXIT_PARAMETER = 2
EXIT_DOMAIN = 3
EXIT_CONVERGENCE = 4
EXIT_PARSE = 5
EXIT_IO = 6

SCHEMA_VERSION = 1

# built-in defaults; None means "required or derived"
DEFAULTS = {
    "seed": 0,
    "threads": "auto",
    "format": "csv",
    "dist": "pareto",
    "process": "iid",
    "alpha": 0.5,
    "alpha2": 0.8,
    "x_min": 1.0,
    "scale": 1.0,
    "n": 1000,
    "beta1": 0.8,
    "burn_in": 10_000,
    "rho": 0.1,
    "decay": 100.0,
    "p_star": 0.6,
    "mean_degree": None,
    "cap": None,
    "n_min": 500,
    "count": 100,
    "log_base": 10.0,
    "theta_grid": "0.5:0.95:0.01",
    "bootstrap": 500,
    "level": 0.99,
    "family": "pareto_ls",
    "threshold": None,
    "log_data": False,
    "replicates": 2000,
    "pairs": 10,
    "p": 2.0,
    "n_grid": "100,1000,10000",
    "c_rule": "log",
}


# --- resolution -----------------------------------------------------------------------

def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config file is not valid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(cfg, dict):
        raise ParameterError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def resolve(args, keys):
    """Merge defaults, config file, environment and flags for ``keys``."""
    cfg = _load_config(getattr(args, "config", None))
    out = {}
    for key in keys:
        val = DEFAULTS.get(key)
        if key in cfg:
            val = cfg[key]
        if key == "seed" and os.environ.get("TAYLORLAW_SEED") not in (None, ""):
            try:
                val = int(os.environ["TAYLORLAW_SEED"])
            except ValueError:
                raise ParameterError("TAYLORLAW_SEED must be an integer") from None
        flag = getattr(args, key, None)
        if flag is not None:
            val = flag
        out[key] = val
    if "seed" in out:
        if isinstance(out["seed"], bool) or int(out["seed"]) != out["seed"]:
            raise ParameterError(f"seed must be an integer, got {out['seed']!r}")
        out["seed"] = int(out["seed"])
    if "threads" in out:
        out["threads"] = _threads(out["threads"])
    return out


def _threads(value):
    if value in (None, "auto"):
        return max(1, os.cpu_count() or 1)
    try:
        t = int(value)
    except (TypeError, ValueError):
        raise ParameterError(f"threads must be a positive integer or 'auto', got {value!r}") from None
    if t < 1:
        raise ParameterError("threads must be at least 1")
    return t


def _echo_seed(seed):
    print(f"seed: {seed}", file=sys.stderr)


# --- output ---------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _csv_text(columns, rows):
    lines = [",".join(columns)]
    lines.extend(",".join(_fmt(r[c]) for c in columns) for r in rows)
    return "\n".join(lines) + "\n"


def _json_text(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


@contextmanager
def atomic_outputs():
    """Collect ``(path, text)`` pairs; publish all of them only if the block succeeds."""
    pending = []
    yield pending
    temps = []
    try:
        for path, text in pending:
            d = os.path.dirname(os.path.abspath(path))
            fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
            temps.append((tmp, path))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, path in temps:
            os.replace(tmp, path)
    except BaseException:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise


def _emit(pending, path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        pending.append((path, text))


def _meta_path(path):
    return None if path in (None, "-") else path + ".meta.json"


def _record(command, cfg, **extra):
    # thread count is left out: outputs do not depend on it
    conf = {k: v for k, v in cfg.items() if k != "threads"}
    rec = {"schema_version": SCHEMA_VERSION, "command": command, "version": __version__,
           "config": conf}
    rec.update(extra)
    return rec


# --- input ----------------------------------------------------------------------------

def read_values(path):
    """Values from a one-column file, with or without a header row."""
    vals = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            field = s.split(",")[0].strip()
            try:
                vals.append(float(field))
            except ValueError:
                if not vals and lineno == 1:
                    continue  # header
                raise ParseError(f"not a number: {field!r}", lineno) from None
    if not vals:
        raise DomainError(f"no values found in {path}")
    x = np.array(vals)
    if np.any(~np.isfinite(x)) or np.any(x < 0):
        raise DomainError("values must be finite and nonnegative")
    return x


# --- spec construction ----------------------------------------------------------------

def _law(cfg, alpha_key="alpha"):
    dist = cfg["dist"]
    a = cfg[alpha_key]
    if dist == "pareto":
        return TailModel.pareto(cfg["x_min"], a)
    if dist == "stable":
        return StableLaw(cfg["scale"], a)
    if dist == "f1":
        if not a > 0.05:
            raise ParameterError(f"the F1 law needs alpha > 0.05, got {a}")
        return TailModel.f1(a)
    if dist == "exponential":
        return ExponentialLaw(cfg["scale"])
    raise ParameterError(f"unknown distribution {dist!r}")


def build_spec(cfg):
    proc = cfg["process"]
    if proc == "iid":
        return IID(_law(cfg))
    if proc == "ar1":
        return AR1(cfg["beta1"], _law(cfg), int(cfg["burn_in"]))
    if proc == "equicorrelated":
        return Equicorrelated(cfg["alpha"], cfg["rho"])
    if proc == "gaussian":
        return GaussianModulated(cfg["alpha"], cfg["decay"])
    if proc == "hetero":
        return Heterogeneous(cfg["p_star"], _law(cfg), _law(cfg, "alpha2"))
    if proc == "network":
        return NetworkProcess(_law(cfg), cfg["mean_degree"], cfg["cap"])
    raise ParameterError(f"unknown process {proc!r}")


_SPEC_KEYS = ["dist", "process", "alpha", "alpha2", "x_min", "scale", "beta1", "burn_in",
              "rho", "decay", "p_star", "mean_degree", "cap"]


def _check_positive_alpha(cfg):
    for k in ("alpha", "alpha2"):
        if k in cfg and cfg[k] is not None and not cfg[k] > 0:
            raise ParameterError(f"{k} must be positive, got {cfg[k]}")


def _check_n(n, name="n"):
    if int(n) != n or n < 1:
        raise ParameterError(f"{name} must be a positive integer, got {n}")
    return int(n)


def _data_from(args, cfg):
    """Input file if given, else a synthetic sample from the spec flags."""
    if getattr(args, "input", None):
        return read_values(args.input), {"input": args.input}
    n = _check_n(cfg["n"])
    spec = build_spec(cfg)
    return sample_process(spec, n, cfg["seed"]).values, {"spec": spec.to_dict()}


def _parse_theta_grid(text):
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ParameterError(f"theta grid must look like start:stop:step, got {text!r}") from None
    if not step > 0 or hi < lo:
        raise ParameterError("theta grid needs step > 0 and stop >= start")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


def _parse_int_list(text, name):
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"{name} must be a comma-separated list of integers") from None
    if not vals:
        raise ParameterError(f"{name} is empty")
    return vals


# --- commands -------------------------------------------------------------------------

def cmd_simulate(args):
    cfg = resolve(args, ["seed", "n", "format"] + _SPEC_KEYS)
    _check_positive_alpha(cfg)
    _echo_seed(cfg["seed"])
    n = _check_n(cfg["n"])
    spec = build_spec(cfg)
    sample = sample_process(spec, n, cfg["seed"], replicate_id=args.replicate)
    meta = _record("simulate", cfg, spec=spec.to_dict(), replicate=args.replicate, n=n)
    with atomic_outputs() as out:
        if cfg["format"] == "json":
            meta["values"] = sample.values
            _emit(out, args.output, _json_text(meta))
        else:
            body = "value\n" + "\n".join(map(repr, sample.values.tolist())) + "\n"
            _emit(out, args.output, body)
            if _meta_path(args.output):
                _emit(out, _meta_path(args.output), _json_text(meta))
    return 0


def cmd_taylor(args):
    cfg = resolve(args, ["seed", "threads", "n", "n_min", "count", "log_base"] + _SPEC_KEYS)
    _check_positive_alpha(cfg)
    _echo_seed(cfg["seed"])
    x, source = _data_from(args, cfg)
    n_min = min(_check_n(cfg["n_min"], "n_min"), x.size)
    sizes = log_spaced_sizes(n_min, x.size, int(cfg["count"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pts = taylor_points(x, sizes, cfg["seed"], float(cfg["log_base"]), cfg["threads"])
    reg = ols_fit(pts)
    summ = summarize(x)
    report = _record("taylor", cfg, source=source, n=int(x.size),
                     full_sample={"mean": summ.mean, "variance": summ.variance},
                     regression=reg.to_dict(), requested_sizes=len(sizes))
    rows = [{"size": p.size, "log_mean": p.log_mean, "log_variance": p.log_variance} for p in pts]
    with atomic_outputs() as out:
        _emit(out, args.output, _json_text(report))
        if args.points:
            _emit(out, args.points, _csv_text(["size", "log_mean", "log_variance"], rows))
    return 0


def cmd_hill(args):
    cfg = resolve(args, ["seed", "threads", "n", "format", "theta_grid", "bootstrap", "level"] + _SPEC_KEYS)
    _check_positive_alpha(cfg)
    _echo_seed(cfg["seed"])
    x, source = _data_from(args, cfg)
    thetas = _parse_theta_grid(cfg["theta_grid"])
    curve = alt_hill_curve(x, thetas, int(cfg["bootstrap"]), float(cfg["level"]), cfg["seed"], cfg["threads"])
    rows = curve.rows()
    cols = ["theta", "k", "hill", "smoothed", "ci_low", "ci_high"]
    meta = _record("hill", cfg, source=source, n=int(x.size))
    with atomic_outputs() as out:
        if cfg["format"] == "json":
            meta["rows"] = rows
            _emit(out, args.output, _json_text(meta))
        else:
            _emit(out, args.output, _csv_text(cols, rows))
            if _meta_path(args.output):
                _emit(out, _meta_path(args.output), _json_text(meta))
    return 0


def cmd_fit(args):
    cfg = resolve(args, ["seed", "threads", "n", "family", "threshold", "log_data", "bootstrap", "level"]
                  + _SPEC_KEYS)
    _check_positive_alpha(cfg)
    _echo_seed(cfg["seed"])
    x, source = _data_from(args, cfg)
    fam = cfg["family"]
    data = x
    if cfg["log_data"]:
        if np.any(x <= 0):
            raise DomainError("log-scale fits need positive data")
        data = np.log(x)
    if fam == "pareto_ls":
        fitter = fit_pareto_ls
        key = "alpha"
    elif fam == "gpd":
        if cfg["threshold"] is None:
            raise ParameterError("the GPD fit needs --threshold")
        thr = float(cfg["threshold"])

        def fitter(d):
            return fit_gpd_mle(d, thr)
        key = "shape"
    elif fam == "negbinomial":
        fitter = fit_negbinomial
        key = "size"
    else:
        raise ParameterError(f"unknown family {fam!r}")
    res = fitter(data)
    report = _record("fit", cfg, source=source, n=int(x.size), fit=res.to_dict())
    if int(cfg["bootstrap"]) > 0:
        report["bootstrap"] = bootstrap_ci(data, lambda d: fitter(d).params[key], int(cfg["bootstrap"]),
                                           float(cfg["level"]), cfg["seed"], cfg["threads"])
        report["bootstrap"]["parameter"] = key
    with atomic_outputs() as out:
        _emit(out, args.output, _json_text(report))
    return 0


def cmd_network(args):
    cfg = resolve(args, ["seed", "n", "mean_degree", "cap", "replicates", "pairs"])
    _echo_seed(cfg["seed"])
    n = _check_n(cfg["n"])
    d = 10.0 if cfg["mean_degree"] is None else float(cfg["mean_degree"])
    p = min(1.0, d / (n - 1)) if n > 1 else 0.0
    cap = None if cfg["cap"] is None else int(cfg["cap"])
    g = gen_erdos_renyi(n, p, cap, seed=cfg["seed"])
    rep = verify_distance_decorrelation(g, ExponentialLaw(), int(cfg["replicates"]), cfg["seed"], int(cfg["pairs"]))
    deg = g.degree()
    report = _record("network", cfg, graph={"n_nodes": g.n_nodes, "n_edges": g.n_edges,
                                            "mean_degree": float(deg.mean()), "max_degree": int(deg.max(initial=0)),
                                            "digest": g.digest()},
                     decorrelation=rep)
    with atomic_outputs() as out:
        _emit(out, args.output, _json_text(report))
    return 0


def cmd_ingest(args):
    cfg = resolve(args, [])
    if args.filter_zero_outdegree and args.format == "snap" and (args.mode or "out_degree") != "out_degree":
        raise ParameterError("--filter-zero-outdegree applies to out-degree activity")
    if args.format == "snap":
        g = load_edge_list(args.path, comment_prefix=args.comment, delimiter=args.delimiter,
                           directed=True, column_roles=tuple(_parse_int_list(args.columns, "columns")))
        mode = args.mode or "out_degree"
        acts = node_activity(g, mode, drop_zeros=args.filter_zero_outdegree)
    else:
        g = load_edge_list(args.path, comment_prefix=args.comment, delimiter=args.delimiter,
                           bipartite=True, column_roles=tuple(_parse_int_list(args.columns, "columns")))
        acts = node_activity(g, "side_degree", side=args.side, drop_zeros=args.filter_zero_outdegree)
    x = acts.values
    summ = summarize(x)
    summary = _record("ingest", dict(cfg, format=args.format, path=args.path, side=args.side,
                                     mode=args.mode, filter_zeros=bool(args.filter_zero_outdegree)),
                      graph={"n_nodes": g.n_nodes, "n_edges": g.n_edges, "digest": g.digest()},
                      n=int(x.size), max=float(x.max()), mean=summ.mean, variance=summ.variance)
    with atomic_outputs() as out:
        _emit(out, args.output, _json_text(summary))
        if args.values:
            _emit(out, args.values, "value\n" + "\n".join(str(int(v)) for v in x) + "\n")
    return 0


def cmd_probe(args):
    cfg = resolve(args, ["seed", "threads", "format", "p", "n_grid", "replicates", "c_rule"] + _SPEC_KEYS)
    _check_positive_alpha(cfg)
    _echo_seed(cfg["seed"])
    if args.replicates is None and "replicates" not in _load_config(args.config):
        cfg["replicates"] = 400
    spec = build_spec(cfg)
    grid = _parse_int_list(cfg["n_grid"], "n-grid")
    rep = condition_a_probe(spec, float(cfg["p"]), grid, int(cfg["replicates"]), cfg["seed"],
                            cfg["c_rule"], cfg["threads"])
    meta = _record("probe", cfg, spec=spec.to_dict(), verdict=rep["verdict"])
    cols = ["n", "c_n", "v_n", "estimate", "se", "ratio", "ratio_se", "zero_within_3se", "verdict"]
    rows = [dict(r, verdict=rep["verdict"]) for r in rep["rows"]]
    with atomic_outputs() as out:
        if cfg["format"] == "json":
            meta["rows"] = rep["rows"]
            _emit(out, args.output, _json_text(meta))
        else:
            _emit(out, args.output, _csv_text(cols, rows))
            if _meta_path(args.output):
                _emit(out, _meta_path(args.output), _json_text(meta))
    return 0


# --- parser ---------------------------------------------------------------------------

def _common(p, random=True):
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("-o", "--output", help="output path (default: stdout)")
    if random:
        p.add_argument("--seed", type=int, help="master seed (env TAYLORLAW_SEED overrides the config)")
        p.add_argument("--threads", help="worker threads, an integer or 'auto'")


def _spec_flags(p):
    g = p.add_argument_group("synthetic data")
    g.add_argument("--dist", choices=["pareto", "stable", "f1", "exponential"])
    g.add_argument("--process", choices=["iid", "ar1", "equicorrelated", "gaussian", "hetero", "network"])
    g.add_argument("--alpha", type=float)
    g.add_argument("--alpha2", type=float, help="tail index of the lighter mixture component")
    g.add_argument("--x-min", dest="x_min", type=float)
    g.add_argument("--scale", type=float, help="stable or exponential scale")
    g.add_argument("--n", type=int)
    g.add_argument("--beta1", type=float)
    g.add_argument("--burn-in", dest="burn_in", type=int)
    g.add_argument("--rho", type=float)
    g.add_argument("--decay", type=float)
    g.add_argument("--p-star", dest="p_star", type=float)
    g.add_argument("--mean-degree", dest="mean_degree", type=float)
    g.add_argument("--cap", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="taylorlaw", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a sample")
    _common(p)
    _spec_flags(p)
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--format", choices=["csv", "json"])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("taylor", help="Taylor's-law regression on subsamples")
    _common(p)
    _spec_flags(p)
    p.add_argument("--input", help="one-column value file")
    p.add_argument("--points", help="CSV path for the (size, log_mean, log_variance) points")
    p.add_argument("--n-min", dest="n_min", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--log-base", dest="log_base", type=float)
    p.set_defaults(func=cmd_taylor)

    p = sub.add_parser("hill", help="alternative Hill plot data")
    _common(p)
    _spec_flags(p)
    p.add_argument("--input")
    p.add_argument("--theta-grid", dest="theta_grid", help="start:stop:step")
    p.add_argument("--bootstrap", type=int, help="bootstrap replicates (0 disables)")
    p.add_argument("--level", type=float)
    p.add_argument("--format", choices=["csv", "json"])
    p.set_defaults(func=cmd_hill)

    p = sub.add_parser("fit", help="parametric tail fit")
    _common(p)
    _spec_flags(p)
    p.add_argument("--input")
    p.add_argument("--family", choices=["pareto_ls", "gpd", "negbinomial"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--log-data", dest="log_data", action="store_const", const=True,
                   help="fit the logarithms of the values")
    p.add_argument("--bootstrap", type=int)
    p.add_argument("--level", type=float)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("network", help="distance decorrelation check on an Erdos-Renyi graph")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--mean-degree", dest="mean_degree", type=float)
    p.add_argument("--cap", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--pairs", type=int, help="node pairs per distance class")
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("ingest", help="summarize node activity of an edge-list file")
    _common(p, random=False)
    p.add_argument("path")
    p.add_argument("--format", choices=["snap", "bipartite"], default="snap")
    p.add_argument("--filter-zero-outdegree", action="store_true", help="drop nodes with zero activity")
    p.add_argument("--mode", choices=["out_degree", "degree"])
    p.add_argument("--side", type=int, default=1, help="bipartite side to summarize (0 or 1)")
    p.add_argument("--comment", default="#")
    p.add_argument("--delimiter")
    p.add_argument("--columns", default="0,1", help="columns holding the two endpoints")
    p.add_argument("--values", help="also write the activity values to this CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("probe", help="Monte Carlo probe of the truncated covariance sum")
    _common(p)
    _spec_flags(p)
    p.add_argument("--p", type=float, help="moment order")
    p.add_argument("--n-grid", dest="n_grid")
    p.add_argument("--replicates", type=int)
    p.add_argument("--c-rule", dest="c_rule")
    p.add_argument("--format", choices=["csv", "json"])
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        code, msg = EXIT_PARSE, f"parse error: {exc}"
    except ParameterError as exc:
        code, msg = EXIT_PARAMETER, f"parameter error: {exc}"
    except DomainError as exc:
        code, msg = EXIT_DOMAIN, f"domain error: {exc}"
    except (ConvergenceError, GenerationError) as exc:
        code, msg = EXIT_CONVERGENCE, f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        code, msg = EXIT_IO, f"I/O error: {exc}"
    print(msg, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
