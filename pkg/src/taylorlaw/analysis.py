"""Taylor's-law regressions on subsamples and Monte Carlo convergence diagnostics."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats

from .distributions import as_array
from .errors import DomainError, ParameterError
from .moments import summarize, summarize_for, taylor_ratio, theoretical_limit
from .rng import substream, tag

__all__ = [
    "TaylorPoint",
    "TaylorPoints",
    "TaylorRegression",
    "log_spaced_sizes",
    "taylor_points",
    "ols_fit",
    "convergence_diagnostic",
]


def log_spaced_sizes(n_min, n_max, count):
    """``count`` sizes evenly spaced in log between ``n_min`` and ``n_max``, rounded.

    Rounding can produce repeated sizes; they are kept.
    """
    if not (int(n_min) == n_min and int(n_max) == n_max and 1 <= n_min <= n_max):
        raise ParameterError(f"need integers 1 <= n_min <= n_max, got ({n_min}, {n_max})")
    if int(count) != count or count < 2:
        raise ParameterError(f"count must be an integer >= 2, got {count}")
    exps = np.linspace(math.log10(n_min), math.log10(n_max), int(count))
    sizes = np.rint(np.power(10.0, exps)).astype(np.int64)
    sizes[0], sizes[-1] = n_min, n_max
    return [int(s) for s in np.maximum.accumulate(sizes)]


class TaylorPoint(NamedTuple):
    size: int
    log_mean: float
    log_variance: float


class TaylorPoints(list):
    """List of :class:`TaylorPoint` that also records how many sizes were skipped."""

    def __init__(self, points=(), skipped=0, log_base=10.0):
        super().__init__(points)
        self.skipped = skipped
        self.log_base = log_base


def _log(x, base):
    return math.log(x) if base == math.e else math.log(x) / math.log(base)


def taylor_points(data, sizes, seed, log_base=10.0, threads=1):
    """(size, log mean, log variance) for one uniform subsample per size.

    Subsamples are drawn without replacement, independently across sizes,
    from the substream ``(seed, "subsample", index)``. A size equal to the
    sample size uses the full sample. Subsamples with zero variance are
    skipped and counted in ``skipped`` with a warning.
    """
    x = as_array(data)
    n = x.size
    if not log_base > 0 or log_base == 1:
        raise ParameterError(f"log base must be positive and not 1, got {log_base}")
    sizes = [int(s) for s in sizes]
    for s in sizes:
        if not 1 <= s <= n:
            raise ParameterError(f"subsample size {s} outside [1, {n}]")

    def one(i):
        s = sizes[i]
        if s == n:
            sub = x
        else:
            rng = substream(seed, tag("subsample"), i)
            sub = x[rng.choice(n, size=s, replace=False)]
        summ = summarize(sub)
        if not summ.variance > 0:
            return None
        return TaylorPoint(s, _log(summ.mean, log_base), _log(summ.variance, log_base))

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            found = list(pool.map(one, range(len(sizes))))
    else:
        found = [one(i) for i in range(len(sizes))]
    points = [p for p in found if p is not None]
    skipped = len(found) - len(points)
    if skipped:
        warnings.warn(f"skipped {skipped} zero-variance subsample(s)", RuntimeWarning, stacklevel=2)
    return TaylorPoints(points, skipped, log_base)


@dataclass
class TaylorRegression:
    """OLS fit of ``log V = log a + b log M`` with t-based coefficient intervals.

    ``ci95`` and ``ci99`` map ``"slope"`` and ``"intercept"`` to ``(low, high)``.
    """

    points: list
    slope: float
    intercept: float
    se_slope: float
    se_intercept: float
    ci95: dict
    ci99: dict
    r2: float
    adj_r2: float
    implied_alpha: Optional[float]
    log_base: float
    residual_sd: float = 0.0
    skipped: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "n_points": len(self.points), "slope": self.slope, "intercept": self.intercept,
            "se_slope": self.se_slope, "se_intercept": self.se_intercept,
            "ci95": {k: list(v) for k, v in self.ci95.items()},
            "ci99": {k: list(v) for k, v in self.ci99.items()},
            "r2": self.r2, "adj_r2": self.adj_r2, "implied_alpha": self.implied_alpha,
            "log_base": self.log_base, "residual_sd": self.residual_sd, "skipped": self.skipped,
        }


def ols_fit(points, log_base=None):
    """Simple linear regression of log variance on log mean.

    ``points`` holds ``(size, log_mean, log_variance)`` triples. Intervals use
    the t distribution with ``len(points) - 2`` degrees of freedom.
    """
    pts = [TaylorPoint(*p) for p in points]
    m = len(pts)
    if m < 3:
        raise DomainError(f"need at least 3 points for coefficient intervals, got {m}")
    xs = np.array([p.log_mean for p in pts])
    ys = np.array([p.log_variance for p in pts])
    xbar, ybar = xs.mean(), ys.mean()
    dx = xs - xbar
    sxx = float(dx @ dx)
    if not sxx > 0 or sxx <= 1e-24 * max(1.0, float(xs @ xs)):
        raise DomainError("log means have no spread; the slope is not identified")
    slope = float(dx @ (ys - ybar)) / sxx
    intercept = float(ybar - slope * xbar)
    resid = ys - (intercept + slope * xs)
    sse = float(resid @ resid)
    dy = ys - ybar
    sst = float(dy @ dy)
    df = m - 2
    s2 = sse / df
    se_b = math.sqrt(s2 / sxx)
    se_a = math.sqrt(s2 * (1.0 / m + xbar * xbar / sxx))
    r2 = 1.0 if sse == 0 else (1.0 - sse / sst if sst > 0 else float("nan"))
    adj = 1.0 - (1.0 - r2) * (m - 1) / df

    def ci(level):
        q = float(stats.t.ppf(0.5 + level / 2.0, df))
        return {"slope": (slope - q * se_b, slope + q * se_b),
                "intercept": (intercept - q * se_a, intercept + q * se_a)}

    implied = None if slope == 1 else (2.0 - slope) / (1.0 - slope)
    base = log_base if log_base is not None else getattr(points, "log_base", 10.0)
    return TaylorRegression(pts, slope, intercept, se_b, se_a, ci(0.95), ci(0.99), r2, adj,
                            implied, float(base), math.sqrt(s2), getattr(points, "skipped", 0))


def convergence_diagnostic(spec, limit, n_grid, replicates, seed, threads=1):
    """Per-n spread of ``taylor_ratio - theoretical_limit`` over independent replicates.

    Replicate ``r`` at size ``n`` is drawn from the substream
    ``(seed, "convergence", n, r)``. Replicates whose ratio is undefined are
    counted in ``failed`` and left out of the summaries.
    """
    target = theoretical_limit(limit)
    if int(replicates) != replicates or replicates < 1:
        raise ParameterError(f"replicates must be a positive integer, got {replicates}")
    R = int(replicates)
    rows = []
    for n in n_grid:
        n = int(n)

        def one(r, n=n):
            x = spec.generate(substream(seed, tag("convergence"), n, r), n)
            try:
                return taylor_ratio(summarize_for(x, limit), limit) - target
            except DomainError:
                return float("nan")

        if threads and threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                dev = np.array(list(pool.map(one, range(R))))
        else:
            dev = np.array([one(r) for r in range(R)])
        good = dev[np.isfinite(dev)]
        row = {"n": n, "limit": target, "deviations": dev.tolist(), "failed": int(R - good.size)}
        if good.size:
            q25, med, q75 = np.quantile(good, [0.25, 0.5, 0.75])
            row.update(median=float(med), q25=float(q25), q75=float(q75), iqr=float(q75 - q25),
                       median_abs=float(np.median(np.abs(good))))
        else:
            row.update(median=None, q25=None, q75=None, iqr=None, median_abs=None)
        rows.append(row)
    return rows
