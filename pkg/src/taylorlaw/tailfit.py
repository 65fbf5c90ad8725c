"""Tail-index estimation and parametric fits for heavy-tailed samples.

Hill convention used throughout, for order statistics
``X_(1) <= ... <= X_(n)`` and ``1 <= k <= n - 1``::

    alpha_hat(k) = 1 / mean_{i=1..k}( log X_(n-i+1) - log X_(n-k) )
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, special

from .distributions import as_array
from .errors import ConvergenceError, DegenerateError, DomainError, ParameterError
from .rng import substream, tag

__all__ = [
    "HillCurve",
    "FitResult",
    "hill",
    "hill_path",
    "alt_hill_curve",
    "empirical_survival",
    "fit_pareto_ls",
    "gpd_loglik",
    "fit_gpd_mle",
    "fit_negbinomial",
    "bootstrap_ci",
]


def _positive(data):
    x = as_array(data)
    if x.size == 0:
        raise DomainError("empty sample")
    if np.any(x <= 0):
        raise DomainError("Hill estimation needs strictly positive data")
    return x


def hill(data, k):
    """Hill estimate of the tail index from the top ``k`` order statistics."""
    x = _positive(data)
    n = x.size
    if int(k) != k or not 1 <= k <= n - 1:
        raise ParameterError(f"k must be an integer in [1, {n - 1}], got {k}")
    k = int(k)
    top = np.log(np.partition(x, n - k - 1)[n - k - 1:])
    ref = top.min()
    excess = float(np.mean(top[top.argsort()][1:] - ref))
    if excess <= 0:
        raise DegenerateError(f"the top {k} values all equal the threshold value")
    return 1.0 / excess


def hill_path(data):
    """Hill estimates for every ``k = 1 .. n-1`` (index ``k-1``); NaN where degenerate."""
    x = _positive(data)
    logs = np.log(np.sort(x))[::-1]
    return _hill_from_desc_logs(logs)


def _hill_from_desc_logs(logs):
    n = logs.size
    k = np.arange(1, n)
    csum = np.cumsum(logs[:-1])
    excess = csum / k - logs[1:]
    out = np.full(n - 1, np.nan)
    ok = logs[0] > logs[1:]  # not all of the top k tie with X_(n-k)
    out[ok] = 1.0 / excess[ok]
    return out


@dataclass
class HillCurve:
    """Alternative Hill plot: estimates indexed by ``theta`` with ``k = ceil(n**theta)``."""

    n: int
    thetas: np.ndarray
    ks: np.ndarray
    estimates: np.ndarray
    smoothed: np.ndarray
    ci_low: Optional[np.ndarray] = None
    ci_high: Optional[np.ndarray] = None
    level: Optional[float] = None
    degenerate: np.ndarray = field(default=None)

    def rows(self):
        """One dict per theta, NaN replaced by ``None``."""
        def val(a, i):
            if a is None or not np.isfinite(a[i]):
                return None
            return float(a[i])

        return [
            {"theta": float(t), "k": int(k), "hill": val(self.estimates, i),
             "smoothed": val(self.smoothed, i), "ci_low": val(self.ci_low, i),
             "ci_high": val(self.ci_high, i)}
            for i, (t, k) in enumerate(zip(self.thetas, self.ks))
        ]


def _ks_for(n, thetas):
    # ceil(n**theta) with a guard against 100**0.5 == 10.000000000000002
    raw = np.power(float(n), thetas)
    return np.ceil(raw - 1e-9 * raw).astype(np.int64)


def alt_hill_curve(data, thetas, bootstrap_B=0, level=0.99, seed=0, threads=1):
    """Hill and smoothed Hill estimates on a ``theta`` grid, optionally with bootstrap CIs.

    The smoothed value at ``theta`` averages the Hill estimates at
    ``k, k+1, ..., min(2k - 1, n - 1)`` where ``k = ceil(n**theta)``.
    Points whose ``k`` falls outside ``[1, n-1]`` or whose estimate is
    degenerate are NaN and flagged in ``degenerate``.
    """
    x = _positive(data)
    n = x.size
    if n < 2:
        raise DomainError("need at least two observations")
    thetas = np.asarray(thetas, dtype=float)
    if np.any(thetas <= 0) or np.any(thetas > 1) or np.any(np.diff(thetas) < 0):
        raise ParameterError("theta grid must be ascending within (0, 1]")
    if not 0 < level < 1:
        raise ParameterError("confidence level must lie in (0, 1)")
    ks = _ks_for(n, thetas)
    valid_k = (ks >= 1) & (ks <= n - 1)

    path = hill_path(x)
    estimates = np.full(thetas.size, np.nan)
    estimates[valid_k] = path[ks[valid_k] - 1]

    finite = np.isfinite(path)
    csum = np.concatenate([[0.0], np.cumsum(np.where(finite, path, 0.0))])
    ccount = np.concatenate([[0], np.cumsum(finite)])
    smoothed = np.full(thetas.size, np.nan)
    for i in np.flatnonzero(valid_k):
        lo = ks[i]
        hi = min(2 * ks[i] - 1, n - 1)
        cnt = ccount[hi] - ccount[lo - 1]
        if cnt:
            smoothed[i] = (csum[hi] - csum[lo - 1]) / cnt

    ci_low = ci_high = None
    if bootstrap_B:
        boot = _bootstrap_hill(x, ks, valid_k, int(bootstrap_B), seed, threads)
        q = (1.0 - level) / 2.0
        with np.errstate(all="ignore"):
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                ci_low = np.nanquantile(boot, q, axis=0)
                ci_high = np.nanquantile(boot, 1.0 - q, axis=0)
    return HillCurve(n, thetas, ks, estimates, smoothed, ci_low, ci_high,
                     level if bootstrap_B else None, ~np.isfinite(estimates))


def _bootstrap_hill(x, ks, valid_k, B, seed, threads):
    n = x.size
    logs = np.log(x)
    kk = ks[valid_k]

    def one(b):
        rng = substream(seed, tag("hill-bootstrap"), b)
        res = np.sort(logs[rng.integers(0, n, n)])[::-1]
        out = np.full(ks.size, np.nan)
        csum = np.cumsum(res)
        excess = csum[kk - 1] / kk - res[kk]
        ok = res[0] > res[kk]
        vals = np.full(kk.size, np.nan)
        vals[ok] = 1.0 / excess[ok]
        out[valid_k] = vals
        return out

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, range(B)))
    else:
        rows = [one(b) for b in range(B)]
    return np.vstack(rows)


def empirical_survival(data):
    """Empirical survival at each distinct value, as ``(values, log_survival)``.

    Survival at value ``v`` is ``#{X > v} / n``; the top value (survival 0)
    is left out because its log is undefined.
    """
    x = np.sort(as_array(data))
    n = x.size
    if n == 0:
        raise DomainError("empty sample")
    values, first = np.unique(x, return_index=True)
    above = n - np.concatenate([first[1:], [n]])
    keep = above > 0
    return values[keep], np.log(above[keep] / n)


@dataclass
class FitResult:
    """Outcome of a parametric fit.

    ``params`` keys: ParetoLS ``x_min, alpha``; GPD ``threshold, shape, scale``;
    NegBinomial ``size, mean``.
    """

    family: str
    params: dict
    implied_tail_index: Optional[float]
    loglik_or_sse: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"family": self.family, "params": dict(self.params),
                "implied_tail_index": self.implied_tail_index,
                "loglik_or_sse": self.loglik_or_sse, "diagnostics": dict(self.diagnostics)}


def fit_pareto_ls(data):
    """Least-squares fit of ``log S(x) = alpha log x_min - alpha log x``."""
    x = as_array(data)
    if np.any(x <= 0):
        raise DomainError("Pareto fit needs positive data")
    if np.unique(x).size < 3:
        raise DomainError("Pareto least squares needs at least 3 distinct values")
    values, log_s = empirical_survival(x)
    lx = np.log(values)
    slope, intercept = np.polyfit(lx, log_s, 1)
    resid = log_s - (intercept + slope * lx)
    alpha = -slope
    x_min = math.exp(intercept / alpha) if alpha != 0 else float("nan")
    return FitResult("pareto_ls", {"x_min": float(x_min), "alpha": float(alpha)},
                     float(alpha), float(resid @ resid), {"points": int(lx.size)})


# --- generalized Pareto --------------------------------------------------------

def gpd_loglik(excess, shape, scale):
    """GPD log-likelihood of positive excesses; ``-inf`` outside the support."""
    y = np.asarray(excess, dtype=float)
    if not scale > 0:
        return -np.inf
    z = shape * y / scale
    if np.any(z <= -1):
        return -np.inf
    n = y.size
    if abs(shape) < 1e-10:
        # expansion of (1 + 1/xi) log1p(xi y / s) around xi = 0
        t = y / scale
        return float(-n * math.log(scale) - np.sum(t) + shape * np.sum(t * t) / 2 - shape * np.sum(t))
    return float(-n * math.log(scale) - (1.0 + 1.0 / shape) * np.sum(np.log1p(z)))


def _profile_scale(y, shape):
    """Scale maximizing the GPD likelihood for fixed shape (unique root of the score)."""
    n = y.size
    ymax = y.max()
    if abs(shape) < 1e-12:
        return float(y.mean())

    def score(s):
        return (1.0 + shape) * np.sum(y / (s + shape * y)) - n

    lo = max(0.0, -shape * ymax) * (1 + 1e-12) + 1e-300
    hi = max(ymax, y.mean()) * (1 + abs(shape)) + 1.0
    while score(hi) > 0:
        hi *= 2.0
    if score(lo) <= 0:
        return lo
    return float(optimize.brentq(score, lo, hi, xtol=1e-14 * hi, rtol=1e-14, maxiter=500))


def fit_gpd_mle(data, threshold, shape_bounds=(-0.9, 5.0), grid=200, max_iter=500):
    """Peaks-over-threshold GPD fit by profile likelihood in the shape.

    For each shape the scale solves its score equation exactly; the profile
    is scanned on a grid over ``shape_bounds`` and the best bracket refined by
    golden-section search.
    """
    x = as_array(data)
    y = x[x > threshold] - threshold
    if y.size < 30:
        raise DomainError(f"only {y.size} exceedances above threshold {threshold}; need at least 30")

    def neg_profile(xi):
        return -gpd_loglik(y, xi, _profile_scale(y, xi))

    xs = np.linspace(shape_bounds[0], shape_bounds[1], grid)
    vals = np.array([neg_profile(v) for v in xs])
    i = int(np.nanargmin(vals))
    diag = {"exceedances": int(y.size), "grid_best_shape": float(xs[i])}
    if i == 0 or i == grid - 1:
        raise ConvergenceError("profile likelihood optimum lies on the shape search boundary",
                               dict(diag, bounds=list(shape_bounds)))
    try:
        res = optimize.minimize_scalar(neg_profile, bracket=(xs[i - 1], xs[i], xs[i + 1]),
                                       method="golden", tol=1e-10, options={"maxiter": max_iter})
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(f"golden-section refinement failed: {exc}", diag) from exc
    if not res.success:
        raise ConvergenceError("golden-section refinement did not converge",
                               dict(diag, iterations=int(res.nit), message=str(res.message)))
    xi = float(res.x)
    sigma = _profile_scale(y, xi)
    ll = gpd_loglik(y, xi, sigma)
    diag["iterations"] = int(res.nit)
    return FitResult("gpd", {"threshold": float(threshold), "shape": xi, "scale": float(sigma)},
                     1.0 / xi if xi > 0 else None, ll, diag)


# --- negative binomial -----------------------------------------------------------

def fit_negbinomial(counts, tol=1e-10, max_iter=200):
    """Maximum-likelihood negative binomial fit in the (size r, mean m) parameterization.

    The mean MLE is the sample mean; ``r`` solves the profile score by
    safeguarded Newton steps in ``log r`` from the method-of-moments start
    ``m**2 / (v - m)``.
    """
    x = as_array(counts)
    if np.any(x != np.round(x)) or np.any(x < 0):
        raise DomainError("negative binomial fit needs nonnegative integer counts")
    n = x.size
    m = float(np.mean(x))
    v = float(np.mean((x - m) ** 2))
    if not v > m:
        raise DomainError(f"data are not over-dispersed (variance {v:.6g} <= mean {m:.6g})")
    r0 = m * m / (v - m)
    vals, cnt = np.unique(x, return_counts=True)

    def score(r):
        return float(cnt @ special.digamma(vals + r)) - n * special.digamma(r) + n * math.log(r / (r + m))

    def dscore(r):
        return float(cnt @ special.polygamma(1, vals + r)) - n * special.polygamma(1, r) + n * m / (r * (r + m))

    # score > 0 means the likelihood still increases in r
    lo, hi = None, None
    u = math.log(r0)
    for it in range(max_iter):
        r = math.exp(u)
        s = score(r)
        if s > 0:
            lo = u if lo is None else max(lo, u)
        else:
            hi = u if hi is None else min(hi, u)
        step = s / (dscore(r) * r)  # Newton in u = log r
        u_new = u - step
        if lo is not None and hi is not None and not lo < u_new < hi:
            u_new = 0.5 * (lo + hi)
        elif abs(u_new - u) > 2.0:
            u_new = u + math.copysign(2.0, u_new - u)
        if abs(u_new - u) < tol:
            u = u_new
            break
        u = u_new
    else:
        raise ConvergenceError("negative binomial size did not converge",
                               {"r0": r0, "last_r": math.exp(u), "iterations": max_iter})
    r = math.exp(u)
    ll = float(cnt @ (special.gammaln(vals + r) - special.gammaln(vals + 1))) - n * special.gammaln(r) \
        + n * r * math.log(r / (r + m)) + float(cnt @ vals) * math.log(m / (r + m))
    return FitResult("negbinomial", {"size": r, "mean": m}, None, ll,
                     {"r0": r0, "iterations": it + 1})


def bootstrap_ci(data, estimator, B=500, level=0.99, seed=0, threads=1):
    """Percentile bootstrap interval for ``estimator(resample)``.

    Replicates whose estimator raises a library error are dropped and
    counted in the returned dict.
    """
    x = as_array(data)
    n = x.size

    def one(b):
        rng = substream(seed, tag("bootstrap"), b)
        try:
            return float(estimator(x[rng.integers(0, n, n)]))
        except (DomainError, ConvergenceError):
            return float("nan")

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            est = np.array(list(pool.map(one, range(B))))
    else:
        est = np.array([one(b) for b in range(B)])
    good = est[np.isfinite(est)]
    q = (1 - level) / 2
    if good.size == 0:
        raise DomainError("every bootstrap replicate failed")
    return {"low": float(np.quantile(good, q)), "high": float(np.quantile(good, 1 - q)),
            "level": level, "replicates": B, "failed": int(B - good.size)}
