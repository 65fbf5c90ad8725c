"""Truncation thresholds, truncated moments and a Monte Carlo probe of weak dependence.

For a tail ``P(X > x) = x**-alpha l(x)`` and a slowly growing sequence
``c_n`` the two thresholds are the roots of

    T:  n c_n l(t) / t**alpha = 1
    V:  n l(v) / v**alpha = c_n

Everything is computed on the log scale, so ``l`` enters only through
``log l(log x)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError, ParameterError, SolverError
from .rng import substream, tag

__all__ = [
    "C_RULES",
    "register_c_rule",
    "c_value",
    "solve_log_threshold",
    "solve_threshold",
    "truncated_moment_theory",
    "log_truncated_moment_theory",
    "truncated_moment_exact",
    "AsymptoticContext",
    "condition_a_probe",
]

C_RULES: dict[str, Callable[[int], float]] = {
    "log": lambda n: math.log(n),
    "loglog": lambda n: math.log(math.log(n)),
    "sqrtlog": lambda n: math.sqrt(math.log(n)),
}


def register_c_rule(name, fn):
    """Add a named ``c_n`` sequence. It must be positive with ``log c_n = o(log n)``."""
    if not callable(fn):
        raise ParameterError("c rule must be callable")
    C_RULES[name] = fn


def c_value(n, rule="log"):
    try:
        fn = C_RULES[rule]
    except KeyError:
        raise ParameterError(f"unknown c_n rule {rule!r}; known: {sorted(C_RULES)}") from None
    c = float(fn(n))
    if not c > 0:
        raise DomainError(f"c_n must be positive; rule {rule!r} gives {c} at n={n}")
    return c


def _log_gap(model, log_x, log_target):
    # log(x**-alpha l(x)) - log_target, decreasing in x for large x
    return float(model.log_l(log_x)) - model.alpha * log_x - log_target


def solve_log_threshold(model, log_target, max_doublings=1000, tol=1e-10):
    """``log x`` solving ``l(x) / x**alpha = exp(log_target)`` above ``x_min``.

    Bisection in ``log x`` over a bracket whose width doubles until the gap
    changes sign. Stops once ``|exp(gap) - 1| <= tol``.
    """
    lo = math.log(model.x_min)
    g_lo = _log_gap(model, lo, log_target)
    if not g_lo > 0:
        raise SolverError("no root above x_min: the tail is already below the target there",
                          {"log_x_min": lo, "gap": g_lo})
    width = 1.0
    hi = lo + width
    g_hi = _log_gap(model, hi, log_target)
    doublings = 0
    while g_hi > 0:
        doublings += 1
        if doublings > max_doublings:
            raise SolverError("no sign change found while expanding the bracket",
                              {"doublings": doublings, "log_hi": hi})
        lo, g_lo = hi, g_hi
        width *= 2.0
        hi = lo + width
        if not math.isfinite(hi):
            raise SolverError("bracket overflowed", {"doublings": doublings})
        g_hi = _log_gap(model, hi, log_target)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        g = _log_gap(model, mid, log_target)
        if abs(math.expm1(g)) <= tol:
            return mid
        if g > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * math.ulp(max(abs(lo), abs(hi))):
            break
    g = _log_gap(model, mid, log_target)
    if abs(math.expm1(g)) <= tol:
        return mid
    raise SolverError("bisection stalled before reaching the residual tolerance",
                      {"log_x": mid, "residual": math.expm1(g)})


def solve_threshold(model, n, target="T", c_rule="log"):
    """``t_n`` (``target="T"``) or ``v_n`` (``target="V"``) for ``model`` at sample size ``n``."""
    if n < 2:
        raise ParameterError("threshold needs n >= 2")
    c = c_value(n, c_rule)
    if target == "T":
        log_target = -math.log(n) - math.log(c)
    elif target == "V":
        log_target = math.log(c) - math.log(n)
    else:
        raise ParameterError(f"target must be 'T' or 'V', got {target!r}")
    return math.exp(solve_log_threshold(model, log_target))


def log_truncated_moment_theory(model, p, log_t):
    """Log of ``alpha/(p-alpha) t**(p-alpha) l(t)``."""
    a = model.alpha
    if not p > a:
        raise DomainError(f"truncated moment asymptotics need p > alpha (p={p}, alpha={a})")
    return math.log(a / (p - a)) + (p - a) * log_t + float(model.log_l(log_t))


def truncated_moment_theory(model, p, t):
    """Leading-order ``E[X**p 1(X < t)]``: ``alpha/(p-alpha) * t**(p-alpha) * l(t)``."""
    if not t > model.x_min:
        raise ParameterError(f"t must exceed x_min={model.x_min}")
    return math.exp(log_truncated_moment_theory(model, p, math.log(t)))


def truncated_moment_exact(model, p, t, conditional=False):
    """``E[X**p 1(X < t)]`` by numerical integration of the model's survival.

    Uses ``E = x_min**p - t**p S(t) + int_{x_min}^t p x**(p-1) S(x) dx`` with
    the integral taken over ``log x``. ``conditional=True`` divides by
    ``P(X < t)``, giving ``E[X**p | X < t]``.
    """
    if not p > 0:
        raise ParameterError("moment order must be positive")
    if not t > model.x_min:
        raise ParameterError(f"t must exceed x_min={model.x_min}")
    y0, y1 = math.log(model.x_min), math.log(t)
    log_s1 = float(model.log_survival(t))
    # scale so the integrand peaks near 1 at either end
    shift = max(p * y0, p * y1 + log_s1)

    def f(y):
        return p * math.exp(p * y + float(model.log_survival(math.exp(y))) - shift)

    integral, _ = integrate.quad(f, y0, y1, limit=500, epsabs=0.0, epsrel=1e-12)
    value = math.exp(shift) * (math.exp(p * y0 - shift) - math.exp(p * y1 + log_s1 - shift) + integral)
    if conditional:
        value /= -math.expm1(log_s1)
    return value


@dataclass(frozen=True)
class AsymptoticContext:
    """Thresholds and derived sequences for one model at one sample size."""

    model: object
    n: int
    p: float
    c_rule: str
    c_n: float
    t_n: float
    v_n: float
    delta_prime: float
    d_n1: float
    b_n: float
    b_tilde_n: float

    @classmethod
    def build(cls, model, n, p=2.0, c_rule="log", delta_prime=None):
        """Solve both thresholds; ``delta_prime`` defaults to ``2 (p/alpha - 1) * 1.1``."""
        a = model.alpha
        if delta_prime is None:
            delta_prime = 2.0 * (p / a - 1.0) * 1.1
        if not delta_prime > 0:
            raise ParameterError("delta_prime must be positive")
        c = c_value(n, c_rule)
        t = solve_threshold(model, n, "T", c_rule)
        v = solve_threshold(model, n, "V", c_rule)
        d1 = truncated_moment_exact(model, 1.0, t)
        return cls(model, int(n), float(p), c_rule, c, t, v, float(delta_prime), d1,
                   d1 / c ** (2 * delta_prime), d1 * c)

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("n", "p", "c_rule", "c_n", "t_n", "v_n", "delta_prime", "d_n1", "b_n", "b_tilde_n")}


def _truncated_powers(x, v, p):
    y = np.where(x < v, x, 0.0)
    return y * y if p == 2 else y**p


def condition_a_probe(spec, p, n_grid, replicates=400, seed=0, c_rule="log", threads=1):
    """Monte Carlo estimate of ``sum_{i != j} Cov(Y_i, Y_j) / (v_n**(2p) c_n**2)``.

    ``Y_i = (X_i 1(X_i < v_n))**p`` and ``v_n`` is solved from the marginal
    tail of ``spec``. With ``S_r`` the replicate sums, the covariance sum is
    ``Var(S) - sum_i Var(Y_i)``; both are estimated from replicate-mean
    centred values, so the estimator is the mean of
    ``D_r = (S_r - S_bar)**2 - sum_i (Y_ri - Y_bar_i)**2`` times ``R / (R - 1)``.
    Replicates are regenerated in a second pass instead of being stored.

    Verdict: ``"zero"`` when every estimate is within 3 standard errors of 0,
    ``"decreasing"`` when the ratios strictly decrease along the grid,
    ``"inconclusive"`` otherwise.
    """
    if replicates < 10:
        raise DomainError(f"probe needs at least 10 replicates for a usable standard error, got {replicates}")
    grid = [int(n) for n in n_grid]
    if any(n < 2 for n in grid):
        raise ParameterError("every n in the grid must be at least 2")
    R = int(replicates)
    rows = []
    for n in grid:
        model = spec.marginal_tail(n)
        c = c_value(n, c_rule)
        v = solve_threshold(model, n, "V", c_rule)

        def draw(r, n=n, v=v):
            x = np.asarray(spec.generate(substream(seed, tag("condition-a"), n, r), n), dtype=float)
            return _truncated_powers(x, v, p)

        sums = np.zeros(R)
        mean_y = np.zeros(n)
        for r, y in enumerate(_map(draw, R, threads)):
            sums[r] = y.sum()
            mean_y += y
        mean_y /= R
        s_bar = sums.mean()

        def dev(r, mean_y=mean_y, draw=draw):
            y = draw(r)
            d = y - mean_y
            return float(d @ d)

        within = np.fromiter(_map(dev, R, threads), dtype=float, count=R)
        d_r = (sums - s_bar) ** 2 - within
        est = float(d_r.sum() / (R - 1))
        se = float(d_r.std(ddof=1) / math.sqrt(R) * R / (R - 1))
        scale = v ** (2 * p) * c * c
        rows.append({"n": n, "c_n": c, "v_n": v, "estimate": est, "se": se,
                     "ratio": est / scale, "ratio_se": se / scale,
                     "zero_within_3se": abs(est) <= 3 * se})
    ratios = [r["ratio"] for r in rows]
    if all(r["zero_within_3se"] for r in rows):
        verdict = "zero"
    elif len(ratios) > 1 and all(b < a for a, b in zip(ratios, ratios[1:])):
        verdict = "decreasing"
    else:
        verdict = "inconclusive"
    return {"p": p, "replicates": R, "c_rule": c_rule, "rows": rows, "verdict": verdict}


def _map(fn, count, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            yield from pool.map(fn, range(count))
    else:
        for r in range(count):
            yield fn(r)
