"""Samplers for regularly varying laws and the dependent processes built on them.

A marginal law is any object with ``sample(rng, n)`` and ``tail_model()``; the
latter returns the :class:`TailModel` whose survival function matches the law
in the upper tail (exactly for :class:`TailModel` itself). Process specs are
small frozen dataclasses with ``generate(rng, n)`` and ``marginal_tail(n)``.

All samplers are pure functions of ``(spec, n, seed, replicate_id)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Union

import numpy as np
from scipy import signal, special

from .errors import ParameterError
from .rng import substream

__all__ = [
    "SlowlyVarying",
    "TailModel",
    "StableLaw",
    "ExponentialLaw",
    "IID",
    "AR1",
    "Equicorrelated",
    "GaussianModulated",
    "Heterogeneous",
    "SampleSet",
    "pareto_ppf",
    "stable_from_uniforms",
    "f1_cdf",
    "levy_cdf",
    "ar1_recursion",
    "sample_pareto",
    "sample_stable_one_sided",
    "sample_f1",
    "sample_process",
]

_SV_KINDS = ("constant", "log_times_e", "pow_log", "exp_log_beta")


@dataclass(frozen=True)
class SlowlyVarying:
    """Slowly varying factor ``l`` of a survival function ``x**-alpha * l(x)``.

    kind
        ``"constant"``: ``l(x) = c``.
        ``"log_times_e"``: ``l(x) = e * alpha * log(x)``.
        ``"pow_log"``: ``l(x) = log(x)**beta``.
        ``"exp_log_beta"``: ``l(x) = exp(sign * log(x)**beta)``, ``0 < beta < 1``.
    """

    kind: str = "constant"
    c: float = 1.0
    beta: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if self.kind not in _SV_KINDS:
            raise ParameterError(f"unknown slowly varying kind {self.kind!r}")
        if self.kind == "constant" and not self.c > 0:
            raise ParameterError("constant slowly varying factor needs c > 0")
        if self.kind == "exp_log_beta":
            if not 0 < self.beta < 1:
                raise ParameterError("exp_log_beta needs beta in (0, 1)")
            if self.sign not in (1, -1):
                raise ParameterError("exp_log_beta sign must be +1 or -1")

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", c=c)

    @classmethod
    def log_times_e(cls):
        return cls("log_times_e")

    @classmethod
    def pow_log(cls, beta):
        return cls("pow_log", beta=beta)

    @classmethod
    def exp_log_beta(cls, sign, beta):
        return cls("exp_log_beta", beta=beta, sign=sign)

    def log_value(self, log_x, alpha):
        """``log l(x)`` as a function of ``log x`` (NaN/-inf where undefined)."""
        y = np.asarray(log_x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "constant":
                return np.full_like(y, math.log(self.c))
            if self.kind == "log_times_e":
                return 1.0 + math.log(alpha) + np.log(y)
            if self.kind == "pow_log":
                return self.beta * np.log(y)
            return self.sign * np.power(y, self.beta)


@dataclass(frozen=True)
class TailModel:
    """Survival function ``P(X > x) = K * x**-alpha * l(x)`` on ``[x_min, inf)``.

    ``K`` normalizes the survival to 1 at ``x_min``, so the model is always a
    proper sampling law. :meth:`log_l` returns the log of the normalized
    slowly varying factor ``K * l(x)``, which is what the truncation machinery
    uses.
    """

    alpha: float
    slowly_varying: SlowlyVarying = field(default_factory=SlowlyVarying)
    x_min: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"tail index alpha must be positive, got {self.alpha}")
        if not (self.x_min > 0 and math.isfinite(self.x_min)):
            raise ParameterError(f"x_min must be positive, got {self.x_min}")
        raw0 = float(self.slowly_varying.log_value(math.log(self.x_min), self.alpha))
        if not math.isfinite(raw0):
            raise ParameterError(f"slowly varying factor is undefined at x_min={self.x_min}")
        # survival must be nonincreasing from x_min on
        y0 = math.log(self.x_min)
        grid = y0 + np.concatenate([[0.0], np.geomspace(1e-6, 700.0, 4000)])
        ls = self._raw_log_survival(grid)
        if not np.all(np.isfinite(ls)) or np.any(np.diff(ls) > 1e-12):
            raise ParameterError(
                "survival function is not nonincreasing on [x_min, inf); raise x_min"
            )

    @classmethod
    def pareto(cls, x_min=1.0, alpha=1.0):
        """Pareto law ``P(X > x) = (x / x_min)**-alpha``."""
        return cls(alpha, SlowlyVarying.constant(), x_min)

    @classmethod
    def f1(cls, alpha):
        """The law ``F(x) = 1 - e*alpha*x**-alpha*log(x)`` on ``x >= exp(1/alpha)``."""
        return cls(alpha, SlowlyVarying.log_times_e(), math.exp(1.0 / alpha))

    def _raw_log_survival(self, log_x):
        y = np.asarray(log_x, dtype=float)
        return -self.alpha * y + self.slowly_varying.log_value(y, self.alpha)

    @property
    def log_norm(self):
        """``log K``: the constant that makes ``survival(x_min) == 1``."""
        return -float(self._raw_log_survival(math.log(self.x_min)))

    def log_l(self, log_x):
        """Log of the normalized slowly varying factor, as a function of ``log x``."""
        return self.slowly_varying.log_value(log_x, self.alpha) + self.log_norm

    def log_survival(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            y = np.log(np.maximum(x, self.x_min))
        return np.where(x < self.x_min, 0.0, self._raw_log_survival(y) + self.log_norm)

    def survival(self, x):
        return np.exp(self.log_survival(x))

    def cdf(self, x):
        return -np.expm1(self.log_survival(x))

    def tail_model(self):
        return self

    @property
    def is_pareto(self):
        return self.slowly_varying.kind == "constant"

    @property
    def is_f1(self):
        return self.slowly_varying.kind == "log_times_e" and math.isclose(
            self.x_min, math.exp(1.0 / self.alpha), rel_tol=1e-12
        )

    def sample(self, rng, n):
        if self.is_pareto:
            return pareto_ppf(rng.random(n), self.x_min, self.alpha)
        if self.is_f1 and self.alpha > 0.05:
            return _f1_accept_reject(rng, n, self.alpha)
        return _invert_survival(self, rng.random(n))

    def to_dict(self):
        return {"law": "tail_model", "alpha": self.alpha, "x_min": self.x_min,
                "slowly_varying": asdict(self.slowly_varying)}


@dataclass(frozen=True)
class StableLaw:
    """Totally skewed stable law on ``[0, inf)`` with Laplace transform ``exp(-(c s)**alpha)``."""

    c: float = 1.0
    alpha: float = 0.5

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterError(f"one-sided stable law needs alpha in (0, 1), got {self.alpha}")
        if not self.c > 0:
            raise ParameterError(f"stable scale c must be positive, got {self.c}")

    def sample(self, rng, n):
        u = rng.random(n)
        e = rng.standard_exponential(n)
        return stable_from_uniforms(u, e, self.c, self.alpha)

    def tail_model(self):
        # P(X > x) ~ c**alpha / Gamma(1 - alpha) * x**-alpha
        const = self.c**self.alpha / math.gamma(1.0 - self.alpha)
        return TailModel(self.alpha, SlowlyVarying.constant(), const ** (1.0 / self.alpha))

    def to_dict(self):
        return {"law": "stable", "c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class ExponentialLaw:
    """Light-tailed exponential law; used where finite variance is required."""

    scale: float = 1.0

    @property
    def variance(self):
        return self.scale**2

    def sample(self, rng, n):
        return self.scale * rng.standard_exponential(n)

    def tail_model(self):
        raise ParameterError("the exponential law is not regularly varying")

    def to_dict(self):
        return {"law": "exponential", "scale": self.scale}


Law = Union[TailModel, StableLaw, ExponentialLaw]


# --- elementary transforms -------------------------------------------------


def pareto_ppf(u, x_min, alpha):
    """Inverse CDF of Pareto(x_min, alpha): ``x_min * (1 - u)**(-1/alpha)``."""
    if not (x_min > 0 and alpha > 0):
        raise ParameterError(f"Pareto needs x_min > 0 and alpha > 0, got ({x_min}, {alpha})")
    return x_min * np.power(1.0 - np.asarray(u, dtype=float), -1.0 / alpha)


def stable_from_uniforms(u, e, c, alpha):
    """Kanter's representation of the positive stable law.

    ``u`` are uniforms on [0, 1) mapped to an angle in (0, pi); ``e`` are
    standard exponentials. For ``c = 1`` the result has Laplace transform
    ``exp(-s**alpha)``.
    """
    theta = np.pi * (1.0 - np.asarray(u, dtype=float))  # (0, pi]
    theta = np.minimum(theta, np.nextafter(np.pi, 0.0))
    a = np.sin(alpha * theta) / np.sin(theta) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * theta) / np.asarray(e, dtype=float)) ** ((1.0 - alpha) / alpha)
    return c * a * b


def f1_cdf(x, alpha):
    """``1 - e*alpha*x**-alpha*log(x)`` for ``x >= exp(1/alpha)``, 0 below."""
    x = np.asarray(x, dtype=float)
    xm = math.exp(1.0 / alpha)
    xs = np.maximum(x, xm)
    return np.where(x < xm, 0.0, 1.0 - math.e * alpha * xs ** (-alpha) * np.log(xs))


def levy_cdf(x, c=1.0):
    """CDF of the alpha = 1/2 positive stable law with LT ``exp(-sqrt(c s))``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(x > 0, special.erfc(np.sqrt(c / (4.0 * np.maximum(x, 1e-300)))), 0.0)


def ar1_recursion(noise, beta1, burn_in=0):
    """``X_t = beta1 * X_{t-1} + eps_t`` from ``X_0 = 0``; drops the first ``burn_in`` values."""
    noise = np.asarray(noise, dtype=float)
    x = signal.lfilter([1.0], [1.0, -beta1], noise)
    return x[burn_in:]


def _f1_envelope(alpha, delta=0.05):
    """Exact sup of target density / proposal density for the F1 sampler.

    With y = log x the ratio is ``C * exp(-delta*y) * (alpha*y - 1)``, which
    peaks at ``y = 1/alpha + 1/delta``.
    """
    a2 = alpha - delta
    y_m = 1.0 / alpha
    const = math.e * alpha / (a2 * math.exp(a2 * y_m))
    y_star = 1.0 / alpha + 1.0 / delta
    return const, const * math.exp(-delta * y_star) * alpha / delta


def _f1_accept_reject(rng, n, alpha, delta=0.05):
    const, envelope = _f1_envelope(alpha, delta)
    xm = math.exp(1.0 / alpha)
    out = np.empty(n)
    filled = 0
    batch = max(64, int(1.3 * n * envelope))
    while filled < n:
        x = pareto_ppf(rng.random(batch), xm, alpha - delta)
        y = np.log(x)
        ratio = const * np.exp(-delta * y) * (alpha * y - 1.0)
        assert np.all(ratio <= envelope * (1 + 1e-9)), "F1 envelope violated"
        keep = x[rng.random(batch) * envelope <= ratio]
        take = min(n - filled, keep.size)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def _invert_survival(model, u, iterations=200):
    """Vectorized bisection on ``log x`` for ``survival(x) = 1 - u``."""
    target = np.log1p(-np.asarray(u, dtype=float))
    lo = np.full(target.shape, math.log(model.x_min))
    width = 1.0
    hi_val = lambda w: model._raw_log_survival(lo[0] + w) + model.log_norm  # noqa: E731
    while target.size and hi_val(width) > target.min():
        width *= 2.0
        if width > 1e6:
            raise ParameterError("could not bracket the quantile; survival decays too slowly")
    hi = lo + width
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        above = model._raw_log_survival(mid) + model.log_norm > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 4e-16 * np.abs(hi)):
            break
    return np.exp(0.5 * (lo + hi))


# --- process specs --------------------------------------------------------------


@dataclass(frozen=True)
class IID:
    """Independent draws from one marginal law."""

    law: Any

    def generate(self, rng, n):
        return self.law.sample(rng, n)

    def marginal_tail(self, n=None):
        return self.law.tail_model()

    def to_dict(self):
        return {"kind": "iid", "law": self.law.to_dict()}


@dataclass(frozen=True)
class AR1:
    """Stationary AR(1) ``X_t = beta1 X_{t-1} + eps_t`` with i.i.d. nonnegative noise."""

    beta1: float
    noise: Any
    burn_in: int = 10_000

    def __post_init__(self):
        if not 0 < self.beta1 < 1:
            raise ParameterError(f"AR(1) coefficient must lie in (0, 1), got {self.beta1}")
        if self.burn_in < 0:
            raise ParameterError("burn_in must be nonnegative")

    def generate(self, rng, n):
        eps = self.noise.sample(rng, n + self.burn_in)
        return ar1_recursion(eps, self.beta1, self.burn_in)

    def marginal_tail(self, n=None):
        # sum_k P(beta^k eps > x) ~ x^-alpha l(x) / (1 - beta^alpha)
        m = self.noise.tail_model()
        factor = 1.0 / (1.0 - self.beta1**m.alpha)
        return _rescaled(m, factor)

    def to_dict(self):
        return {"kind": "ar1", "beta1": self.beta1, "burn_in": self.burn_in,
                "noise": self.noise.to_dict()}


@dataclass(frozen=True)
class Equicorrelated:
    """``X_i = |Z_i|**(-1/alpha)`` with ``Z_i = sqrt(rho) N_0 + sqrt(1-rho) N_i``."""

    alpha: float
    rho: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if not 0 <= self.rho < 1:
            raise ParameterError(f"rho must lie in [0, 1), got {self.rho}")

    def generate(self, rng, n):
        n0 = rng.standard_normal()
        z = math.sqrt(self.rho) * n0 + math.sqrt(1.0 - self.rho) * rng.standard_normal(n)
        with np.errstate(divide="ignore"):
            return np.abs(z) ** (-1.0 / self.alpha)

    def marginal_tail(self, n=None):
        # P(|Z| < x^-alpha) ~ sqrt(2/pi) x^-alpha
        const = math.sqrt(2.0 / math.pi)
        return TailModel(self.alpha, SlowlyVarying.constant(), const ** (1.0 / self.alpha))

    def to_dict(self):
        return {"kind": "equicorrelated", "alpha": self.alpha, "rho": self.rho}


@dataclass(frozen=True)
class GaussianModulated:
    """``X_i = Z_i * exp(G_i)``: Pareto(1, alpha) ``Z`` times a log-normal field.

    ``G`` is a stationary unit-variance Gaussian AR(1) with lag-one coefficient
    ``exp(-1/decay_length)``, so ``Cov(G_i, G_j) = exp(-|i-j|/decay_length)``.
    """

    alpha: float
    decay_length: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if not self.decay_length > 0:
            raise ParameterError(f"decay_length must be positive, got {self.decay_length}")

    def gaussian_field(self, rng, n):
        phi = math.exp(-1.0 / self.decay_length)
        innov = rng.standard_normal(n)
        innov[1:] *= math.sqrt(-math.expm1(-2.0 / self.decay_length))
        return signal.lfilter([1.0], [1.0, -phi], innov)

    def generate(self, rng, n):
        g = self.gaussian_field(rng, n)
        z = pareto_ppf(rng.random(n), 1.0, self.alpha)
        return z * np.exp(g)

    def marginal_tail(self, n=None):
        # P(Z e^G > x) = x^-alpha E[e^{alpha G}] for large x
        const = math.exp(0.5 * self.alpha**2)
        return TailModel(self.alpha, SlowlyVarying.constant(), const ** (1.0 / self.alpha))

    def to_dict(self):
        return {"kind": "gaussian_modulated", "alpha": self.alpha,
                "decay_length": self.decay_length}


@dataclass(frozen=True)
class Heterogeneous:
    """Binomial(n, p_star) draws from ``model_u`` mixed with the rest from ``model_v``."""

    p_star: float
    model_u: Any
    model_v: Any

    def __post_init__(self):
        if not 0 < self.p_star <= 1:
            raise ParameterError(f"p_star must lie in (0, 1], got {self.p_star}")
        if not _tail_alpha(self.model_u) < _tail_alpha(self.model_v):
            raise ParameterError("model_u must have the smaller tail index (the heavier tail)")

    def generate(self, rng, n):
        u_n = int(rng.binomial(n, self.p_star))
        x = np.concatenate([self.model_u.sample(rng, u_n), self.model_v.sample(rng, n - u_n)])
        rng.shuffle(x)
        return x

    def marginal_tail(self, n=None):
        return _rescaled(self.model_u.tail_model(), self.p_star)

    def to_dict(self):
        return {"kind": "heterogeneous", "p_star": self.p_star,
                "model_u": self.model_u.to_dict(), "model_v": self.model_v.to_dict()}


def _tail_alpha(law):
    return law.alpha


def _rescaled(model, factor):
    """Constant-factor TailModel whose upper tail is ``factor`` times ``model``'s.

    Only the tail matters to the truncation solver, so non-constant factors
    keep their shape and absorb ``factor`` into ``x_min``.
    """
    if model.is_pareto:
        const = factor * model.x_min**model.alpha
        return TailModel(model.alpha, SlowlyVarying.constant(), const ** (1.0 / model.alpha))
    return _ScaledTail(model, factor)


@dataclass(frozen=True)
class _ScaledTail:
    base: TailModel
    factor: float

    @property
    def alpha(self):
        return self.base.alpha

    @property
    def x_min(self):
        return self.base.x_min

    def log_l(self, log_x):
        return self.base.log_l(log_x) + math.log(self.factor)

    def log_survival(self, x):
        # tail approximation, capped so it stays a survival function
        return np.minimum(0.0, self.base.log_survival(x) + math.log(self.factor))


@dataclass
class SampleSet:
    """Nonnegative sample plus the recipe that regenerates it."""

    values: np.ndarray
    spec: Optional[Any] = None
    seed: Optional[int] = None
    replicate_id: int = 0

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ParameterError("a sample must be a nonempty one-dimensional array")
        if np.any(self.values < 0) or np.any(np.isnan(self.values)):
            raise ParameterError("sample values must be nonnegative numbers")

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_array(data):
    """Values of a SampleSet or any array-like, as a float array."""
    if isinstance(data, SampleSet):
        return data.values
    return np.asarray(data, dtype=float)


def _check_n(n):
    if int(n) != n or n < 1:
        raise ParameterError(f"sample size must be a positive integer, got {n}")
    return int(n)


def sample_process(spec, n, seed, replicate_id=0):
    """Draw ``n`` values from ``spec`` using the substream ``(seed, replicate_id)``."""
    n = _check_n(n)
    rng = substream(seed, replicate_id)
    values = spec.generate(rng, n)
    return SampleSet(values, spec, seed, replicate_id)


def sample_pareto(x_min, alpha, n, seed, replicate_id=0):
    if not (x_min > 0 and alpha > 0):
        raise ParameterError(f"Pareto needs x_min > 0 and alpha > 0, got ({x_min}, {alpha})")
    return sample_process(IID(TailModel.pareto(x_min, alpha)), n, seed, replicate_id)


def sample_stable_one_sided(c, alpha, n, seed, replicate_id=0):
    return sample_process(IID(StableLaw(c, alpha)), n, seed, replicate_id)


def sample_f1(alpha, n, seed, replicate_id=0):
    if not alpha > 0.05:
        raise ParameterError(f"the F1 sampler needs alpha > 0.05, got {alpha}")
    return sample_process(IID(TailModel.f1(alpha)), n, seed, replicate_id)
