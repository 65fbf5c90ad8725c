"""Sample moments, semivariances and the log-ratio limits of Taylor's law."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .distributions import as_array
from .errors import DomainError, IllConditionedError, ParameterError, RegimeError

__all__ = [
    "MomentSummary",
    "LimitSpec",
    "summarize",
    "summarize_for",
    "taylor_ratio",
    "theoretical_limit",
    "implied_alpha",
]


@dataclass(frozen=True)
class MomentSummary:
    """Every sample statistic the limit theorems talk about, for one sample.

    Local moments are ``None`` when their side count is zero. ``m_central``
    keeps the sign; ratios use its absolute value.
    """

    n: int
    m_raw: dict = field(default_factory=dict)
    m_central: dict = field(default_factory=dict)
    variance: float = 0.0
    m_lower: dict = field(default_factory=dict)
    m_upper: dict = field(default_factory=dict)
    m_lower_local: dict = field(default_factory=dict)
    m_upper_local: dict = field(default_factory=dict)
    count_lower: int = 0
    count_upper: int = 0

    @property
    def mean(self):
        return self.m_raw[1.0]

    def to_dict(self):
        def keyed(d):
            return {repr(float(k)): v for k, v in d.items()}

        return {
            "n": self.n, "mean": self.mean, "variance": self.variance,
            "m_raw": keyed(self.m_raw), "m_central": keyed(self.m_central),
            "m_lower": keyed(self.m_lower), "m_upper": keyed(self.m_upper),
            "m_lower_local": keyed(self.m_lower_local),
            "m_upper_local": keyed(self.m_upper_local),
            "count_lower": self.count_lower, "count_upper": self.count_upper,
        }


def _power(x, p):
    """``x**p`` with repeated multiplication for small integer orders."""
    if p == 1:
        return x
    if p == int(p) and 2 <= p <= 8:
        out = x * x
        for _ in range(int(p) - 2):
            out *= x
        return out
    return np.power(x, p)


def summarize(data, raw_orders=(1, 2), central_orders=(), semi_orders=()):
    """Compute raw, central, and one-sided central moments of ``data``.

    The mean and variance are always included. Observations equal to the
    sample mean count on the lower side. The variance is computed from
    centred values, which equals ``M_{n,2} - M_{n,1}**2`` exactly in real
    arithmetic but avoids cancellation in floating point.
    """
    x = as_array(data)
    if x.size == 0:
        raise DomainError("cannot summarize an empty sample")
    raw_orders = sorted({1.0, 2.0} | {float(p) for p in raw_orders})
    if any(p <= 0 for p in raw_orders):
        raise ParameterError("raw moment orders must be positive")
    central_orders = sorted({int(k) for k in central_orders})
    if any(k < 2 for k in central_orders):
        raise ParameterError("central moment orders must be integers >= 2")
    semi_orders = sorted({float(h) for h in semi_orders})
    if any(h <= 0 for h in semi_orders):
        raise ParameterError("semivariance orders must be positive")

    n = x.size
    m_raw = {p: float(np.sum(_power(x, p)) / n) for p in raw_orders}
    m1 = m_raw[1.0]
    d = x - m1
    d2 = d * d
    variance = float(np.sum(d2) / n)
    m_central = {}
    for k in central_orders:
        m_central[k] = variance if k == 2 else float(np.sum(_power(d, k)) / n)

    m_lower, m_upper, m_lower_local, m_upper_local = {}, {}, {}, {}
    upper_mask = d > 0
    n_up = int(np.count_nonzero(upper_mask))
    n_low = n - n_up
    if semi_orders:
        up = np.where(upper_mask, d, 0.0)
        low = np.where(upper_mask, 0.0, -d)
        for h in semi_orders:
            if h == 2.0:
                s_up = float(np.sum(up * up))
                s_low = float(np.sum(low * low))
            else:
                s_up = float(np.sum(_power(up, h)))
                s_low = float(np.sum(_power(low, h)))
            m_upper[h] = s_up / n
            m_lower[h] = s_low / n
            m_upper_local[h] = s_up / n_up if n_up else None
            m_lower_local[h] = s_low / n_low if n_low else None

    return MomentSummary(
        n=n, m_raw=m_raw, m_central=m_central, variance=variance,
        m_lower=m_lower, m_upper=m_upper, m_lower_local=m_lower_local,
        m_upper_local=m_upper_local, count_lower=n_low, count_upper=n_up,
    )


_KINDS = {
    "moment_ratio": 2,
    "central_vs_mean": 1,
    "central_vs_central": 2,
    "variance": 0,
    "upper_central_vs_mean": 1,
    "local_upper_vs_mean": 1,
    "lower_vs_mean": 1,
}


@dataclass(frozen=True)
class LimitSpec:
    """Which log-ratio to form, and the tail index for its limit.

    ``h1`` is the numerator order and ``h2`` the denominator order where the
    kind needs them; single-order kinds use ``h1`` only.
    """

    kind: str
    alpha: float = float("nan")
    h1: Optional[float] = None
    h2: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown limit kind {self.kind!r}; expected one of {sorted(_KINDS)}")
        need = _KINDS[self.kind]
        if need >= 1 and self.h1 is None or need == 2 and self.h2 is None:
            raise ParameterError(f"limit kind {self.kind!r} needs {need} order(s)")

    @classmethod
    def variance(cls, alpha):
        return cls("variance", alpha)

    @classmethod
    def moment_ratio(cls, h1, h2, alpha):
        return cls("moment_ratio", alpha, h1, h2)

    @classmethod
    def central_vs_mean(cls, k, alpha):
        return cls("central_vs_mean", alpha, k)

    @classmethod
    def central_vs_central(cls, h1, h2, alpha):
        return cls("central_vs_central", alpha, h1, h2)

    @classmethod
    def upper_central_vs_mean(cls, h, alpha):
        return cls("upper_central_vs_mean", alpha, h)

    @classmethod
    def local_upper_vs_mean(cls, h, alpha):
        return cls("local_upper_vs_mean", alpha, h)

    @classmethod
    def lower_vs_mean(cls, h, alpha):
        return cls("lower_vs_mean", alpha, h)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "h1": self.h1, "h2": self.h2}


def summarize_for(data, limit):
    """Summarize ``data`` with exactly the orders ``limit`` needs."""
    k = limit.kind
    if k == "moment_ratio":
        return summarize(data, raw_orders=(limit.h1, limit.h2))
    if k == "central_vs_mean":
        return summarize(data, central_orders=(limit.h1,))
    if k == "central_vs_central":
        return summarize(data, central_orders=(limit.h1, limit.h2))
    if k == "variance":
        return summarize(data)
    return summarize(data, semi_orders=(limit.h1,))


def _statistics(summary, limit):
    k = limit.kind
    try:
        if k == "moment_ratio":
            return summary.m_raw[float(limit.h1)], summary.m_raw[float(limit.h2)]
        if k == "central_vs_mean":
            return abs(summary.m_central[int(limit.h1)]), summary.mean
        if k == "central_vs_central":
            return abs(summary.m_central[int(limit.h1)]), abs(summary.m_central[int(limit.h2)])
        if k == "variance":
            return summary.variance, summary.mean
        if k == "upper_central_vs_mean":
            return summary.m_upper[float(limit.h1)], summary.mean
        if k == "local_upper_vs_mean":
            return summary.m_upper_local[float(limit.h1)], summary.mean
        return summary.m_lower[float(limit.h1)], summary.mean
    except KeyError as exc:
        raise ParameterError(f"summary lacks the order needed for {k!r}: {exc}") from None


def taylor_ratio(summary, limit):
    """``log(numerator) / log(denominator)`` for the statistic pair of ``limit``.

    Only ``limit.kind`` and its orders are used; ``alpha`` is ignored.
    """
    num, den = _statistics(summary, limit)
    if num is None:
        raise DomainError("local upper moment is undefined: no observation exceeds the mean")
    if not (num > 0 and den > 0):
        raise DomainError(f"log-ratio needs positive statistics, got {num!r} and {den!r}")
    log_den = math.log(den)
    if abs(log_den) < 1e-12:
        raise IllConditionedError("denominator statistic is 1, its log vanishes")
    return math.log(num) / log_den


def theoretical_limit(limit):
    """Probability limit of :func:`taylor_ratio` for tail index ``limit.alpha``."""
    a, k = limit.alpha, limit.kind
    if not a > 0:
        raise RegimeError(f"tail index must be positive, got {a}")

    def need_unit_interval(what):
        if not 0 < a < 1:
            raise RegimeError(f"{what} requires alpha in (0, 1), got {a}")

    if k == "moment_ratio":
        h1, h2 = limit.h1, limit.h2
        if not (h1 > a and h2 > a):
            raise RegimeError(f"higher-moment Taylor's law needs both orders above alpha={a}")
        return (h1 - a) / (h2 - a)
    if k == "variance":
        need_unit_interval("Taylor's law for the sample variance")
        return (2 - a) / (1 - a)
    if k == "central_vs_mean":
        need_unit_interval("Taylor's law for central moments against the mean")
        if limit.h1 != int(limit.h1) or limit.h1 < 2:
            raise RegimeError("central moment order must be an integer >= 2")
        return (limit.h1 - a) / (1 - a)
    if k == "central_vs_central":
        for h in (limit.h1, limit.h2):
            if h != int(h) or h < 2 or not h > a:
                raise RegimeError("central moment orders must be integers >= 2 and above alpha")
        return (limit.h1 - a) / (limit.h2 - a)
    if k == "upper_central_vs_mean":
        need_unit_interval("Taylor's law for upper central moments")
        if not limit.h1 > 1:
            raise RegimeError("the upper central moment log-ratio limit needs order h > 1")
        return (limit.h1 - a) / (1 - a)
    if k == "local_upper_vs_mean":
        need_unit_interval("Taylor's law for local upper central moments")
        if not limit.h1 > 1:
            raise RegimeError("the local upper central moment limit needs order h > 1")
        return (limit.h1 - a * a) / (1 - a)
    need_unit_interval("Taylor's law for lower central moments")
    if not limit.h1 > 0:
        raise RegimeError("lower central moment order must be positive")
    return float(limit.h1)


def implied_alpha(ratio):
    """Tail index implied by a variance-to-mean log ratio: ``(2 - r) / (1 - r)``."""
    if ratio == 1:
        raise DomainError("implied tail index is singular at ratio 1")
    return (2.0 - ratio) / (1.0 - ratio)
