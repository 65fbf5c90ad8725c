import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from taylorlaw import LimitSpec, implied_alpha, summarize, taylor_ratio, theoretical_limit
from taylorlaw.errors import DomainError, IllConditionedError, ParameterError, RegimeError
from taylorlaw.moments import summarize_for

positive_samples = arrays(np.float64, st.integers(2, 60),
                          elements=st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False))


def test_hand_example():
    s = summarize([1.0, 2.0, 3.0, 6.0], raw_orders=(3,), central_orders=(3,), semi_orders=(2,))
    assert s.mean == 3.0
    assert s.m_raw[2.0] == (1 + 4 + 9 + 36) / 4
    assert s.m_raw[3.0] == (1 + 8 + 27 + 216) / 4
    assert s.variance == (4 + 1 + 0 + 9) / 4
    assert s.m_central[3] == (-8 - 1 + 0 + 27) / 4
    # 3.0 equals the mean, so it counts on the lower side
    assert (s.count_lower, s.count_upper) == (3, 1)
    assert s.m_lower[2.0] == (4 + 1 + 0) / 4
    assert s.m_upper[2.0] == 9 / 4
    assert s.m_lower_local[2.0] == 5 / 3
    assert s.m_upper_local[2.0] == 9.0


def test_matches_scipy_moments():
    x = np.random.default_rng(3).pareto(1.5, 5000) + 1
    s = summarize(x, raw_orders=(0.5, 3), central_orders=(2, 3, 4))
    assert s.variance == pytest.approx(np.var(x), rel=1e-12)
    for k in (2, 3, 4):
        assert s.m_central[k] == pytest.approx(stats.moment(x, k), rel=1e-10)
    assert s.m_raw[0.5] == pytest.approx(np.mean(np.sqrt(x)), rel=1e-12)


def test_constant_sample_has_no_upper_side():
    s = summarize([2.0, 2.0, 2.0], semi_orders=(2,))
    assert s.variance == 0.0
    assert s.count_upper == 0
    assert s.m_upper_local[2.0] is None
    assert s.m_lower_local[2.0] == 0.0


def test_rejects_bad_orders_and_empty():
    with pytest.raises(DomainError):
        summarize([])
    with pytest.raises(ParameterError):
        summarize([1.0], central_orders=(1,))
    with pytest.raises(ParameterError):
        summarize([1.0], semi_orders=(-1,))


@settings(max_examples=100, deadline=None)
@given(x=positive_samples, h=st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]))
def test_semivariances_decompose_absolute_moment(x, h):
    s = summarize(x, semi_orders=(h,))
    d = np.abs(x - np.mean(x))
    total = np.mean(d**h)
    assert s.m_lower[h] + s.m_upper[h] == pytest.approx(total, rel=1e-9, abs=1e-9 * max(1.0, total))
    assert s.count_lower + s.count_upper == x.size


@settings(max_examples=100, deadline=None)
@given(x=positive_samples)
def test_semivariance_h2_sums_to_variance(x):
    s = summarize(x, semi_orders=(2,))
    assert s.m_lower[2.0] + s.m_upper[2.0] == pytest.approx(s.variance, rel=1e-12, abs=1e-12 * (1 + s.variance))


@settings(max_examples=100, deadline=None)
@given(x=positive_samples)
def test_variance_identity(x):
    s = summarize(x)
    assume(s.m_raw[2.0] < 1e10)
    assert s.variance == pytest.approx(s.m_raw[2.0] - s.mean**2, abs=1e-9 * s.m_raw[2.0] + 1e-12)
    assert s.variance >= 0


def test_summary_to_dict_round_trip_keys():
    d = summarize([1.0, 5.0], semi_orders=(2,)).to_dict()
    assert d["mean"] == 3.0 and d["count_upper"] == 1
    assert "2.0" in d["m_upper"]


# --- ratios and limits -----------------------------------------------------------

def test_taylor_ratio_by_hand():
    x = np.array([1.0, 9.0])  # mean 5, variance 16
    lim = LimitSpec.variance(0.5)
    assert taylor_ratio(summarize_for(x, lim), lim) == pytest.approx(math.log(16) / math.log(5), rel=1e-15)


def test_taylor_ratio_errors():
    lim = LimitSpec.variance(0.5)
    with pytest.raises(DomainError):
        taylor_ratio(summarize_for([3.0, 3.0], lim), lim)  # zero variance
    with pytest.raises(IllConditionedError):
        taylor_ratio(summarize_for([0.5, 1.5], lim), lim)  # mean exactly 1
    up = LimitSpec.local_upper_vs_mean(2, 0.5)
    with pytest.raises(DomainError):
        taylor_ratio(summarize_for([4.0, 4.0], up), up)


@pytest.mark.parametrize("limit,expected", [
    (LimitSpec.variance(0.5), 3.0),
    (LimitSpec.central_vs_mean(3, 0.5), 5.0),
    (LimitSpec.local_upper_vs_mean(2, 0.5), 3.5),
    (LimitSpec.lower_vs_mean(2, 0.5), 2.0),
    (LimitSpec.moment_ratio(3, 1, 0.5), 5.0),
    (LimitSpec.upper_central_vs_mean(2, 0.5), 3.0),
    (LimitSpec.central_vs_central(4, 2, 0.5), 3.5 / 1.5),
])
def test_theoretical_limits(limit, expected):
    assert theoretical_limit(limit) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("limit", [
    LimitSpec.variance(1.0),
    LimitSpec.variance(1.5),
    LimitSpec.moment_ratio(0.3, 1, 0.5),
    LimitSpec.upper_central_vs_mean(1.0, 0.5),
    LimitSpec.local_upper_vs_mean(0.8, 0.5),
    LimitSpec.central_vs_mean(2.5, 0.5),
    LimitSpec.variance(0.0),
])
def test_limits_outside_regime(limit):
    with pytest.raises(RegimeError):
        theoretical_limit(limit)


def test_limit_spec_validation():
    with pytest.raises(ParameterError):
        LimitSpec("bogus", 0.5)
    with pytest.raises(ParameterError):
        LimitSpec("moment_ratio", 0.5, 2.0)


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(0.001, 0.999))
def test_implied_alpha_inverts_variance_limit(alpha):
    r = theoretical_limit(LimitSpec.variance(alpha))
    assert implied_alpha(r) == pytest.approx(alpha, abs=1e-9)


def test_implied_alpha_singular():
    with pytest.raises(DomainError):
        implied_alpha(1.0)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(0.05, 0.95), h1=st.floats(1.0, 6.0), h2=st.floats(1.0, 6.0))
def test_moment_ratio_limit_reciprocity(alpha, h1, h2):
    # iota(h1, h2) * iota(h2, h1) == 1
    a = theoretical_limit(LimitSpec.moment_ratio(h1, h2, alpha))
    b = theoretical_limit(LimitSpec.moment_ratio(h2, h1, alpha))
    assert a * b == pytest.approx(1.0, rel=1e-12)
