import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from taylorlaw import (AR1, IID, Equicorrelated, GaussianModulated, Heterogeneous, SampleSet,
                       SlowlyVarying, StableLaw, TailModel, sample_f1, sample_pareto, sample_process,
                       sample_stable_one_sided)
from taylorlaw.distributions import (ExponentialLaw, _f1_envelope, ar1_recursion, f1_cdf, levy_cdf,
                                     pareto_ppf, stable_from_uniforms)
from taylorlaw.errors import ParameterError
from taylorlaw.rng import substream, tag


# --- tail models -----------------------------------------------------------------

def test_pareto_survival_matches_scipy():
    m = TailModel.pareto(2.0, 0.7)
    x = np.array([2.0, 3.0, 10.0, 1e6])
    assert np.allclose(m.survival(x), stats.pareto(0.7, scale=2.0).sf(x), rtol=1e-13)
    assert m.survival(1.0) == 1.0


def test_pareto_ppf_matches_scipy():
    u = np.linspace(0.0, 0.999, 50)
    assert np.allclose(pareto_ppf(u, 1.5, 0.4), stats.pareto(0.4, scale=1.5).ppf(u), rtol=1e-12)


def test_f1_cdf_closed_form():
    a = 0.5
    x = np.array([math.exp(2.0), 100.0, 1e4])
    expected = 1 - math.e * a * x**-a * np.log(x)
    assert np.allclose(f1_cdf(x, a), expected, rtol=1e-14)
    assert f1_cdf(math.exp(2.0), a) == pytest.approx(0.0, abs=1e-15)
    m = TailModel.f1(a)
    assert np.allclose(m.cdf(x), expected, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("sv", [
    SlowlyVarying.constant(3.0),
    SlowlyVarying.log_times_e(),
    SlowlyVarying.pow_log(2.0),
    SlowlyVarying.exp_log_beta(1, 0.5),
    SlowlyVarying.exp_log_beta(-1, 0.5),
])
def test_survival_normalized_and_monotone(sv):
    m = TailModel(0.6, sv, math.e**4)
    assert m.survival(m.x_min) == pytest.approx(1.0, abs=1e-14)
    x = np.geomspace(m.x_min, 1e30, 500)
    s = m.survival(x)
    assert np.all(np.diff(s) <= 0)
    assert s[-1] < 1e-10


@pytest.mark.parametrize("sv", [SlowlyVarying.log_times_e(), SlowlyVarying.pow_log(2.0),
                                SlowlyVarying.exp_log_beta(1, 0.5)])
def test_slowly_varying_ratio_tends_to_one(sv):
    m = TailModel(0.5, sv, math.e**4)
    lam = 7.0
    ratios = [math.exp(m.log_l(math.log(lam * x)) - m.log_l(math.log(x))) for x in (1e3, 1e10, 1e50, 1e200)]
    gaps = [abs(r - 1) for r in ratios]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.05


def test_tail_model_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        TailModel(-1.0)
    with pytest.raises(ParameterError):
        TailModel(0.5, x_min=0.0)
    # log x is negative below x = 1, so log_times_e is undefined there
    with pytest.raises(ParameterError):
        TailModel(0.5, SlowlyVarying.log_times_e(), 0.5)
    # the F1 survival increases below exp(1/alpha)
    with pytest.raises(ParameterError):
        TailModel(0.5, SlowlyVarying.log_times_e(), 2.0)
    with pytest.raises(ParameterError):
        SlowlyVarying("nonsense")
    with pytest.raises(ParameterError):
        SlowlyVarying.exp_log_beta(1, 1.5)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.05, 3.0), x_min=st.floats(0.1, 100.0),
       u=st.lists(st.floats(0.0, 0.999999), min_size=2, max_size=20))
def test_pareto_ppf_monotone_above_x_min(alpha, x_min, u):
    u = np.sort(np.array(u))
    x = pareto_ppf(u, x_min, alpha)
    assert np.all(x >= x_min * (1 - 1e-12))
    assert np.all(np.diff(x) >= 0)


# --- samplers --------------------------------------------------------------------

def test_pareto_sample_ks():
    x = sample_pareto(1.0, 0.5, 50_000, seed=5).values
    assert stats.kstest(x, stats.pareto(0.5).cdf).pvalue > 1e-3


def test_generic_inversion_sampler_ks():
    m = TailModel(0.7, SlowlyVarying.pow_log(1.5), math.e**3)
    x = m.sample(substream(3), 20_000)
    assert x.min() >= m.x_min
    assert stats.kstest(x, m.cdf).pvalue > 1e-3


def test_f1_sampler_ks():
    x = sample_f1(0.5, 50_000, seed=2).values
    assert x.min() >= math.exp(2.0)
    assert stats.kstest(x, lambda v: f1_cdf(v, 0.5)).pvalue > 1e-3


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.9, 2.0])
def test_f1_envelope_dominates_density_ratio(alpha):
    const, env = _f1_envelope(alpha)
    y = np.linspace(1 / alpha, 1 / alpha + 400, 200_001)
    delta = 0.05
    # target density / proposal density, both on log scale y = log x
    with np.errstate(divide="ignore"):
        log_target = 1 + math.log(alpha) - alpha * y + np.log(alpha * y - 1)
    log_proposal = math.log(alpha - delta) - (alpha - delta) * (y - 1 / alpha)
    peak = np.exp(np.max(log_target - log_proposal))
    assert peak <= env * (1 + 1e-12)
    assert peak >= env * (1 - 1e-6)


def test_f1_sampler_rejects_small_alpha():
    with pytest.raises(ParameterError):
        sample_f1(0.05, 10, seed=0)


def test_levy_case_matches_scipy():
    # Laplace transform exp(-sqrt(s)) is the Levy law with scale 1/2
    assert levy_cdf(1.0) == pytest.approx(math.erfc(0.5), abs=1e-15)
    x = np.array([0.1, 1.0, 10.0])
    assert np.allclose(levy_cdf(x), stats.levy(scale=0.5).cdf(x), rtol=1e-12)
    sample = sample_stable_one_sided(1.0, 0.5, 200_000, seed=9).values
    assert stats.kstest(sample, stats.levy(scale=0.5).cdf).pvalue > 1e-3


@pytest.mark.parametrize("alpha,c", [(0.3, 1.0), (0.7, 2.0)])
def test_stable_laplace_transform(alpha, c):
    x = StableLaw(c, alpha).sample(substream(11), 400_000)
    for s in (0.5, 1.0, 2.0):
        assert np.mean(np.exp(-s * x)) == pytest.approx(math.exp(-(c * s) ** alpha), abs=0.004)


def test_stable_from_uniforms_is_positive_and_scales():
    u = np.linspace(0.01, 0.99, 99)
    e = np.full(99, 1.3)
    a = stable_from_uniforms(u, e, 1.0, 0.6)
    b = stable_from_uniforms(u, e, 2.5, 0.6)
    assert np.all(a > 0)
    assert np.allclose(b, 2.5 * a, rtol=1e-13)


def test_stable_tail_constant():
    m = StableLaw(1.0, 0.5).tail_model()
    # P(X > x) ~ x**-alpha / Gamma(1 - alpha) for the unit stable law
    x = 1e12
    assert m.survival(x) == pytest.approx(x**-0.5 / math.gamma(0.5), rel=1e-12)
    assert levy_cdf(x) == pytest.approx(1 - x**-0.5 / math.gamma(0.5), abs=1e-9)


def test_stable_rejects_alpha_out_of_range():
    with pytest.raises(ParameterError):
        StableLaw(1.0, 1.2)


# --- processes -------------------------------------------------------------------

def test_ar1_recursion_matches_loop():
    rng = np.random.default_rng(0)
    eps = rng.random(300)
    x = ar1_recursion(eps, 0.8, burn_in=50)
    ref = np.empty(300)
    ref[0] = eps[0]
    for t in range(1, 300):
        ref[t] = 0.8 * ref[t - 1] + eps[t]
    assert np.allclose(x, ref[50:], rtol=1e-13)


def test_ar1_rejects_nonstationary():
    with pytest.raises(ParameterError):
        AR1(1.0, TailModel.pareto(1, 0.5))


def test_ar1_marginal_tail_factor():
    spec = AR1(0.8, TailModel.pareto(1, 0.5))
    m = spec.marginal_tail()
    factor = 1 / (1 - 0.8**0.5)
    assert m.survival(1e8) == pytest.approx(factor * 1e-4, rel=1e-12)


def test_equicorrelated_marginal_is_exact():
    a = 0.5
    spec = Equicorrelated(a, 0.3)
    x = np.concatenate([spec.generate(substream(4, r), 5) for r in range(8000)])
    # X > t iff |Z| < t**-alpha with Z standard normal
    cdf = lambda t: special.erfc(t**-a / math.sqrt(2))
    assert stats.kstest(x, cdf).pvalue > 1e-3


def test_equicorrelated_tail_constant():
    m = Equicorrelated(0.5, 0.1).marginal_tail()
    t = 1e10
    exact = special.erf(t**-0.5 / math.sqrt(2))
    assert m.survival(t) == pytest.approx(exact, rel=1e-6)


def test_gaussian_field_correlation():
    spec = GaussianModulated(0.5, 100.0)
    g = spec.gaussian_field(substream(8), 1_000_000)
    assert np.var(g) == pytest.approx(1.0, abs=0.06)
    for lag in (1, 100):
        r = np.corrcoef(g[:-lag], g[lag:])[0, 1]
        assert r == pytest.approx(math.exp(-lag / 100), abs=0.04)


def test_gaussian_modulated_tail_constant():
    m = GaussianModulated(0.5, 100).marginal_tail()
    assert m.survival(1e6) == pytest.approx(math.exp(0.125) * 1e-3, rel=1e-12)


def test_heterogeneous_marginal_ks():
    u, v = TailModel.pareto(1, 0.5), TailModel.pareto(1, 0.8)
    spec = Heterogeneous(0.6, u, v)
    x = spec.generate(substream(1), 50_000)
    cdf = lambda t: 0.6 * u.cdf(t) + 0.4 * v.cdf(t)
    assert stats.kstest(x, cdf).pvalue > 1e-3


def test_heterogeneous_requires_heavier_first():
    with pytest.raises(ParameterError):
        Heterogeneous(0.5, TailModel.pareto(1, 0.8), TailModel.pareto(1, 0.5))


def test_sampling_is_deterministic():
    spec = AR1(0.5, TailModel.pareto(1, 0.7), burn_in=100)
    a = sample_process(spec, 1000, seed=42, replicate_id=3).values
    b = sample_process(spec, 1000, seed=42, replicate_id=3).values
    c = sample_process(spec, 1000, seed=42, replicate_id=4).values
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_tags_are_stable():
    assert tag("bootstrap") == tag("bootstrap")
    assert tag("bootstrap") != tag("subsample")
    # FNV-1a reference value for the empty string
    assert tag("") == 2166136261


def test_sample_set_validation():
    with pytest.raises(ParameterError):
        SampleSet(np.array([]))
    with pytest.raises(ParameterError):
        SampleSet(np.array([1.0, -2.0]))
    with pytest.raises(ParameterError):
        SampleSet(np.ones((2, 2)))
    s = SampleSet([1, 2, 3])
    assert len(s) == 3 and s.values.dtype == float


def test_sample_size_validation():
    with pytest.raises(ParameterError):
        sample_process(IID(TailModel.pareto(1, 0.5)), 0, seed=1)
    with pytest.raises(ParameterError):
        sample_pareto(1.0, -0.5, 10, seed=1)


def test_exponential_law():
    x = ExponentialLaw(2.0).sample(substream(0), 100_000)
    assert x.mean() == pytest.approx(2.0, rel=0.02)
    assert ExponentialLaw(2.0).variance == 4.0
    with pytest.raises(ParameterError):
        ExponentialLaw().tail_model()
