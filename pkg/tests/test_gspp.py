import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geosub.errors import ParameterError, RegionError
from geosub.gcp import GcpParams
from geosub.mc import mc_pmf_tv
from geosub.gspp import (
    GsppParams,
    correlation,
    correlation_asymptote,
    correlation_asymptote_linear,
    correlation_limit,
    dispersion_index,
    first_passage_density,
    first_passage_total,
    gspp_moments,
    gspp_pgf,
    gspp_pmf_conditioning,
    gspp_pmf_generic,
    gspp_pmf_generic_table,
    gspp_pmf_sfpp,
    gspp_pmf_sfpp_table,
    gspp_pmf_table,
    gspp_pmf_tsfpp,
    gspp_pmf_tsfpp_table,
    gspp_sample,
    sfpp_region,
    tsfpp_cov,
    tsfpp_moments,
    tsfpp_region,
)
from geosub.spp import SppParams
from geosub.subordinators import GammaSubordinator, InverseGaussian, Stable, TemperedStable

# Coefficients of u^k in 1 / (1 + mu t (1 - exp(-(lam (1 - u))^alpha))) at
# (lam, alpha, mu, t) = (0.5, 0.7, 1, 1), from mpmath.taylor at 40 digits.
FROZEN_STABLE = {0: 0.685087118040887, 1: 0.109277067815087, 5: 0.0143204778947821, 15: 0.00186168292904443}

STABLE_CASE = GsppParams.of(0.5, 1.0, Stable(0.7))
TS_CASE = GsppParams.of(1.0, 1.0, TemperedStable(0.6, 1.0))


def _mp_pgf_coeffs(lam, mu, t, exponent, kmax):
    mpmath.mp.dps = 40
    f = lambda u: 1 / (1 + mu * t * (1 - mpmath.exp(-exponent(lam * (1 - u)))))
    return [float(c) for c in mpmath.taylor(f, 0, kmax)]


def test_oracle_values_are_reproducible():
    c = _mp_pgf_coeffs(mpmath.mpf(0.5), 1, 1, lambda s: s ** mpmath.mpf(0.7), 15)
    for k, v in FROZEN_STABLE.items():
        assert c[k] == pytest.approx(v, rel=1e-14)


@pytest.mark.parametrize("k", sorted(FROZEN_STABLE))
def test_stable_pmf_against_frozen_oracle(k):
    want = FROZEN_STABLE[k]
    assert gspp_pmf_generic(k, 1.0, STABLE_CASE) == pytest.approx(want, rel=1e-12)
    assert gspp_pmf_sfpp(k, 1.0, 0.5, 0.7, 1.0) == pytest.approx(want, rel=1e-12)
    assert gspp_pmf_sfpp_table(1.0, 0.5, 0.7, 1.0, 15)[k] == pytest.approx(want, rel=1e-12)


def test_three_routes_agree():
    jet = gspp_pmf_generic_table(1.0, STABLE_CASE, 15)
    series = np.array([gspp_pmf_sfpp(k, 1.0, 0.5, 0.7, 1.0) for k in range(16)])
    cond = np.array([gspp_pmf_conditioning(k, 1.0, STABLE_CASE) for k in range(0, 16, 5)])
    assert np.max(np.abs(jet - series)) < 1e-8
    assert np.max(np.abs(jet[::5] - cond)) < 1e-8


@pytest.mark.parametrize("sub", [TemperedStable(0.6, 1.0), GammaSubordinator(1.0, 2.0), InverseGaussian(1.0, 1.0)],
                         ids=["tempered", "gamma", "inverse_gaussian"])
def test_generic_matches_mpmath_for_light_tails(sub):
    d = sub.to_dict()
    if d["family"] == "tempered_stable":
        expo = lambda s: (s + d["nu"]) ** mpmath.mpf(d["alpha"]) - mpmath.mpf(d["nu"]) ** mpmath.mpf(d["alpha"])
    elif d["family"] == "gamma":
        expo = lambda s: d["p"] * mpmath.log(1 + s / d["beta"])
    else:
        expo = lambda s: d["delta"] * (mpmath.sqrt(2 * s + d["gamma"] ** 2) - d["gamma"])
    want = _mp_pgf_coeffs(mpmath.mpf(0.8), 1.5, 1.2, expo, 10)
    got = gspp_pmf_generic_table(1.2, GsppParams.of(0.8, 1.5, sub), 10)
    assert np.allclose(got, want, rtol=1e-11, atol=1e-15)


def test_trivial_values():
    assert gspp_pmf_generic(0, 1.0, TS_CASE) == pytest.approx(1 / (1 + (1 - math.exp(-(2**0.6 - 1)))), rel=1e-14)
    assert list(gspp_pmf_generic_table(0.0, TS_CASE, 3)) == [1.0, 0.0, 0.0, 0.0]
    assert gspp_pmf_sfpp(0, 0.0, 0.5, 0.7, 1.0) == 1.0
    assert gspp_pmf_tsfpp(0, 0.0, 0.5, 0.6, 0.05, 0.5) == 1.0


def test_pgf_matches_pmf():
    pm = gspp_pmf_table(1.0, TS_CASE, 1e-13)
    u = 0.4
    assert gspp_pgf(u, 1.0, TS_CASE) == pytest.approx(math.fsum(pm.probs * u ** np.arange(pm.probs.size)), rel=1e-12)


def test_sfpp_region_error():
    lhs, bound = sfpp_region(5.0, 2.0, 0.7, 1.0)
    assert lhs >= bound
    with pytest.raises(RegionError) as info:
        gspp_pmf_sfpp(1, 5.0, 2.0, 0.7, 1.0)
    assert info.value.code == "validity_region"


def test_tempered_series_against_conditioning():
    lam, alpha, nu, mu, t = 0.5, 0.6, 0.05, 0.5, 0.5
    p = GsppParams.of(lam, mu, TemperedStable(alpha, nu))
    table = gspp_pmf_tsfpp_table(t, lam, alpha, nu, mu, 10)
    for k in (0, 1, 4, 10):
        cond = gspp_pmf_conditioning(k, t, p)
        assert abs(gspp_pmf_tsfpp(k, t, lam, alpha, nu, mu) - cond) < 1e-8
        assert abs(table[k] - cond) < 1e-8


def test_tempered_series_reduces_at_zero_nu():
    for k in range(11):
        assert abs(gspp_pmf_tsfpp(k, 1.0, 0.5, 0.7, 0.0, 1.0) - gspp_pmf_sfpp(k, 1.0, 0.5, 0.7, 1.0)) <= 1e-10


def test_tempered_series_region_and_fallback():
    lhs, bound = tsfpp_region(1.0, 1.0, 0.6, 1.0, 1.0)
    assert lhs >= bound
    with pytest.raises(RegionError):
        gspp_pmf_tsfpp(2, 1.0, 1.0, 0.6, 1.0, 1.0)
    got = gspp_pmf_tsfpp(2, 1.0, 1.0, 0.6, 1.0, 1.0, fallback=True)
    assert got == pytest.approx(gspp_pmf_generic(2, 1.0, TS_CASE), abs=1e-10)


def test_moments_tempered():
    m = gspp_moments(2.0, TS_CASE)
    assert m.mean == pytest.approx(1.2)
    assert m.cov(2.0, 2.0) == m.variance
    z = gspp_moments(0.0, TS_CASE)
    assert (z.mean, z.variance) == (0.0, 0.0)


@pytest.mark.parametrize("point", [(1.0, 0.6, 1.0, 1.0, 2.0), (0.3, 0.2, 2.5, 0.7, 0.4), (2.0, 0.9, 0.5, 3.0, 1.0),
                                   (0.8, 0.45, 1.7, 0.2, 5.0), (1.5, 0.75, 0.3, 1.1, 0.9)])
def test_generic_moments_match_tempered_special_case(point):
    lam, alpha, nu, mu, t = point
    m = gspp_moments(t, GsppParams.of(lam, mu, TemperedStable(alpha, nu)))
    mean, var = tsfpp_moments(t, lam, alpha, nu, mu)
    assert m.mean == pytest.approx(mean, rel=1e-12)
    assert m.variance == pytest.approx(var, rel=1e-12)
    assert m.cov(0.5 * t, t) == pytest.approx(tsfpp_cov(0.5 * t, t, lam, alpha, nu, mu), rel=1e-12)


def test_numerical_moments_match_formula():
    pm = gspp_pmf_table(1.0, TS_CASE, 1e-12)
    k = np.arange(pm.probs.size)
    mean = math.fsum(k * pm.probs)
    var = math.fsum(k * k * pm.probs) - mean**2
    m = gspp_moments(1.0, TS_CASE)
    assert mean == pytest.approx(m.mean, abs=1e-6)
    assert var == pytest.approx(m.variance, abs=1e-6)


def test_stable_moments_are_infinite():
    m = gspp_moments(1.0, STABLE_CASE)
    assert math.isinf(m.mean) and math.isinf(m.variance)


def test_dispersion_index():
    assert dispersion_index(1.0, 1.0, 0.6, 1.0, 1.0) == pytest.approx(2.6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.05, 0.95), st.floats(0.05, 5.0), st.floats(0.05, 5.0), st.floats(0.01, 50.0))
def test_overdispersion_property(lam, alpha, nu, mu, t):
    idx = dispersion_index(t, lam, alpha, nu, mu)
    m = gspp_moments(t, GsppParams.of(lam, mu, TemperedStable(alpha, nu)))
    assert idx > 1
    assert abs(idx * m.mean - m.variance) <= 1e-12 * m.variance


def test_correlation_asymptote_formulas():
    assert correlation_asymptote_linear(1.0, 1.0, 1.0) == pytest.approx(2 / math.sqrt(3))
    # both printed limits scale like sqrt(s) in s
    r = correlation_asymptote_linear(4.0, 1.0, 1.0) / correlation_asymptote_linear(1.0, 1.0, 1.0)
    assert r > 1
    assert correlation_asymptote(1.0, 1.0, 0.6, 1.0, 1.0) > 0


def test_correlation_tends_to_positive_constant():
    # Corr(N(s), N(t)) does not vanish as t grows; it approaches correlation_limit
    c = [correlation(1.0, t, TS_CASE) for t in (1e2, 1e4, 1e6)]
    lim = correlation_limit(1.0, TS_CASE)
    assert lim > 0
    assert abs(c[-1] - lim) < abs(c[0] - lim)
    assert c[-1] == pytest.approx(lim, rel=1e-5)
    assert correlation(1.0, 1.0, TS_CASE) == pytest.approx(1.0)


def test_first_passage_k1_closed_form():
    lam, alpha, mu = 0.5, 0.7, 1.0
    c = 1 - math.exp(-(lam**alpha))
    for s in (0.2, 1.0, 3.0):
        want = mu * c / (1 + mu * s * c) ** 2
        assert first_passage_density(1, s, STABLE_CASE) == pytest.approx(want, rel=1e-7)
        if s * (math.exp(lam**alpha) - 1) < 1:
            assert first_passage_density(1, s, STABLE_CASE, method="series") == pytest.approx(want, rel=1e-10)
    with pytest.raises(RegionError):
        first_passage_density(1, 3.0, STABLE_CASE, method="series")


def test_first_passage_methods_agree():
    for k in (2, 3):
        for s in (0.3, 1.0):
            num = first_passage_density(k, s, STABLE_CASE)
            ser = first_passage_density(k, s, STABLE_CASE, method="series")
            assert num == pytest.approx(ser, rel=1e-6)
            assert num >= 0


def test_first_passage_integrates_to_one():
    assert first_passage_total(2, STABLE_CASE) == pytest.approx(1.0, abs=1e-3)


def test_first_passage_vanishes_at_large_s():
    assert first_passage_density(1, 1e4, STABLE_CASE) < 1e-7


def test_first_passage_rejects_bad_input():
    with pytest.raises(ParameterError):
        first_passage_density(0, 1.0, STABLE_CASE)
    with pytest.raises(ParameterError):
        first_passage_density(1, 0.0, STABLE_CASE)


def test_sampler_law_and_zero_time():
    rng = np.random.default_rng(0)
    assert np.all(gspp_sample(0.0, TS_CASE, rng, 10) == 0)
    pmf = gspp_pmf_generic_table(1.0, TS_CASE, 40)
    assert mc_pmf_tv(lambda r, s: gspp_sample(1.0, TS_CASE, r, s), pmf, 100_000, 40, 31) < 0.01


def test_params_constructor():
    p = GsppParams.of(0.5, 2.0, Stable(0.7))
    assert p.lam == 0.5 and p.mu == 2.0 and p.sub == Stable(0.7)
    assert p == GsppParams(SppParams(0.5, Stable(0.7)), GcpParams(2.0))
