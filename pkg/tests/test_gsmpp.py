import math

import numpy as np
import pytest

from geosub.errors import ConvergenceError, ParameterError
from geosub.gspp import GsppParams, gspp_moments, gspp_pmf_generic_table
from geosub.gsmpp import (
    GsmppParams,
    gsmpp_atom_at_one,
    gsmpp_cdf,
    gsmpp_mean,
    gsmpp_mellin,
    gsmpp_sample,
    gsmpp_tempered_cdf,
)
from geosub.jumps import JumpLaw
from geosub.mc import mc_cdf_band, mc_mean, mc_proportion
from geosub.subordinators import Stable, TemperedStable

TWO_POINT = JumpLaw.atoms([0.5, 2.0], [0.5, 0.5])
TS = GsppParams.of(0.5, 0.5, TemperedStable(0.6, 1.0))
# inside the tempered closed-series region
LAM, ALPHA, NU, MU, T = 0.3, 0.6, 0.05, 0.5, 0.5
TS_REGION = GsppParams.of(LAM, MU, TemperedStable(ALPHA, NU))


def test_mellin_trivial_cases():
    p = GsmppParams(TS, TWO_POINT)
    assert gsmpp_mellin(1.0, 1.0, p) == pytest.approx(1.0)
    assert gsmpp_mean(1.0, GsmppParams(TS, JumpLaw.point(1.0))) == pytest.approx(1.0)
    assert gsmpp_mellin(3.0, 0.0, p) == 1.0


def test_mellin_routes_agree_stable():
    p = GsmppParams(GsppParams.of(0.3, 0.5, Stable(0.7)), JumpLaw.atoms([0.25, 0.75], [0.5, 0.5]))
    a = gsmpp_mellin(2.0, 0.5, p)
    b = gsmpp_mellin(2.0, 0.5, p, route="series", tail_tol=1e-11)
    assert a == pytest.approx(b, abs=1e-9)


def test_mellin_rejects_divergent_argument():
    with pytest.raises(ConvergenceError):
        gsmpp_mellin(2.0, 1.0, GsmppParams(TS, TWO_POINT))  # E[X] = 1.25


def test_mean_is_shock_survival():
    q = 0.7
    p = GsmppParams(GsppParams.of(1.0, 1.0, Stable(0.6)), JumpLaw.atoms([0.4, 1.0], [0.5, 0.5]))
    f = (1.0 * (1 - q)) ** 0.6
    assert gsmpp_mean(2.0, p) == pytest.approx(1.0 / (1.0 + 2.0 * (1.0 - math.exp(-f))), rel=1e-13)


def test_mean_matches_simulation():
    p = GsmppParams(TS, JumpLaw.atoms([0.4, 1.0], [0.5, 0.5]))
    rep = mc_mean(lambda r, s: gsmpp_sample(1.0, p, r, s), 100_000, 51, gsmpp_mean(1.0, p))
    assert rep.passed


def test_atom_consistency():
    for t in (0.0, 0.5, 2.0):
        atom = gsmpp_atom_at_one(t, LAM, ALPHA, NU, MU)
        assert atom == pytest.approx(gspp_pmf_generic_table(t, TS_REGION, 0)[0], abs=1e-12)
    assert gsmpp_atom_at_one(0.0, LAM, ALPHA, NU, MU) == 1.0


def test_cdf_jump_at_one_is_the_atom():
    p = GsmppParams(TS_REGION, JumpLaw.from_cdf(lambda x: 1 - np.exp(-x), 0.05, 0.01, 2000))
    eps = 1e-9
    lo, hi = gsmpp_cdf([1.0 - eps, 1.0], T, p)
    # the continuous part adds a vanishing amount over [1 - eps, 1]
    assert hi - lo == pytest.approx(gsmpp_atom_at_one(T, LAM, ALPHA, NU, MU), abs=1e-3)
    assert hi - lo >= gsmpp_atom_at_one(T, LAM, ALPHA, NU, MU) - 1e-9


def test_cdf_bounds():
    p = GsmppParams(TS, TWO_POINT)
    y = np.array([-1.0, 0.0, 1e-6, 0.9, 1.0, 5.0, 1e12])
    F = gsmpp_cdf(y, 1.0, p)
    assert F[0] == F[1] == 0.0
    assert np.all(np.diff(F) >= -1e-12)
    assert F[-1] == pytest.approx(1.0, abs=1e-9)


def test_cdf_matches_simulation():
    p = GsmppParams(TS, TWO_POINT)
    band = mc_cdf_band(lambda r, s: gsmpp_sample(1.0, p, r, s), lambda y: gsmpp_cdf(y, 1.0, p), 100_000, 52,
                       points=[0.25, 0.5, 0.99, 1.0, 1.5, 2.0, 3.9, 4.0])
    assert band.passed, band.max_z


def test_tempered_cdf_matches_generic():
    factors = JumpLaw.atoms([0.5, 2.0], [0.5, 0.5])
    y = np.array([0.3, 0.5, 1.0, 2.0, 4.0])
    a = gsmpp_tempered_cdf(y, T, LAM, ALPHA, NU, MU, factors)
    b = gsmpp_cdf(y, T, GsmppParams(TS_REGION, factors))
    assert np.allclose(a, b, atol=1e-8, rtol=0)


def test_tempered_cdf_outside_region_falls_back():
    with pytest.warns(RuntimeWarning):
        gsmpp_tempered_cdf(1.0, 1.0, 0.5, 0.6, 0.5, 0.5, TWO_POINT)


def test_atom_matches_zero_event_frequency():
    rep = mc_proportion(lambda r, s: gsmpp_sample(T, GsmppParams(TS_REGION, JumpLaw.exponential(1.0)), r, s) == 1.0,
                        100_000, 53, gsmpp_atom_at_one(T, LAM, ALPHA, NU, MU))
    assert rep.passed


def test_log_wald_identity():
    p = GsmppParams(TS, JumpLaw.atoms([0.5, 3.0], [0.5, 0.5]))
    elog = 0.5 * (math.log(0.5) + math.log(3.0))
    rep = mc_mean(lambda r, s: np.log(gsmpp_sample(1.0, p, r, s)), 100_000, 54, gspp_moments(1.0, TS).mean * elog)
    assert rep.passed


def test_deterministic_factor_pushforward():
    p = GsmppParams(TS, JumpLaw.point(2.0))
    y = gsmpp_sample(1.0, p, np.random.default_rng(5), 50_000)
    k = np.round(np.log2(y)).astype(int)
    assert np.allclose(2.0**k, y)
    pmf = gspp_pmf_generic_table(1.0, TS, 5)
    assert np.bincount(k, minlength=6)[:6] / y.size == pytest.approx(pmf, abs=0.01)


def test_zero_time_sample_is_one():
    assert np.all(gsmpp_sample(0.0, GsmppParams(TS, TWO_POINT), np.random.default_rng(0), 5) == 1.0)


def test_cdf_rejects_nonpositive_factors():
    with pytest.raises(ParameterError):
        gsmpp_cdf(1.0, 1.0, GsmppParams(TS, JumpLaw.bernoulli(0.5)))
