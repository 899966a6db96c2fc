import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geosub.errors import ParameterError
from geosub.gcp import GcpParams
from geosub.shock import (
    EXPECTED_DIRECTION,
    CumulativeShockModel,
    baseline_model,
    cumulative_mc,
    cumulative_reliability,
    extreme_failure_rate,
    extreme_mc,
    extreme_reliability,
    is_monotone,
    sensitivity_sweep,
    sweep_csv,
)
from geosub.spp import SppParams
from geosub.subordinators import Stable


def test_baseline_reliability():
    m = baseline_model()
    c = 1 - math.exp(-(0.3**0.6))
    assert extreme_reliability(1.0, m) == pytest.approx(1 / (1 + c), rel=1e-15)
    assert extreme_reliability(0.0, m) == 1.0
    assert np.allclose(extreme_reliability(np.array([0.5, 2.0]), m), 1 / (1 + np.array([0.5, 2.0]) * c))


def test_failure_rate_identity():
    m = baseline_model(q=0.4, alpha=0.8, lam=2.0, mu=0.5)
    for t in (0.1, 1.0, 7.0):
        h = 1e-5 * t
        d = -(math.log(extreme_reliability(t + h, m)) - math.log(extreme_reliability(t - h, m))) / (2 * h)
        assert d == pytest.approx(extreme_failure_rate(t, m), rel=1e-6)


def test_extreme_mc():
    reports = extreme_mc([0.5, 1.0, 2.0, 4.0], baseline_model(), 100_000, 7)
    assert all(r.passed for r in reports)
    again = extreme_mc([0.5, 1.0, 2.0, 4.0], baseline_model(), 100_000, 7)
    assert [r.estimate for r in reports] == [r.estimate for r in again]


def test_perfect_survival():
    m = baseline_model(q=1.0)
    assert extreme_reliability(5.0, m) == 1.0
    assert extreme_failure_rate(5.0, m) == 0.0


def test_invalid_model():
    with pytest.raises(ParameterError):
        baseline_model(q=1.5)
    with pytest.raises(ParameterError):
        CumulativeShockModel(0, GcpParams(1.0), SppParams(1.0, Stable(0.6)))
    with pytest.raises(ParameterError):
        extreme_reliability(-1.0, baseline_model())


@pytest.mark.parametrize("T", [1, 3, 5])
def test_cumulative_reliability_against_simulation(T):
    m = CumulativeShockModel(T, GcpParams(1.0), SppParams(1.0, Stable(0.6)))
    rep = cumulative_mc(1.0, m, 100_000, 60 + T)
    assert rep.passed


def test_cumulative_threshold_one_is_no_damage():
    m = CumulativeShockModel(1, GcpParams(1.0), SppParams(1.0, Stable(0.6)))
    assert cumulative_reliability(1.0, m) == pytest.approx(1 / (1 + (1 - math.exp(-1.0))), rel=1e-14)
    assert cumulative_reliability(0.0, m) == 1.0


def test_cumulative_custom_damage_sampler():
    m = CumulativeShockModel(2, GcpParams(1.0), SppParams(1.0, Stable(0.6)))
    rep = cumulative_mc(1.0, m, 10_000, 1, damage_sampler=lambda r, s: np.ones(s))
    # Z < 2 iff at most one geometric event: P = 1/2 + 1/4
    assert abs(rep.estimate - 0.75) < 4 * rep.stderr
    assert math.isnan(rep.target)


@pytest.mark.parametrize("parameter,values", [("q", (0.5, 0.7, 0.9)), ("alpha", (0.4, 0.6, 0.8)),
                                              ("lambda", (0.5, 1.0, 2.0)), ("mu", (0.5, 1.0, 2.0))])
def test_sweep_orderings(parameter, values):
    rows = sensitivity_sweep(baseline_model(), parameter, values, [0.0, 1.0, 5.0, 10.0])
    assert is_monotone(rows, parameter)
    assert not is_monotone(rows, parameter, direction=-EXPECTED_DIRECTION[parameter])


def test_failure_rate_sweep_runs_opposite_way():
    rows = sensitivity_sweep(baseline_model(), "q", (0.5, 0.9), [0.5, 1.0], quantity="failure_rate")
    assert is_monotone(rows, "q", "failure_rate", direction=-1)


def test_sweep_with_monte_carlo_columns():
    rows = sensitivity_sweep(baseline_model(), "q", (0.5, 0.9), [1.0], mc_n=2000, seed=3)
    assert set(rows[0]) == {"parameter_name", "parameter_value", "t", "reliability", "mc_estimate", "mc_stderr"}


def test_sweep_csv_format(tmp_path):
    rows = sensitivity_sweep(baseline_model(), "mu", (0.5, 1.0), [0.0, 1.0])
    text = sweep_csv(rows, tmp_path / "s.csv")
    lines = text.splitlines()
    assert lines[0] == "parameter_name,parameter_value,t,reliability"
    assert lines[1] == "mu,0.5,0,1"
    assert (tmp_path / "s.csv").read_text() == text
    assert float(lines[2].split(",")[-1]) == extreme_reliability(1.0, baseline_model(mu=0.5))


def test_unknown_sweep_parameter():
    with pytest.raises(ParameterError):
        sensitivity_sweep(baseline_model(), "nu", (1.0,), [1.0])


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.05, 0.95), st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(0.0, 20.0),
       st.floats(0.0, 20.0))
def test_reliability_is_a_decreasing_survival_function(q, alpha, lam, mu, s, t):
    m = baseline_model(q, alpha, lam, mu)
    lo, hi = sorted((s, t))
    assert 0.0 < extreme_reliability(hi, m) <= extreme_reliability(lo, m) <= 1.0
