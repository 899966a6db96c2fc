import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geosub.errors import ArgumentOrderError, ParameterError
from geosub.gcp import (
    GcpParams,
    gcp_cov,
    gcp_geometric_draw,
    gcp_moments,
    gcp_pmf,
    gcp_pmf_table,
    gcp_sample_count,
    gcp_sample_path,
)
from geosub.mc import mc_pmf_tv


def test_pmf_unit_parameters():
    p = GcpParams(1.0)
    assert [gcp_pmf(k, 1.0, p) for k in range(4)] == [0.5, 0.25, 0.125, 0.0625]
    assert np.array_equal(gcp_pmf_table(1.0, p, 3), [0.5, 0.25, 0.125, 0.0625])


def test_pmf_at_time_zero_is_point_mass():
    assert gcp_pmf(0, 0.0, GcpParams(2.0)) == 1.0
    assert gcp_pmf(3, 0.0, GcpParams(2.0)) == 0.0


def test_moments_and_covariance():
    p = GcpParams(2.0)
    mean, var = gcp_moments(1.5, p)
    assert mean == pytest.approx(3.0)
    assert var == pytest.approx(3.0 * 4.0)
    assert gcp_cov(0.5, 1.5, p) == pytest.approx(2.0 * 0.5 * (1.0 + 2.0 * 1.5))
    assert gcp_cov(1.5, 1.5, p) == pytest.approx(var)


def test_cov_argument_order():
    with pytest.raises(ArgumentOrderError):
        gcp_cov(2.0, 1.0, GcpParams(1.0))


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_invalid_intensity(bad):
    with pytest.raises(ParameterError):
        GcpParams(bad)


def test_negative_time():
    with pytest.raises(ParameterError):
        gcp_pmf(0, -1.0, GcpParams(1.0))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 10.0), st.floats(0.01, 10.0))
def test_pmf_table_sums_to_one(mu, t):
    probs = gcp_pmf_table(t, GcpParams(mu), 4000)
    assert abs(probs.sum() - 1.0) < 1e-10
    assert np.all(np.diff(probs) <= 0)


def test_path_counts_follow_law():
    p = GcpParams(1.0)
    rng = np.random.default_rng(11)
    counts = np.array([gcp_sample_path(p, 2.0, rng).count_at(1.0) for _ in range(20_000)])
    emp = np.bincount(counts, minlength=40)[:40] / counts.size
    assert 0.5 * np.abs(emp - gcp_pmf_table(1.0, p, 39)).sum() < 0.02


def test_path_is_nondecreasing_and_bounded_by_horizon():
    path = gcp_sample_path(GcpParams(3.0), 5.0, np.random.default_rng(1))
    assert np.all(np.diff(path.event_times) >= 0)
    assert np.all(path.event_times <= 5.0)
    assert path.count_at(0.0) == 0


def test_count_sampler_and_geometric_draw_agree_in_law():
    p = GcpParams(1.0)
    pmf = gcp_pmf_table(1.0, p, 40)
    assert mc_pmf_tv(lambda r, s: gcp_sample_count(1.0, p, r, s), pmf, 100_000, 40, 5) < 0.01
    assert mc_pmf_tv(lambda r, s: gcp_geometric_draw(1.0, p, r, s), pmf, 100_000, 40, 6) < 0.01
