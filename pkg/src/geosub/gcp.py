"""Geometric counting process ``G_mu(t)``.

A mixed Poisson process whose random rate is exponential with mean ``mu``.
Marginals are geometric; increments are positively dependent, so paths are
always simulated through the mixing construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentOrderError, ParameterError

__all__ = [
    "GcpParams",
    "CountPath",
    "gcp_pmf",
    "gcp_pmf_table",
    "gcp_moments",
    "gcp_cov",
    "gcp_sample_path",
    "gcp_sample_count",
    "gcp_geometric_draw",
]


@dataclass(frozen=True)
class GcpParams:
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ParameterError(f"mu must be > 0, got {self.mu}")


@dataclass(frozen=True)
class CountPath:
    """Event times of one path on ``(0, horizon]``."""

    event_times: np.ndarray
    horizon: float

    def count_at(self, t):
        """Right-continuous counting function ``G(t)``."""
        return np.searchsorted(self.event_times, t, side="right")


def _check_t(t):
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")


def gcp_pmf(k: int, t: float, p: GcpParams) -> float:
    """``P[G(t) = k] = (1 / (1 + mu t)) (mu t / (1 + mu t))^k``."""
    _check_t(t)
    if k < 0:
        return 0.0
    m = p.mu * t
    return (1.0 / (1.0 + m)) * (m / (1.0 + m)) ** k


def gcp_pmf_table(t: float, p: GcpParams, kmax: int) -> np.ndarray:
    _check_t(t)
    m = p.mu * t
    return (1.0 / (1.0 + m)) * (m / (1.0 + m)) ** np.arange(kmax + 1)


def gcp_moments(t: float, p: GcpParams) -> tuple[float, float]:
    _check_t(t)
    m = p.mu * t
    return m, m * (1.0 + m)


def gcp_cov(s: float, t: float, p: GcpParams) -> float:
    """``Cov[G(s), G(t)] = mu s (1 + mu t)`` for ``0 <= s <= t``."""
    if s > t:
        raise ArgumentOrderError(f"gcp_cov expects s <= t, got s={s}, t={t}")
    _check_t(s)
    return p.mu * s * (1.0 + p.mu * t)


def gcp_sample_path(p: GcpParams, horizon: float, rng: np.random.Generator) -> CountPath:
    """One path: draw the rate from Exp(mean mu), then a Poisson path with that rate."""
    if not horizon > 0:
        raise ParameterError(f"horizon must be > 0, got {horizon}")
    rate = rng.exponential(p.mu)
    n = rng.poisson(rate * horizon)
    times = np.sort(rng.uniform(0.0, horizon, n))
    return CountPath(times, float(horizon))


def gcp_sample_count(t, p: GcpParams, rng: np.random.Generator, size=None):
    """Counts at the time points ``t`` (scalar or increasing array) for ``size`` paths.

    Vectorised mixing construction: one rate per path, then independent
    Poisson increments *given* that rate.  Returns shape ``size + t.shape``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ParameterError("time points must be non-negative and nondecreasing")
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    rate = rng.exponential(p.mu, shape)
    dt = np.diff(np.concatenate([[0.0], t]))
    incr = rng.poisson(rate[..., None] * dt)
    counts = np.cumsum(incr, axis=-1)
    if counts.shape[-1] == 1:
        counts = counts[..., 0]
    return counts


def gcp_geometric_draw(t: float, p: GcpParams, rng: np.random.Generator, size=None):
    """Marginal ``G(t)`` only, drawn directly from the geometric law."""
    _check_t(t)
    m = p.mu * t
    if m == 0:
        return np.zeros(size, dtype=np.int64) if size is not None else 0
    return rng.geometric(1.0 / (1.0 + m), size) - 1

