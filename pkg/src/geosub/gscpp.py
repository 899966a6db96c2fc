"""Compound process ``Y(t) = X_1 + ... + X_{N(G(t))}`` with iid jumps.

Everything is obtained by conditioning on the count ``N = N^f(G_mu(t))``:
``P[Y <= y] = sum_m P[N = m] P[X_1 + ... + X_m <= y]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .gcp import gcp_pmf
from .gspp import GsppParams, MomentTriple, gspp_moments, gspp_pmf_generic_table, gspp_pmf_table, gspp_sample
from .jumps import JumpLaw, atoms_cdf_from, atoms_powers, lattice_cdf_from, lattice_powers
from .numerics import SeriesControl
from .spp import spp_pmf_generic_table

__all__ = [
    "GscppParams",
    "gscpp_moments",
    "gscpp_atom",
    "gscpp_pmf_discrete",
    "gscpp_cdf",
    "gscpp_sample",
    "count_table",
]


@dataclass(frozen=True)
class GscppParams:
    gspp: GsppParams
    jumps: JumpLaw


def _check_t(t):
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")


def gscpp_moments(t: float, p: GscppParams) -> MomentTriple:
    """Mean, variance and covariance of ``Y``.

    ``E[Y] = E[N] E[X]`` and, for ``s <= u``,
    ``Cov(Y(s), Y(u)) = E[N(s)] Var X + E[X]^2 Cov(N(s), N(u))``
    (given the counts, the extra jumps after ``s`` are independent).
    With ``m1, m2`` the moments of ``D(1)`` this expands to
    ``Var Y = mu t (lam m1 E[X^2] + lam^2 E[X]^2 Var D(1)) + lam^2 m1^2 E[X]^2 mu t (1 + mu t)``.
    """
    _check_t(t)
    n = gspp_moments(t, p.gspp)
    ex, ex2 = p.jumps.moment1, p.jumps.moment2
    var_x = ex2 - ex**2
    lam, mu = p.gspp.lam, p.gspp.mu
    m1 = p.gspp.sub.unit_moments().mean

    def cov(s, u):
        if s > u:
            s, u = u, s
        return lam * mu * s * m1 * var_x + ex**2 * n.cov(s, u)

    return MomentTriple(n.mean * ex, cov(t, t), cov)


def gscpp_atom(t: float, p: GscppParams) -> float:
    """Mass of the no-event term, ``1 / (1 + mu t (1 - e^{-f(lam)}))``."""
    _check_t(t)
    f = p.gspp.sub.laplace_exponent(p.gspp.lam)
    return 1.0 / (1.0 + p.gspp.mu * t * (1.0 - math.exp(-f)))


def count_table(t: float, p: GsppParams, tail_tol: float, ctl: SeriesControl | None = None, m_cap: int | None = None):
    """``P[N = m]`` up to the point where the remaining mass is below ``tail_tol``."""
    if t == 0:
        return np.ones(1)
    if m_cap is not None:
        return gspp_pmf_generic_table(t, p, m_cap)
    pm = gspp_pmf_table(t, p, tail_tol=tail_tol, ctl=ctl)
    probs = pm.probs
    # drop the far tail once the cumulative mass is within tail_tol of one
    cum = np.cumsum(probs)
    stop = int(np.searchsorted(cum, 1.0 - tail_tol)) + 1
    return probs[: max(stop, 1)]


def gscpp_pmf_discrete(
    kmax: int,
    t: float,
    p: GscppParams,
    ctl: SeriesControl | None = None,
    *,
    route: str = "derivative",
    tail_tol: float = 1e-12,
) -> np.ndarray:
    """``P[Y = k]`` for ``k = 0..kmax`` with integer-valued jumps.

    ``route="derivative"`` weights the m-fold convolutions ``h^{*m}`` by the
    jet coefficients of the generating function of ``N``.
    ``route="conditioning"`` conditions on the geometric clock instead:
    ``sum_n P[G = n] sum_j P[N^f(n) = j] h^{*j}``, never touching the
    geometric-time jets.
    """
    _check_t(t)
    law = p.jumps
    if law.kind != "discrete":
        raise ParameterError("gscpp_pmf_discrete needs a discrete jump law")
    if t == 0:
        out = np.zeros(kmax + 1)
        out[0] = 1.0
        return out
    h0 = law.probs[0]
    m_cap = kmax if h0 == 0.0 else None
    if route == "derivative":
        weights = count_table(t, p.gspp, tail_tol, ctl, m_cap)
    elif route == "conditioning":
        weights = _conditioned_counts(t, p.gspp, tail_tol, m_cap)
    else:
        raise ParameterError(f"unknown route {route!r}")
    return _mix_powers(law, weights, kmax)


def _mix_powers(law, weights, kmax):
    out = np.zeros(kmax + 1)
    for m, _, masses in lattice_powers(law, weights.size - 1, float(kmax)):
        seg = masses[: kmax + 1]
        out[: seg.size] += weights[m] * seg
    return out


def _conditioned_counts(t, p: GsppParams, tail_tol, m_cap):
    """``P[N = m]`` as ``sum_n P[G = n] P[N^f(n) = m]``; each inner pmf by jets."""
    y = p.mu * t
    q = y / (1.0 + y)
    n_max = int(math.ceil(math.log(tail_tol * 1e-2) / math.log(q)))
    K = m_cap if m_cap is not None else 256
    while True:
        acc = np.zeros(K + 1)
        acc[0] = gcp_pmf(0, t, p.gcp)
        for n in range(1, n_max + 1):
            acc += gcp_pmf(n, t, p.gcp) * spp_pmf_generic_table(float(n), p.spp, K)
        if m_cap is not None or 1.0 - acc.sum() < tail_tol or K >= 4096:
            return acc
        K *= 2


def gscpp_cdf(
    y,
    t: float,
    p: GscppParams,
    ctl: SeriesControl | None = None,
    *,
    tail_tol: float = 1e-10,
    max_step: float = 0.1,
):
    """``P[Y(t) <= y]`` for non-negative jumps (vectorised in y).

    Grid laws are convolved on their midpoint lattice; a step above
    ``max_step`` triggers a resolution warning.
    """
    _check_t(t)
    law = p.jumps
    if law.lower < 0:
        raise ParameterError("gscpp_cdf needs non-negative jumps")
    if law.kind == "grid" and law.step > max_step:
        warnings.warn(f"grid step {law.step} exceeds {max_step}; cdf accuracy is O(step^2)", RuntimeWarning, stacklevel=2)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    weights = count_table(t, p.gspp, tail_tol, ctl)
    return compound_cdf(law, weights, y)


def compound_cdf(law: JumpLaw, weights: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``sum_m weights[m] P[X_1 + ... + X_m <= y]``."""
    out = np.zeros(y.shape)
    m_max = weights.size - 1
    if law.kind == "atoms":
        for m, vals, probs in atoms_powers(law, m_max):
            out += weights[m] * atoms_cdf_from(vals, probs, y)
        return out
    spread = law.kind == "grid"
    lower = law.lower
    for m, off, masses in lattice_powers(law, m_max, float(y.max())):
        if m == 0:
            out += weights[0] * (y >= 0)
            continue
        if lower > 0 and m * lower > y.max():
            break
        out += weights[m] * lattice_cdf_from(masses, off, law.step, spread, y)
    return np.clip(out, 0.0, 1.0)


def gscpp_sample(t: float, p: GscppParams, rng: np.random.Generator, size=None):
    """Draw the count, then add that many jumps."""
    _check_t(t)
    n = 1 if size is None else int(size)
    counts = np.atleast_1d(gspp_sample(t, p.gspp, rng, n))
    total = int(counts.sum())
    x = p.jumps.sample(rng, total) if total else np.zeros(0)
    out = np.bincount(np.repeat(np.arange(n), counts), weights=x, minlength=n)
    return out if size is not None else float(out[0])
