"""Multiplicative process ``Y(t) = X_1 X_2 ... X_{N(G(t))}`` with iid positive factors.

Products are handled as sums of logs, so the cdf reuses the compound-sum
engine: ``P[Y <= y] = sum_m P[N = m] P[log X_1 + ... + log X_m <= log y]``.
The Mellin moment ``E[Y^(beta-1)] = E[x^N]`` with ``x = E[X^(beta-1)]`` is the
generating function of the count, which has a closed form for ``0 <= x <= 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ParameterError
from .gscpp import compound_cdf, count_table
from .gspp import GsppParams, gspp_pgf, gspp_pmf_generic_table, gspp_pmf_table, gspp_pmf_tsfpp, gspp_sample, tsfpp_region
from .jumps import JumpLaw
from .numerics import SeriesControl
from .subordinators import TemperedStable

__all__ = [
    "GsmppParams",
    "gsmpp_cdf",
    "gsmpp_mellin",
    "gsmpp_mean",
    "gsmpp_tempered_cdf",
    "gsmpp_atom_at_one",
    "gsmpp_sample",
]

_SERIES_CAP = 4096


@dataclass(frozen=True)
class GsmppParams:
    gspp: GsppParams
    factors: JumpLaw
    log_step: float = 0.01

    def mellin(self, beta: float) -> float:
        return self.factors.mellin(beta)

    def log_factors(self) -> JumpLaw:
        return self.factors.log_law(self.log_step)


def _check_t(t):
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")


def _log_cdf(law: JumpLaw, weights, y):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros(y.shape)
    pos = y > 0
    if np.any(pos):
        out[pos] = compound_cdf(law, weights, np.log(y[pos]))
    return out


def gsmpp_cdf(y, t: float, p: GsmppParams, ctl: SeriesControl | None = None, *, tail_tol: float = 1e-10):
    """``P[Y(t) <= y]``; the no-event term puts an atom at ``y = 1``."""
    _check_t(t)
    if p.factors.lower <= 0:
        raise ParameterError("gsmpp_cdf needs strictly positive factors")
    weights = count_table(t, p.gspp, tail_tol, ctl)
    return np.clip(_log_cdf(p.log_factors(), weights, y), 0.0, 1.0)


def gsmpp_mellin(
    beta: float, t: float, p: GsmppParams, ctl: SeriesControl | None = None, *, route: str = "pgf", tail_tol: float = 1e-13
) -> float:
    """``E[Y(t)^(beta - 1)]``.

    ``route="pgf"`` evaluates ``1 / (1 + mu t (1 - e^{-f(lam (1 - x))}))``
    at ``x = E[X^(beta-1)]``; ``route="series"`` sums ``P[N = m] x^m``.
    Both need ``0 <= x <= 1``: beyond it the series is not guaranteed to
    converge and a :class:`ConvergenceError` is raised.
    """
    _check_t(t)
    if route not in ("pgf", "series"):
        raise ParameterError(f"unknown route {route!r}")
    if t == 0:
        return 1.0
    x = p.mellin(beta)
    if not 0.0 <= x <= 1.0:
        raise ConvergenceError(
            f"gsmpp_mellin: E[X^(beta-1)] = {x:.6g} lies outside [0, 1]; the moment series may diverge"
        )
    if route == "pgf":
        return float(gspp_pgf(x, t, p.gspp))
    if x < 1.0:
        # terms beyond K weigh at most x^(K+1) in total, whatever the count's tail
        K = max(int(math.ceil(math.log(tail_tol) / math.log(x))), 1) if x > 0 else 0
        if K <= _SERIES_CAP:
            probs = gspp_pmf_generic_table(t, p.gspp, K)
            return math.fsum(probs * x ** np.arange(K + 1))
    pm = gspp_pmf_table(t, p.gspp, tail_tol=tail_tol, ctl=ctl)
    return math.fsum(pm.probs * x ** np.arange(pm.probs.size))


def gsmpp_mean(t: float, p: GsmppParams, ctl: SeriesControl | None = None, *, route: str = "pgf") -> float:
    """``E[Y(t)] = E[E[X]^N]``."""
    return gsmpp_mellin(2.0, t, p, ctl, route=route)


def gsmpp_atom_at_one(t: float, lam: float, alpha: float, nu: float, mu: float) -> float:
    """``P[N = 0] = 1 / (1 + mu t (1 - e^{-(lam+nu)^alpha + nu^alpha}))`` for tempered-stable counts."""
    _check_t(t)
    f = (lam + nu) ** alpha - nu**alpha
    return 1.0 / (1.0 + mu * t * (1.0 - math.exp(-f)))


def gsmpp_tempered_cdf(
    y,
    t: float,
    lam: float,
    alpha: float,
    nu: float,
    mu: float,
    factors: JumpLaw,
    ctl: SeriesControl | None = None,
    *,
    tail_tol: float = 1e-10,
    log_step: float = 0.01,
):
    """cdf for tempered-stable counts using the closed tempered series for ``P[N = m]``.

    Outside the series' convergence region the generic route is used and a
    ``RuntimeWarning`` is issued.
    """
    _check_t(t)
    p = GsmppParams(GsppParams.of(lam, mu, TemperedStable(alpha, nu)), factors, log_step)
    if t == 0:
        return gsmpp_cdf(y, t, p, ctl)
    lhs, bound = tsfpp_region(t, lam, alpha, nu, mu)
    if not lhs < bound:
        warnings.warn("gsmpp_tempered_cdf: outside the tempered series region; using the generic route",
                      RuntimeWarning, stacklevel=2)
        return gsmpp_cdf(y, t, p, ctl, tail_tol=tail_tol)
    weights, cum = [], 0.0
    while cum < 1.0 - tail_tol:
        w = gspp_pmf_tsfpp(len(weights), t, lam, alpha, nu, mu, ctl)
        weights.append(w)
        cum += w
        if len(weights) > 4096:
            raise ConvergenceError("gsmpp_tempered_cdf: count law not exhausted after 4096 terms", partial_sum=cum)
    return np.clip(_log_cdf(p.log_factors(), np.array(weights), y), 0.0, 1.0)


def gsmpp_sample(t: float, p: GsmppParams, rng: np.random.Generator, size=None):
    """Draw the count, then multiply that many factors (accumulated as logs)."""
    _check_t(t)
    n = 1 if size is None else int(size)
    counts = np.atleast_1d(gspp_sample(t, p.gspp, rng, n))
    total = int(counts.sum())
    x = p.factors.sample(rng, total) if total else np.ones(0)
    with np.errstate(divide="ignore"):
        logs = np.log(x)
    owner = np.repeat(np.arange(n), counts)
    s = np.zeros(n)
    np.add.at(s, owner, logs)
    out = np.exp(s)
    return out if size is not None else float(out[0])
