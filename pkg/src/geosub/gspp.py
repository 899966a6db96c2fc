"""Subordinated Poisson process run on geometric time, ``N^f(G_mu(t))``.

Given ``G = n`` the count is ``N^f(n)``, so every pmf here is a geometric
mixture of subordinated Poisson pmfs.  Averaging ``e^{-n t f}`` over the
geometric law gives the generating function
``E[u^N] = 1 / (1 + mu t (1 - e^{-f(lam (1 - u))}))``, whose jet at ``u = 1``
(taken in the variable ``lam u``) yields every probability at once.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, ParameterError, RegionError
from .gcp import GcpParams, gcp_geometric_draw, gcp_pmf
from .numerics import (
    Jet,
    Pmf,
    SeriesControl,
    adaptive_pmf,
    generalized_binomial,
    geometric_egf_coeffs,
    jet_exp,
    jet_reciprocal,
)
from .spp import (
    SppParams,
    check_probabilities,
    closed_series_scalar,
    closed_series_table,
    refine_table,
    spp_pmf_generic,
    spp_pmf_sfpp,
    spp_pmf_tsfpp,
    spp_sample,
)
from .subordinators import Stable, Subordinator, TemperedStable, taylor_coeffs_at

__all__ = [
    "GsppParams",
    "MomentTriple",
    "gspp_pmf_generic",
    "gspp_pmf_generic_table",
    "gspp_pmf_sfpp",
    "gspp_pmf_sfpp_table",
    "gspp_pmf_tsfpp",
    "gspp_pmf_tsfpp_table",
    "gspp_pmf_conditioning",
    "gspp_pmf_table",
    "gspp_pgf",
    "sfpp_region",
    "tsfpp_region",
    "gspp_moments",
    "gspp_sample",
    "first_passage_density",
    "first_passage_total",
    "tsfpp_moments",
    "tsfpp_cov",
    "dispersion_index",
    "correlation",
    "correlation_limit",
    "correlation_asymptote",
    "correlation_asymptote_linear",
]


@dataclass(frozen=True)
class GsppParams:
    spp: SppParams
    gcp: GcpParams

    @classmethod
    def of(cls, lam: float, mu: float, sub: Subordinator) -> "GsppParams":
        return cls(SppParams(lam, sub), GcpParams(mu))

    @property
    def lam(self) -> float:
        return self.spp.lam

    @property
    def mu(self) -> float:
        return self.gcp.mu

    @property
    def sub(self) -> Subordinator:
        return self.spp.sub


@dataclass(frozen=True)
class MomentTriple:
    """Mean and variance at ``t`` plus the covariance function ``cov(s, u)`` for ``s <= u``."""

    mean: float
    variance: float
    cov: Callable[[float, float], float]


def _check(k, t):
    if k < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")


def _indicator_table(kmax):
    out = np.zeros(kmax + 1)
    out[0] = 1.0
    return out


# --------------------------------------------------------------------------
# generic route


def gspp_pmf_generic_table(t: float, p: GsppParams, kmax: int) -> np.ndarray:
    """``P[N = k]`` for ``k = 0..kmax`` from the jet of ``1 / (1 + mu t (1 - e^{-f(lam u)}))``."""
    _check(0, t)
    if t == 0:
        return _indicator_table(kmax)
    F = taylor_coeffs_at(p.sub, p.lam, kmax)
    E = jet_exp(-F)
    g = 1.0 + p.mu * t * (1.0 - E)
    c = jet_reciprocal(g).coefficients
    probs = c * (-1.0) ** np.arange(kmax + 1)
    check_probabilities(probs, "gspp_pmf_generic")
    return probs


def gspp_pmf_generic(k: int, t: float, p: GsppParams, ctl: SeriesControl | None = None, order: int | None = None) -> float:
    _check(k, t)
    K = max(k, 32) if order is None else order
    if K < k:
        raise ParameterError(f"jet order {K} is below requested k={k}")
    return float(gspp_pmf_generic_table(t, p, K)[k])


def gspp_pgf(u, t: float, p: GsppParams):
    """``E[u^N]`` for ``u`` in ``[0, 1]`` (vectorised)."""
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)):
        raise ParameterError("pgf argument must lie in [0, 1]")
    f = p.sub.laplace_exponent(p.lam * (1.0 - u))
    return 1.0 / (1.0 + p.mu * t * (1.0 - np.exp(-f)))


# --------------------------------------------------------------------------
# stable family: closed series with geometric polynomials


def sfpp_region(t: float, lam: float, alpha: float, mu: float) -> tuple[float, float]:
    """``(lam^alpha, log(1 + 1/(mu t)))``; the series converges iff the first is smaller."""
    return lam**alpha, math.log1p(1.0 / (mu * t))


def tsfpp_region(t: float, lam: float, alpha: float, nu: float, mu: float) -> tuple[float, float]:
    """``((lam+nu)^alpha + nu^alpha, log(1 + 1/(mu t)))``; converges iff the first is smaller.

    Implies the weaker condition ``e^{nu^alpha} mu t < 1 + mu t``.
    """
    return (lam + nu) ** alpha + nu**alpha, math.log1p(1.0 / (mu * t))


def _egf_terms(y, x):
    """Generator factory yielding ``(-1)^r x^r w_r(y) / r!`` in a given backend."""

    def gen(B):
        n, start = 64, 0
        while True:
            d = geometric_egf_coeffs(y, x, n, B)
            for r in range(start, n + 1):
                yield d[r] if r % 2 == 0 else -d[r]
            start, n = n + 1, 2 * n

    return gen


def _egf_coeffs(y, x):
    def coeffs(n):
        d = np.asarray(geometric_egf_coeffs(y, x, n), dtype=float)
        d[1::2] *= -1.0
        return d

    return coeffs


def _require(inside, msg):
    if not inside:
        raise RegionError(msg)


def gspp_pmf_sfpp(
    k: int, t: float, lam: float, alpha: float, mu: float, ctl: SeriesControl | None = None, *, full: bool = False
):
    """pmf of the geometric space-fractional Poisson process.

    ``P_k = sum_r C(alpha r, k) (-lam^alpha)^r (-1)^k w_r(mu t) / r!``.

    The scaled geometric polynomials come from one reciprocal recurrence
    and the alternating sum is re-run in extended precision when its
    cancellation exceeds ``abs_tol``.  Converges only while
    ``lam^alpha < log(1 + 1/(mu t))``; outside, use :func:`gspp_pmf_generic`.
    """
    _check(k, t)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if t == 0 or mu == 0:
        return float(k == 0)
    x, bound = sfpp_region(t, lam, alpha, mu)
    _require(x < bound, f"gspp_pmf_sfpp: lam^alpha = {x:.6g} >= log(1 + 1/(mu t)) = {bound:.6g}; "
             "the series diverges, use gspp_pmf_generic")
    res = closed_series_scalar(k, alpha, _egf_terms(mu * t, x), ctl, label="gspp_pmf_sfpp")
    return res if full else res.value


def gspp_pmf_sfpp_table(t: float, lam: float, alpha: float, mu: float, kmax: int, ctl: SeriesControl | None = None):
    ctl = ctl or SeriesControl()
    _check(0, t)
    if t == 0:
        return _indicator_table(kmax)
    x, bound = sfpp_region(t, lam, alpha, mu)
    _require(x < bound, f"gspp_pmf_sfpp: lam^alpha = {x:.6g} >= {bound:.6g}")
    values, err = closed_series_table(kmax, alpha, _egf_coeffs(mu * t, x), tol=ctl.abs_tol, label="gspp_pmf_sfpp")
    return refine_table(values, err, alpha, _egf_terms(mu * t, x), ctl, label="gspp_pmf_sfpp")


def _tsfpp_setup(t, lam, alpha, nu, mu):
    y = mu * t
    e = math.exp(nu**alpha)
    denom = 1.0 + y * (1.0 - e)
    return denom, y * e / denom, (lam + nu) ** alpha


def gspp_pmf_tsfpp(
    k: int,
    t: float,
    lam: float,
    alpha: float,
    nu: float,
    mu: float,
    ctl: SeriesControl | None = None,
    *,
    fallback: bool = False,
    full: bool = False,
):
    """pmf of the geometric tempered space-fractional Poisson process.

    ``P_k = (lam/(lam+nu))^k / (1 + mu t (1 - e^{nu^a}))
    * sum_r (-1)^r (lam+nu)^{a r} w_r(z) / r! * (-1)^k C(a r, k)``
    with ``z = e^{nu^a} mu t / (1 + mu t (1 - e^{nu^a}))``.

    Valid while ``(lam+nu)^a + nu^a < log(1 + 1/(mu t))``.  Outside that
    region a :class:`RegionError` is raised, or with ``fallback=True`` the
    conditioning sum over geometric time is used instead.
    ``nu = 0`` reproduces :func:`gspp_pmf_sfpp`.
    """
    _check(k, t)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if nu < 0:
        raise ParameterError(f"nu must be >= 0, got {nu}")
    if t == 0:
        return float(k == 0)
    lhs, bound = tsfpp_region(t, lam, alpha, nu, mu)
    if not lhs < bound:
        if fallback:
            p = GsppParams.of(lam, mu, TemperedStable(alpha, nu) if nu > 0 else Stable(alpha))
            return gspp_pmf_conditioning(k, t, p, ctl=ctl)
        raise RegionError(
            f"gspp_pmf_tsfpp: (lam+nu)^alpha + nu^alpha = {lhs:.6g} >= log(1 + 1/(mu t)) = {bound:.6g}; "
            "pass fallback=True or use gspp_pmf_generic"
        )
    denom, z, x = _tsfpp_setup(t, lam, alpha, nu, mu)
    res = closed_series_scalar(
        k,
        alpha,
        _egf_terms(z, x),
        ctl,
        pref=lambda B: 1 / B.num(denom),
        rho=lambda B: B.num(lam) / (B.num(lam) + B.num(nu)),
        label="gspp_pmf_tsfpp",
    )
    return res if full else res.value


def gspp_pmf_tsfpp_table(
    t: float, lam: float, alpha: float, nu: float, mu: float, kmax: int, ctl: SeriesControl | None = None
) -> np.ndarray:
    """Vectorised :func:`gspp_pmf_tsfpp` over ``k = 0..kmax`` (inside the convergence region only)."""
    ctl = ctl or SeriesControl()
    _check(0, t)
    if t == 0:
        return _indicator_table(kmax)
    lhs, bound = tsfpp_region(t, lam, alpha, nu, mu)
    _require(lhs < bound, f"gspp_pmf_tsfpp: {lhs:.6g} >= {bound:.6g}")
    denom, z, x = _tsfpp_setup(t, lam, alpha, nu, mu)
    values, err = closed_series_table(
        kmax, alpha, _egf_coeffs(z, x), pref=1.0 / denom, rho=lam / (lam + nu), tol=ctl.abs_tol, label="gspp_pmf_tsfpp"
    )
    return refine_table(
        values,
        err,
        alpha,
        _egf_terms(z, x),
        ctl,
        pref=lambda B: 1 / (1 + B.num(mu) * B.num(t) * (1 - B.exp(B.num(nu) ** B.num(alpha)))),
        rho=lambda B: B.num(lam) / (B.num(lam) + B.num(nu)),
        label="gspp_pmf_tsfpp",
    )


# --------------------------------------------------------------------------
# conditioning on the geometric clock (brute-force oracle)


def _default_spp_pmf(p: GsppParams, ctl):
    sub = p.sub
    if isinstance(sub, Stable):
        return lambda k, s: spp_pmf_sfpp(k, s, p.lam, sub.alpha, ctl)
    if isinstance(sub, TemperedStable):
        return lambda k, s: spp_pmf_tsfpp(k, s, p.lam, sub.alpha, sub.nu, ctl)
    return lambda k, s: spp_pmf_generic(k, s, p.spp)


def gspp_pmf_conditioning(
    k: int,
    t: float,
    p: GsppParams,
    spp_pmf: Callable[[int, float], float] | None = None,
    ctl: SeriesControl | None = None,
    tol: float = 1e-14,
) -> float:
    """``sum_n P[G(t) = n] P[N^f(n) = k]``, truncated once the geometric tail is below ``tol``.

    Summation is in fixed order over n so results are reproducible.
    """
    _check(k, t)
    if t == 0:
        return float(k == 0)
    spp_pmf = spp_pmf or _default_spp_pmf(p, ctl)
    y = p.mu * t
    q = y / (1.0 + y)
    n_max = int(math.ceil(math.log(tol) / math.log(q))) if q > 0 else 0
    terms = [gcp_pmf(0, t, p.gcp) * float(k == 0)]
    terms += [gcp_pmf(n, t, p.gcp) * spp_pmf(k, float(n)) for n in range(1, n_max + 1)]
    return math.fsum(terms)


# --------------------------------------------------------------------------
# adaptive tables


def gspp_pmf_table(
    t: float, p: GsppParams, tail_tol: float = 1e-10, ctl: SeriesControl | None = None, k_cap: int | None = None
) -> Pmf:
    """Adaptively truncated pmf of ``N^f(G(t))``.

    The stable family uses the vectorised geometric-polynomial series when
    it converges uniformly in k (its power-law tail needs very large K);
    otherwise the jet route is used.
    """
    sub = p.sub
    if isinstance(sub, Stable) and t > 0:
        x, bound = sfpp_region(t, p.lam, sub.alpha, p.mu)
        if x < bound:
            table = lambda K: gspp_pmf_sfpp_table(t, p.lam, sub.alpha, p.mu, K, ctl)
            try:
                return adaptive_pmf(table, tail_tol, k_cap=k_cap or 2**21, label="gspp_pmf_sfpp")
            except ConvergenceError as exc:
                warnings.warn(f"closed series unusable ({exc}); falling back to jets", RuntimeWarning, stacklevel=2)
    return adaptive_pmf(lambda K: gspp_pmf_generic_table(t, p, K), tail_tol, k_cap=k_cap or 4096, label="gspp_pmf")


# --------------------------------------------------------------------------
# moments


def gspp_moments(t: float, p: GsppParams) -> MomentTriple:
    """Mean, variance and covariance from the unit-time subordinator moments.

    ``E = lam mu t m1``;
    ``Cov(s, u) = lam mu s (lam m2 + m1) + mu^2 lam^2 s u m1^2`` for ``s <= u``,
    where ``m1, m2`` are the first two moments of ``D(1)``.
    """
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    m = p.sub.unit_moments()
    lam, mu = p.lam, p.mu
    if not m.finite:
        inf = math.inf
        return MomentTriple(inf if t > 0 else 0.0, inf if t > 0 else 0.0, lambda s, u: inf)
    m1, m2 = m.mean, m.second_moment

    def cov(s, u):
        if s > u:
            s, u = u, s
        if s < 0:
            raise ParameterError("times must be >= 0")
        return lam * mu * s * (lam * m2 + m1) + mu**2 * lam**2 * s * u * m1**2

    return MomentTriple(lam * mu * t * m1, cov(t, t), cov)


def tsfpp_moments(t: float, lam: float, alpha: float, nu: float, mu: float) -> tuple[float, float]:
    """Mean and variance written out for the tempered-stable family."""
    a1 = alpha * nu ** (alpha - 1)
    mean = lam * a1 * mu * t
    var = mean + lam**2 * alpha * (1 - alpha) * nu ** (alpha - 2) * mu * t + lam**2 * a1**2 * mu * t * (1 + mu * t)
    return mean, var


def tsfpp_cov(s: float, t: float, lam: float, alpha: float, nu: float, mu: float) -> float:
    """Covariance written out for the tempered-stable family, ``s <= t``."""
    if s > t:
        s, t = t, s
    a1 = alpha * nu ** (alpha - 1)
    return alpha * lam * nu ** (alpha - 2) * (lam * (1 - alpha) + nu) * mu * s + lam**2 * a1**2 * (mu * s + mu**2 * s * t)


def dispersion_index(t: float, lam: float, alpha: float, nu: float, mu: float) -> float:
    """``Var / E = 1 + lam (1 - alpha) / nu + lam alpha nu^(alpha-1) (1 + mu t)``."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    return 1.0 + lam * (1.0 - alpha) / nu + lam * alpha * nu ** (alpha - 1.0) * (1.0 + mu * t)


def correlation(s: float, t: float, p: GsppParams) -> float:
    mom = gspp_moments(max(s, t), p)
    return mom.cov(s, t) / math.sqrt(mom.cov(s, s) * mom.cov(t, t))


def correlation_limit(s: float, p: GsppParams) -> float:
    """``lim_{t -> inf} Corr(N(s), N(t)) = lam mu s m1 / sqrt(Var N(s))``.

    Positive for every finite-mean family: the shared geometric clock keeps
    distant times correlated.
    """
    m = p.sub.unit_moments()
    if not m.finite:
        return math.nan
    var_s = gspp_moments(s, p).variance
    return p.lam * p.mu * s * m.mean / math.sqrt(var_s)


def correlation_asymptote_linear(s: float, lam: float, mu: float) -> float:
    """Closed-form ``lim Corr(t, s) / t^-1`` claimed for ``f(s) = s``.

    ``s (1 + lam) / (sqrt(lam mu) sqrt(s (1 + lam + lam mu s)))``
    """
    return s * (1 + lam) / (math.sqrt(lam * mu) * math.sqrt(s * (1 + lam + lam * mu * s)))


def correlation_asymptote(s: float, lam: float, alpha: float, nu: float, mu: float) -> float:
    """Closed-form ``lim Corr(t, s) / t^-1`` claimed for the tempered-stable family."""
    num = s * (1 + lam * (1 - alpha) / nu + alpha * lam * nu ** (alpha - 1) * s)
    rad = nu ** (alpha - 1) * s + lam * (1 - alpha) * nu ** (alpha - 2) * s + lam * alpha * nu ** (2 * (alpha - 1)) * s * (1 + mu * s)
    return num / (math.sqrt(lam * alpha * mu) * math.sqrt(rad))


# --------------------------------------------------------------------------
# sampling


def gspp_sample(t: float, p: GsppParams, rng: np.random.Generator, size=None):
    """Random sum of ``G(t)`` iid copies of ``N^f(1)``; exact in law."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    n = 1 if size is None else int(size)
    if t == 0:
        out = np.zeros(n, dtype=np.int64)
    else:
        g = np.asarray(gcp_geometric_draw(t, p.gcp, rng, n), dtype=np.int64)
        total = int(g.sum())
        y = np.asarray(spp_sample(1.0, p.spp, rng, total), dtype=np.int64) if total else np.zeros(0, np.int64)
        owner = np.repeat(np.arange(n), g)
        out = np.bincount(owner, weights=y, minlength=n).astype(np.int64)
    return out if size is not None else int(out[0])


# --------------------------------------------------------------------------
# first passage


def _survival_fn(k: int, p: GsppParams, ctl):
    sub = p.sub
    if not isinstance(sub, Stable):
        raise ParameterError("first_passage_density needs a stable subordinator")
    alpha = sub.alpha

    def below(s):
        x, bound = sfpp_region(s, p.lam, alpha, p.mu)
        if x < bound:
            return math.fsum(gspp_pmf_sfpp(j, s, p.lam, alpha, p.mu, ctl) for j in range(k))
        return math.fsum(gspp_pmf_generic_table(s, p, max(k - 1, 1))[:k])

    return below


def first_passage_density(
    k: int, s: float, p: GsppParams, ctl: SeriesControl | None = None, *, method: str = "numeric"
) -> float:
    """Density of ``T_k = inf{s : N(G(s)) >= k}`` for the stable family.

    ``method="numeric"`` differentiates ``P[N(G(s)) < k]`` with a five-point
    stencil.  ``method="series"`` uses the term-by-term derivative
    ``sum_{j<k} sum_r C(a r, j) (-lam^a)^r (-1)^(j+1) / r! * d/ds w_r(mu s)``,
    with ``d/ds w_r(mu s) = sum_i S(r, i) i! i mu^i s^(i-1)``.
    """
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if not s > 0:
        raise ParameterError(f"s must be > 0, got {s}")
    if method == "series":
        return _first_passage_series(k, s, p)
    if method != "numeric":
        raise ParameterError(f"unknown method {method!r}")
    below = _survival_fn(k, p, ctl)
    h = 1e-3 * s
    d = (-below(s + 2 * h) + 8 * below(s + h) - 8 * below(s - h) + below(s - 2 * h)) / (12 * h)
    dens = -d
    if dens < -1e-7:
        raise ConvergenceError(f"first_passage_density: negative value {dens:.3g} at s={s}", partial_sum=dens)
    return max(dens, 0.0)


def _first_passage_series(k, s, p: GsppParams):
    sub = p.sub
    if not isinstance(sub, Stable):
        raise ParameterError("first_passage_density needs a stable subordinator")
    alpha, mu = sub.alpha, p.mu
    x, bound = sfpp_region(s, p.lam, alpha, mu)
    _require(x < bound, "first_passage_density: outside the series convergence region")
    y = mu * s
    # scaled derivatives x^r w_r'(y) / r! are the z-coefficients of
    # (e^{xz} - 1) / (1 - y (e^{xz} - 1))^2
    n = 64
    while True:
        j = np.arange(1, n + 1)
        e = np.zeros(n + 1)
        e[1:] = np.exp(np.cumsum(np.log(x / j)))
        D = jet_reciprocal(Jet(np.concatenate([[1.0], -y * e[1:]])))
        dw = (Jet(e) * D * D).coefficients
        if abs(dw[-1]) * (alpha * n + 1.0) ** k < 1e-18:
            break
        if n > 8192:
            raise ConvergenceError("first_passage_density: series did not converge", n_terms=n)
        n *= 2
    r = np.arange(n + 1)
    total = []
    for jj in range(k):
        binom = np.array([generalized_binomial(alpha * rr, jj) for rr in r])
        total.append(math.fsum(binom * dw * (-1.0) ** r * (-1.0) ** (jj + 1)))
    return mu * math.fsum(total)


def first_passage_total(k: int, p: GsppParams, ctl: SeriesControl | None = None, s_max: float | None = None) -> float:
    """``int_0^inf`` of the density; at most one (``T_k`` may be infinite)."""
    f = lambda s: first_passage_density(k, s, p, ctl) if s > 0 else 0.0
    if s_max is None:
        val, _ = integrate.quad(f, 0.0, np.inf, limit=200)
    else:
        val, _ = integrate.quad(f, 0.0, s_max, limit=200)
    return val
