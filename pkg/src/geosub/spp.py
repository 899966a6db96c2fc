"""Subordinated Poisson process ``N^f(t) = N(D^f(t))``.

Three pmf routes:

* ``spp_pmf_generic`` works for any family through jets of ``exp(-t f(lam u))``;
* ``spp_pmf_sfpp`` is the closed series for the stable family;
* ``spp_pmf_tsfpp`` is the closed series for the tempered-stable family.

The closed series share one shape,
``P_k = pref * rho^k * sum_r c_r (-1)^k C(alpha r, k)``, which is what
``closed_series_scalar`` / ``closed_series_table`` evaluate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import count
from typing import Callable

import mpmath
import numpy as np

from .errors import ConvergenceError, ParameterError
from .numerics import (
    Pmf,
    SeriesControl,
    SeriesResult,
    adaptive_pmf,
    generalized_binomial,
    jet_exp,
    mp_backend,
    mp_lock,
    signed_binomial_row,
    sum_series,
)
from .subordinators import Stable, Subordinator, TemperedStable, taylor_coeffs_at

__all__ = [
    "SppParams",
    "spp_pmf_generic",
    "spp_pmf_generic_table",
    "spp_pmf_sfpp",
    "spp_pmf_tsfpp",
    "spp_pmf_sfpp_table",
    "spp_pmf_tsfpp_table",
    "spp_pmf_table",
    "spp_moments",
    "spp_sample",
]

NEGATIVE_TOL = 1e-9
_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class SppParams:
    lam: float
    sub: Subordinator

    def __post_init__(self):
        if not self.lam > 0:
            raise ParameterError(f"lambda must be > 0, got {self.lam}")


def _check(k, t):
    if k < 0:
        raise ParameterError(f"k must be >= 0, got {k}")
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")


def check_probabilities(values, label):
    """Raise when round-off has pushed a probability clearly below zero."""
    values = np.asarray(values)
    if values.size and values.min() < -NEGATIVE_TOL:
        k = int(values.argmin())
        raise ConvergenceError(f"{label}: P[{k}] = {values[k]:.3g} < 0", partial_sum=float(values[k]))


# --------------------------------------------------------------------------
# generic route


def spp_pmf_generic_table(t: float, p: SppParams, kmax: int) -> np.ndarray:
    """``[P[N^f(t) = k] for k in 0..kmax]`` from the jet of ``exp(-t f(lam u))``."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    F = taylor_coeffs_at(p.sub, p.lam, kmax)
    c = jet_exp(F * (-t)).coefficients
    probs = c * (-1.0) ** np.arange(kmax + 1)
    check_probabilities(probs, "spp_pmf_generic")
    return probs


def spp_pmf_generic(k: int, t: float, p: SppParams, ctl: SeriesControl | None = None, order: int | None = None) -> float:
    _check(k, t)
    K = max(k, 32) if order is None else order
    if K < k:
        raise ParameterError(f"jet order {K} is below requested k={k}")
    return float(spp_pmf_generic_table(t, p, K)[k])


# --------------------------------------------------------------------------
# closed series


def closed_series_scalar(
    k: int,
    alpha: float,
    coeff_terms: Callable,
    ctl: SeriesControl | None,
    *,
    pref: Callable = lambda B: B.num(1),
    rho: Callable = lambda B: B.num(1),
    min_terms: int = 0,
    label: str,
) -> SeriesResult:
    """``pref * rho^k * sum_r c_r (-1)^k C(alpha r, k)`` via :func:`sum_series`.

    ``coeff_terms(B)`` yields ``c_0, c_1, ...`` with backend ``B``.
    """
    sign = -1 if k % 2 else 1
    min_terms = max(min_terms, int(math.ceil(k / alpha)) + 3)

    def make(B):
        a = B.num(alpha)
        scale = pref(B) * rho(B) ** k * sign
        for r, c in zip(count(), coeff_terms(B)):
            yield scale * c * generalized_binomial(a * r, k)

    return sum_series(make, ctl, min_terms=min_terms, label=label)


def closed_series_table(
    kmax: int,
    alpha: float,
    coeffs: Callable[[int], np.ndarray],
    *,
    pref: float = 1.0,
    rho: float = 1.0,
    tol: float = 1e-12,
    max_terms: int = 10_000,
    label: str,
):
    """Vectorised double-precision version over ``k = 0..kmax``.

    Returns ``(values, rounding_bound)`` where ``rounding_bound[k]`` is a
    conservative estimate of the cancellation error of entry k.
    """
    n = 64
    c = np.asarray(coeffs(n), dtype=float)
    values = np.zeros(kmax + 1)
    abs_acc = np.zeros(kmax + 1)
    small_run = 0
    for j in count():
        if j > n:
            if n >= max_terms:
                raise ConvergenceError(f"{label}: no uniform convergence in k after {n} terms", n_terms=n)
            n = min(2 * n, max_terms)
            c = np.asarray(coeffs(n), dtype=float)
        if not np.isfinite(c[j]):
            raise ConvergenceError(f"{label}: coefficient {j} overflowed", n_terms=j)
        row = c[j] * signed_binomial_row(alpha * j, kmax)
        peak = float(np.abs(row).max())
        if not np.isfinite(peak) or peak > 1e280:
            raise ConvergenceError(f"{label}: row {j} overflowed", n_terms=j)
        values += row
        abs_acc += (j + 2) * np.abs(row)
        small_run = small_run + 1 if peak < tol * 1e-3 else 0
        if small_run >= 8:
            break
    kk = np.arange(kmax + 1)
    scale = pref * rho**kk
    return values * scale, _EPS * abs_acc * scale


def refine_table(
    values: np.ndarray,
    bound: np.ndarray,
    alpha: float,
    coeff_terms: Callable,
    ctl: SeriesControl,
    *,
    pref: Callable = lambda B: B.num(1),
    rho: Callable = lambda B: B.num(1),
    label: str,
) -> np.ndarray:
    """Recompute the entries of a closed-series table whose rounding bound exceeds ``abs_tol``.

    One extended-precision pass over the rows serves every flagged k at
    once, which is far cheaper than a separate series per k.
    """
    tol = ctl.abs_tol
    bad = np.nonzero(bound > tol)[0]
    if bad.size == 0:
        return values
    if not ctl.extended_precision:
        raise ConvergenceError(f"{label}: cancellation; rounding bound {bound.max():.3g} exceeds abs_tol={tol:.3g}")
    digits = max(int(math.ceil(math.log10(float(bound.max()) / (_EPS * tol)))) + 4, 20)
    if digits > ctl.max_digits:
        raise ConvergenceError(f"{label}: needs about {digits} digits (max_digits={ctl.max_digits})")
    kmax = int(bad.max())
    with mp_lock, mpmath.workdps(digits):
        B = mp_backend(digits)
        a = B.num(alpha)
        acc = [B.num(0)] * (kmax + 1)
        small_run = 0
        for r, c in zip(count(), coeff_terms(B)):
            if r >= ctl.max_terms:
                raise ConvergenceError(f"{label}: no convergence within max_terms={ctl.max_terms}", n_terms=r)
            ar = a * r
            b = c
            peak = 0.0
            for k in range(kmax + 1):
                if k:
                    b = -b * (ar - (k - 1)) / k
                acc[k] += b
                peak = max(peak, abs(float(b)))
            small_run = small_run + 1 if peak < tol * 1e-3 and r > kmax / alpha else 0
            if small_run >= 8:
                break
        scale, q = pref(B), rho(B)
        for k in bad:
            values[k] = float(scale * q ** int(k) * acc[k])
    return values


def _sfpp_coeff_terms(x):
    def gen(B):
        xm = -B.num(x)
        c = B.num(1)
        for r in count():
            if r:
                c = c * xm / r
            yield c

    return gen


def _poisson_coeffs(x):
    def coeffs(n):
        r = np.arange(1, n + 1)
        out = np.empty(n + 1)
        out[0] = 1.0
        out[1:] = np.cumprod(-x / r)
        return out

    return coeffs


def spp_pmf_sfpp(k: int, t: float, lam: float, alpha: float, ctl: SeriesControl | None = None, *, full: bool = False):
    """Space-fractional Poisson pmf.

    ``P_k = (-1)^k sum_r ((-lam^alpha t)^r / r!) C(alpha r, k)``; the
    Gamma-function ratio is replaced by the falling-factorial binomial.
    Reliable up to ``lam^alpha t`` of a few tens; beyond, the extended
    precision retry grows expensive and ``max_digits`` eventually trips.
    """
    _check(k, t)
    _check_alpha(alpha)
    x = lam**alpha * t
    res = closed_series_scalar(
        k, alpha, _sfpp_coeff_terms(x), ctl, min_terms=int(math.ceil(x)) + 3, label="spp_pmf_sfpp"
    )
    return res if full else res.value


def spp_pmf_tsfpp(
    k: int, t: float, lam: float, alpha: float, nu: float, ctl: SeriesControl | None = None, *, full: bool = False
):
    """Tempered space-fractional Poisson pmf.

    ``P_k = e^{nu^a t} (lam/(lam+nu))^k (-1)^k sum_m ((-t (lam+nu)^a)^m / m!) C(a m, k)``.
    ``nu = 0`` gives back :func:`spp_pmf_sfpp` term by term.
    """
    _check(k, t)
    _check_alpha(alpha)
    if nu < 0:
        raise ParameterError(f"nu must be >= 0, got {nu}")
    x = t * (lam + nu) ** alpha
    res = closed_series_scalar(
        k,
        alpha,
        _sfpp_coeff_terms(x),
        ctl,
        pref=lambda B: B.exp(B.num(nu) ** B.num(alpha) * B.num(t)),
        rho=lambda B: B.num(lam) / (B.num(lam) + B.num(nu)),
        min_terms=int(math.ceil(x)) + 3,
        label="spp_pmf_tsfpp",
    )
    return res if full else res.value


def spp_pmf_sfpp_table(t: float, lam: float, alpha: float, kmax: int, ctl: SeriesControl | None = None) -> np.ndarray:
    ctl = ctl or SeriesControl()
    _check(0, t)
    x = lam**alpha * t
    values, bound = closed_series_table(kmax, alpha, _poisson_coeffs(x), tol=ctl.abs_tol, label="spp_pmf_sfpp")
    return refine_table(values, bound, alpha, _sfpp_coeff_terms(x), ctl, label="spp_pmf_sfpp")


def spp_pmf_tsfpp_table(
    t: float, lam: float, alpha: float, nu: float, kmax: int, ctl: SeriesControl | None = None
) -> np.ndarray:
    ctl = ctl or SeriesControl()
    _check(0, t)
    x = t * (lam + nu) ** alpha
    values, bound = closed_series_table(
        kmax,
        alpha,
        _poisson_coeffs(x),
        pref=math.exp(nu**alpha * t),
        rho=lam / (lam + nu),
        tol=ctl.abs_tol,
        label="spp_pmf_tsfpp",
    )
    return refine_table(
        values,
        bound,
        alpha,
        _sfpp_coeff_terms(x),
        ctl,
        pref=lambda B: B.exp(B.num(nu) ** B.num(alpha) * B.num(t)),
        rho=lambda B: B.num(lam) / (B.num(lam) + B.num(nu)),
        label="spp_pmf_tsfpp",
    )


def spp_pmf_table(
    t: float, p: SppParams, tail_tol: float = 1e-10, ctl: SeriesControl | None = None, k_cap: int | None = None
) -> Pmf:
    """Adaptively truncated pmf of ``N^f(t)``.

    Stable families use the vectorised closed series (their tails are
    power laws, so K can run into the millions); everything else uses jets.
    """
    sub = p.sub
    if isinstance(sub, Stable):
        table = lambda K: spp_pmf_sfpp_table(t, p.lam, sub.alpha, K, ctl)
        return adaptive_pmf(table, tail_tol, k_cap=k_cap or 2**21, label="spp_pmf_sfpp")
    return adaptive_pmf(lambda K: spp_pmf_generic_table(t, p, K), tail_tol, k_cap=k_cap or 4096, label="spp_pmf")


# --------------------------------------------------------------------------
# moments and sampling


def spp_moments(t: float, p: SppParams) -> tuple[float, float]:
    """``(lam E[D(t)], lam^2 Var[D(t)] + lam E[D(t)])`` with ``D(t)`` linear in t.

    Infinite for the (mixed) stable families.
    """
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    if t == 0:
        return 0.0, 0.0
    m = p.sub.unit_moments()
    if not m.finite:
        return math.inf, math.inf
    mean_d, var_d = t * m.mean, t * m.variance
    return p.lam * mean_d, p.lam**2 * var_d + p.lam * mean_d


def spp_sample(t: float, p: SppParams, rng: np.random.Generator, size=None):
    """``N(D(t))``: subordinator draw, then a Poisson count with mean ``lam D``."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    if t == 0:
        return np.zeros(size, dtype=np.int64) if size is not None else 0
    d = p.sub.sample(t, rng, size)
    return rng.poisson(p.lam * np.asarray(d))


def tempered_params(p: SppParams) -> tuple[float, float]:
    if not isinstance(p.sub, TemperedStable):
        raise ParameterError("this evaluator needs a tempered_stable subordinator")
    return p.sub.alpha, p.sub.nu
