"""Special functions, truncated Taylor jets and a guarded series summer.

Every pmf in this package is a k-th derivative at ``u = 1`` of some smooth
function of ``u``.  Rather than differentiating symbolically we carry the
Taylor coefficients of that function around ``u = 1`` (a :class:`Jet`) and
push them through ``exp`` and reciprocal with the usual power-series
recurrences.  Coefficient ``c_k`` of the result equals ``g^(k)(1) / k!``.

The alternating closed-form series (space-fractional pmfs and their
geometric-time versions) lose digits to cancellation when their terms peak
far above the final value.  :func:`sum_series` sums them in double precision
first, estimates the rounding error, and re-runs the same term generator in
``mpmath`` with enough digits when the estimate exceeds the tolerance.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from types import SimpleNamespace
from typing import Callable, Iterable, Iterator

import mpmath
import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError, RangeError

__all__ = [
    "SeriesControl",
    "SeriesResult",
    "Jet",
    "stirling2",
    "geometric_polynomial",
    "generalized_binomial",
    "binomial_row",
    "signed_binomial_row",
    "jet_exp",
    "jet_reciprocal",
    "jet_mul",
    "jet_scale_add",
    "sum_series",
    "geometric_egf_coeffs",
    "FLOAT",
    "Pmf",
    "adaptive_pmf",
    "extrapolated_tail",
]

_EPS = float(np.finfo(float).eps)
_MAX_EXACT_N = 170
_TERM_CEILING = 1e280


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for infinite series.

    ``extended_precision`` lets :func:`sum_series` retry a cancelling series
    with ``mpmath`` at up to ``max_digits`` significant digits.
    """

    abs_tol: float = 1e-12
    max_terms: int = 10_000
    kahan: bool = True
    extended_precision: bool = True
    max_digits: int = 80

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ParameterError(f"abs_tol must be > 0, got {self.abs_tol}")
        if self.max_terms < 1:
            raise ParameterError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_CONTROL = SeriesControl()


@dataclass(frozen=True)
class SeriesResult:
    value: float
    n_terms: int
    tail_estimate: float
    max_term: float
    abs_sum: float
    rounding_error: float
    digits: int | None = None  # None means plain double precision


# --------------------------------------------------------------------------
# special functions


def _stirling_rows(n: int) -> list[list[int]]:
    rows = [[1]]
    for m in range(1, n + 1):
        prev = rows[-1]
        row = [0] * (m + 1)
        for k in range(1, m + 1):
            left = prev[k] if k < m else 0
            row[k] = k * left + prev[k - 1]
        rows.append(row)
    return rows


_stirling_cache = _stirling_rows(_MAX_EXACT_N)


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind ``S(n, k)``.

    Uses the triangular recurrence ``S(n,k) = k S(n-1,k) + S(n-1,k-1)``;
    the table is precomputed up to ``n = 170``.
    """
    if n < 0 or k < 0:
        raise ParameterError(f"stirling2 needs non-negative arguments, got ({n}, {k})")
    if n > _MAX_EXACT_N:
        raise RangeError(f"stirling2 is guarded to n <= {_MAX_EXACT_N}, got n={n}")
    if k > n:
        return 0
    return _stirling_cache[n][k]


def geometric_polynomial(n: int, y: float) -> float:
    """Geometric polynomial ``w_n(y) = sum_k S(n,k) k! y^k``."""
    if n < 0:
        raise ParameterError(f"degree must be non-negative, got {n}")
    if n > _MAX_EXACT_N:
        raise RangeError(f"geometric_polynomial is guarded to n <= {_MAX_EXACT_N}, got n={n}")
    if not math.isfinite(y):
        raise ParameterError(f"y must be finite, got {y}")
    row = _stirling_cache[n]
    total = 0.0
    fact = 1
    power = 1.0
    terms = []
    try:
        for k in range(n + 1):
            if k > 0:
                fact *= k
                power *= y
            if row[k]:
                terms.append(float(row[k] * fact) * power)
        total = math.fsum(terms)
    except OverflowError:
        total = math.inf
    if not math.isfinite(total):
        raise RangeError(f"w_{n}({y}) overflows double precision")
    return total


def generalized_binomial(a, k: int):
    """``C(a, k) = a (a-1) ... (a-k+1) / k!`` for real ``a``.

    Works unchanged for ``float`` and ``mpmath.mpf`` inputs.  The falling
    product is finite everywhere, unlike a ratio of Gamma functions.
    """
    if k < 0:
        raise ParameterError(f"k must be non-negative, got {k}")
    out = a * 0 + 1
    for i in range(k):
        out = out * (a - i) / (i + 1)
    return out


def binomial_row(a: float, kmax: int) -> np.ndarray:
    """``[C(a, 0), ..., C(a, kmax)]`` as a float array."""
    k = np.arange(1, kmax + 1, dtype=float)
    out = np.empty(kmax + 1)
    out[0] = 1.0
    out[1:] = np.cumprod((a - k + 1.0) / k)
    return out


def signed_binomial_row(a: float, kmax: int) -> np.ndarray:
    """``(-1)^k C(a, k)``, i.e. the coefficients of ``(1 - z)^a``."""
    k = np.arange(1, kmax + 1, dtype=float)
    out = np.empty(kmax + 1)
    out[0] = 1.0
    out[1:] = np.cumprod((k - 1.0 - a) / k)
    return out


# --------------------------------------------------------------------------
# jets


class Jet:
    """Degree-K truncated Taylor expansion around ``u = 1``.

    ``coefficients[j]`` is ``g^(j)(1) / j!``.
    """

    __slots__ = ("coefficients",)

    def __init__(self, coefficients):
        c = np.array(coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ParameterError("a jet needs a non-empty 1-D coefficient vector")
        self.coefficients = c

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    @classmethod
    def constant(cls, value: float, order: int) -> "Jet":
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    def derivative(self, k: int) -> float:
        """``g^(k)(1)``."""
        return float(self.coefficients[k] * math.factorial(k))

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ParameterError(f"jet orders differ: {self.order} vs {other.order}")
            return other.coefficients
        c = np.zeros_like(self.coefficients)
        c[0] = float(other)
        return c

    def __add__(self, other):
        return Jet(self.coefficients + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Jet(self.coefficients - self._coerce(other))

    def __rsub__(self, other):
        return Jet(self._coerce(other) - self.coefficients)

    def __neg__(self):
        return Jet(-self.coefficients)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return Jet(self.coefficients * float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, jet_reciprocal(other))
        return Jet(self.coefficients / float(other))

    def __rtruediv__(self, other):
        return jet_reciprocal(self) * other

    def exp(self) -> "Jet":
        return jet_exp(self)

    def reciprocal(self) -> "Jet":
        return jet_reciprocal(self)

    def __repr__(self):
        return f"Jet(order={self.order}, coefficients={self.coefficients!r})"


def jet_mul(x: Jet, y: Jet) -> Jet:
    if x.order != y.order:
        raise ParameterError(f"jet orders differ: {x.order} vs {y.order}")
    return Jet(np.convolve(x.coefficients, y.coefficients)[: x.order + 1])


def jet_scale_add(x: Jet, scale: float, shift: float = 0.0) -> Jet:
    """``scale * x + shift``."""
    c = x.coefficients * scale
    c[0] += shift
    return Jet(c)


def jet_exp(x: Jet) -> Jet:
    a = x.coefficients
    K = a.size - 1
    b = np.empty(K + 1)
    b[0] = math.exp(a[0])
    ja = a * np.arange(K + 1)
    for n in range(1, K + 1):
        b[n] = np.dot(ja[1 : n + 1], b[n - 1 :: -1]) / n
    return Jet(b)


def jet_reciprocal(x: Jet) -> Jet:
    a = x.coefficients
    if a[0] == 0.0:
        raise DomainError("reciprocal of a jet with zero constant term")
    K = a.size - 1
    b = np.empty(K + 1)
    b[0] = 1.0 / a[0]
    for n in range(1, K + 1):
        b[n] = -np.dot(a[1 : n + 1], b[n - 1 :: -1]) / a[0]
    return Jet(b)


# --------------------------------------------------------------------------
# series summation

FLOAT = SimpleNamespace(name="float", num=float, exp=math.exp, log=math.log, digits=None)


def mp_backend(digits: int) -> SimpleNamespace:
    return SimpleNamespace(name="mpmath", num=mpmath.mpf, exp=mpmath.exp, log=mpmath.log, digits=digits)


def _accumulate(terms: Iterable, ctl: SeriesControl, min_terms: int, label: str, digits=None) -> SeriesResult:
    total = 0.0 if digits is None else mpmath.mpf(0)
    comp = 0.0
    use_kahan = ctl.kahan and digits is None
    abs_sum = 0.0
    weighted = 0.0
    max_term = 0.0
    prev_abs = None
    small_run = 0
    tail = math.inf
    n = 0
    for r, term in enumerate(terms):
        if r >= ctl.max_terms:
            raise ConvergenceError(
                f"{label}: no convergence within max_terms={ctl.max_terms}",
                partial_sum=float(total + comp),
                tail_estimate=tail,
                n_terms=r,
            )
        n = r + 1
        mag = float(abs(term))
        if not math.isfinite(mag) or (digits is None and mag > _TERM_CEILING):
            raise ConvergenceError(
                f"{label}: term {r} has magnitude {mag:.3g}; use the generic jet evaluator",
                partial_sum=float(total + comp),
                n_terms=r,
            )
        if use_kahan:
            # Neumaier's variant of compensated summation
            s = total + term
            if abs(total) >= abs(term):
                comp += (total - s) + term
            else:
                comp += (term - s) + total
            total = s
        else:
            total = total + term
        abs_sum += mag
        weighted += (r + 2) * mag
        max_term = max(max_term, mag)

        if prev_abs is None:
            tail = mag
        elif prev_abs == 0.0:
            tail = 0.0 if mag == 0.0 else math.inf
        else:
            q = mag / prev_abs
            tail = mag * q / (1.0 - q) if q < 1.0 else math.inf
        prev_abs = mag
        small_run = small_run + 1 if mag < ctl.abs_tol else 0
        if n >= min_terms and small_run >= 3 and tail < ctl.abs_tol:
            break
    else:
        if n == 0:
            return SeriesResult(0.0, 0, 0.0, 0.0, 0.0, 0.0, digits)
        tail = 0.0  # finite generator
    value = float(total + comp) if digits is None else float(total)
    if digits is None:
        rounding = _EPS * weighted
    else:
        rounding = float(mpmath.mpf(10) ** (-digits)) * weighted
    return SeriesResult(value, n, tail, max_term, abs_sum, rounding, digits)


mp_lock = threading.Lock()


def sum_series(
    make_terms: Callable[[SimpleNamespace], Iterator],
    ctl: SeriesControl | None = None,
    *,
    min_terms: int = 0,
    label: str = "series",
) -> SeriesResult:
    """Sum ``make_terms(backend)`` with truncation and cancellation control.

    ``make_terms`` receives a backend namespace (``num``, ``exp``, ``log``)
    and must yield the terms computed with it, so the same generator can be
    replayed in extended precision.
    """
    ctl = ctl or DEFAULT_CONTROL
    result = _accumulate(make_terms(FLOAT), ctl, min_terms, label)
    if result.rounding_error <= ctl.abs_tol:
        return result
    if not ctl.extended_precision:
        raise ConvergenceError(
            f"{label}: cancellation; estimated rounding error {result.rounding_error:.3g} "
            f"exceeds abs_tol={ctl.abs_tol:.3g}",
            partial_sum=result.value,
            tail_estimate=result.tail_estimate,
            n_terms=result.n_terms,
        )
    digits = int(math.ceil(math.log10(result.abs_sum * (result.n_terms + 2) / ctl.abs_tol))) + 6
    digits = max(digits, 20)
    if digits > ctl.max_digits:
        raise ConvergenceError(
            f"{label}: needs about {digits} digits (max_digits={ctl.max_digits})",
            partial_sum=result.value,
            tail_estimate=result.tail_estimate,
            n_terms=result.n_terms,
        )
    # mpmath precision is process-global state
    with mp_lock, mpmath.workdps(digits):
        return _accumulate(make_terms(mp_backend(digits)), ctl, min_terms, label, digits)


# --------------------------------------------------------------------------
# geometric polynomials, scaled


def geometric_egf_coeffs(y: float, x: float, n: int, backend=FLOAT):
    """``[x^r w_r(y) / r! for r in 0..n]``.

    These are the Taylor coefficients of ``1 / (1 - y (e^{x z} - 1))`` in z,
    so they come from a single reciprocal recurrence.  All terms are
    positive for ``x, y > 0``, hence no cancellation; scaling by ``x^r / r!``
    keeps them in range whenever the series they feed converges.
    """
    if backend.digits is None:
        a = np.empty(n + 1)
        a[0] = 1.0
        if n:
            j = np.arange(1, n + 1, dtype=float)
            a[1:] = -y * np.exp(np.cumsum(np.log(x / j))) if x > 0 else 0.0
        return jet_reciprocal(Jet(a)).coefficients
    return _mp_geometric_egf(float(y), float(x), n, backend.digits)


_mp_egf_cache: dict = {}


def _mp_geometric_egf(y: float, x: float, n: int, digits: int):
    # round the precision up so that nearby requests share one cached recurrence
    digits = 16 * -(-digits // 16)
    key = (y, x, digits)
    cached = _mp_egf_cache.get(key)
    if cached is not None and len(cached[0]) > n:
        return cached[0][: n + 1]
    with mpmath.workdps(digits):
        ym, xm = mpmath.mpf(y), mpmath.mpf(x)
        if cached is None:
            d = [mpmath.mpf(1)]
            g = [mpmath.mpf(1)]  # x^j / j!
        else:
            d, g = cached
        while len(g) <= n:
            g.append(g[-1] * xm / len(g))
        while len(d) <= n:
            m = len(d)
            d.append(ym * mpmath.fdot(g[1 : m + 1], d[::-1]))
    if len(_mp_egf_cache) > 64:
        _mp_egf_cache.clear()
    _mp_egf_cache[key] = (d, g)
    return d[: n + 1]


# --------------------------------------------------------------------------
# truncated pmfs


@dataclass
class Pmf:
    """Probabilities ``P[X = k]`` for ``k = 0..k_max`` plus a tail estimate.

    ``tail_mass`` is extrapolated from the decay of the last entries, not
    computed as ``1 - sum(probs)``.
    """

    probs: np.ndarray
    tail_mass: float
    diagnostics: dict

    @property
    def k_max(self) -> int:
        return self.probs.size - 1

    @property
    def total(self) -> float:
        return math.fsum(self.probs)

    def cdf(self, k: int) -> float:
        return math.fsum(self.probs[: k + 1])


def extrapolated_tail(probs: np.ndarray) -> float:
    """Tail mass beyond ``probs[-1]`` assuming locally power-law decay.

    With ``P_k ~ A k^-g`` between ``K/2`` and ``K`` the neglected mass is
    ``~ P_K K / (g - 1)``; geometric tails give a large ``g`` and a small,
    mildly conservative estimate.
    """
    K = probs.size - 1
    if K < 8:
        return math.inf
    last = float(probs[K])
    half = float(probs[K // 2])
    if last <= 0.0:
        return 0.0 if half <= 0.0 else float(probs[K // 2 :].sum()) * 1e-3
    if half <= last:
        return math.inf
    g = math.log(half / last) / math.log(K / (K // 2))
    if g <= 1.0:
        return math.inf
    return last * K / (g - 1.0)


def adaptive_pmf(table, tail_tol: float, k_start: int = 32, k_cap: int = 4096, label="pmf") -> Pmf:
    """Double the truncation index until the extrapolated tail is below ``tail_tol``.

    ``table(K)`` must return the probabilities for ``k = 0..K``.
    """
    K = k_start
    while True:
        probs = np.asarray(table(K), dtype=float)
        tail = extrapolated_tail(probs)
        if tail < tail_tol or K >= k_cap:
            break
        K = min(2 * K, k_cap)
    diag = {"k_max": K, "tail_estimate": tail, "converged": tail < tail_tol}
    if tail >= tail_tol:
        raise ConvergenceError(
            f"{label}: tail estimate {tail:.3g} above {tail_tol:.3g} at K={K}",
            partial_sum=float(probs.sum()),
            tail_estimate=tail,
            n_terms=K + 1,
        )
    return Pmf(probs, tail, diag)
