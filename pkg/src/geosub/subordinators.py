"""Bernstein-function families for Lévy subordinators.

Each family knows its Laplace exponent ``f``, the Taylor coefficients of
``u -> f(lam * u)`` around ``u = 1``, its unit-time moments and an exact
sampler for the marginal ``D(t)``.

The tempering parameter is called ``nu`` everywhere (it is *not* the
geometric-clock intensity ``mu``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ParameterError, SamplerError, UnknownFamilyError
from .numerics import Jet, binomial_row

__all__ = [
    "UnitMoments",
    "Subordinator",
    "Stable",
    "TemperedStable",
    "GammaSubordinator",
    "InverseGaussian",
    "MixedStable",
    "MixedTempered",
    "laplace_exponent",
    "taylor_coeffs_at",
    "unit_moments",
    "subordinator_sample",
    "subordinator_from_dict",
]

# rejection acceptance below this triggers halving of the time step
_MIN_ACCEPTANCE = 1e-4
_MAX_REJECTION_ROUNDS = 10_000


@dataclass(frozen=True)
class UnitMoments:
    """Mean, second moment and variance of ``D(1)``; ``inf`` when infinite."""

    mean: float
    second_moment: float
    variance: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.mean) and math.isfinite(self.second_moment)


_INFINITE = UnitMoments(math.inf, math.inf, math.inf)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")


def _check_positive(name, value):
    if not value > 0:
        raise ParameterError(f"{name} must be > 0, got {value}")


class Subordinator:
    """Base class; subclasses are frozen dataclasses."""

    family: str = ""

    def laplace_exponent(self, s):
        raise NotImplementedError

    def taylor_coeffs(self, lam: float, order: int) -> Jet:
        raise NotImplementedError

    def unit_moments(self) -> UnitMoments:
        raise NotImplementedError

    def sample(self, t: float, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


# --------------------------------------------------------------------------
# stable


def _positive_stable(alpha: float, rng: np.random.Generator, size) -> np.ndarray:
    # Kanter's representation of the one-sided stable law with E[e^{-sX}] = e^{-s^alpha}
    u = rng.uniform(0.0, math.pi, size)
    e = rng.standard_exponential(size)
    a = np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)
    return a * b


@dataclass(frozen=True)
class Stable(Subordinator):
    """``f(s) = s^alpha``."""

    alpha: float
    family = "stable"

    def __post_init__(self):
        _check_alpha(self.alpha)

    def laplace_exponent(self, s):
        return np.power(s, self.alpha)

    def taylor_coeffs(self, lam, order):
        c = lam**self.alpha * binomial_row(self.alpha, order)
        return Jet(c)

    def unit_moments(self):
        return _INFINITE

    def sample(self, t, rng, size=None):
        return t ** (1.0 / self.alpha) * _positive_stable(self.alpha, rng, size)

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha}


# --------------------------------------------------------------------------
# tempered stable


@dataclass(frozen=True)
class TemperedStable(Subordinator):
    """``f(s) = (s + nu)^alpha - nu^alpha``."""

    alpha: float
    nu: float
    family = "tempered_stable"

    def __post_init__(self):
        _check_alpha(self.alpha)
        _check_positive("nu", self.nu)

    def laplace_exponent(self, s):
        return np.power(np.add(s, self.nu), self.alpha) - self.nu**self.alpha

    def taylor_coeffs(self, lam, order):
        a, nu = self.alpha, self.nu
        j = np.arange(order + 1)
        c = binomial_row(a, order) * (lam / (lam + nu)) ** j * (lam + nu) ** a
        c[0] -= nu**a
        return Jet(c)

    def unit_moments(self):
        a, nu = self.alpha, self.nu
        mean = a * nu ** (a - 1.0)
        var = a * (1.0 - a) * nu ** (a - 2.0)
        return UnitMoments(mean, var + mean * mean, var)

    def sample(self, t, rng, size=None):
        return _tempered_sample(self.alpha, self.nu, t, rng, size)

    def to_dict(self):
        return {"family": self.family, "alpha": self.alpha, "nu": self.nu}


def _tempered_sample(alpha, nu, t, rng, size):
    """Exponential tilting of stable(t) proposals: accept x w.p. ``e^{-nu x}``.

    The acceptance rate is ``exp(-t nu^alpha)``; when that drops below
    ``_MIN_ACCEPTANCE`` the horizon is halved and independent pieces summed.
    """
    if t <= 0:
        return np.zeros(size) if size is not None else 0.0
    pieces = 1
    while math.exp(-(t / pieces) * nu**alpha) < _MIN_ACCEPTANCE:
        pieces *= 2
    n = int(np.prod(size)) if size is not None else 1
    need = n * pieces
    tau = t / pieces
    scale = tau ** (1.0 / alpha)
    rate = math.exp(-tau * nu**alpha)
    out = np.empty(need)
    filled = 0
    rounds = 0
    while filled < need:
        rounds += 1
        if rounds > _MAX_REJECTION_ROUNDS:
            raise SamplerError(
                f"tempered-stable rejection stalled: alpha={alpha}, nu={nu}, t={t}, "
                f"acceptance~{rate:.3g}, accepted {filled}/{need}"
            )
        batch = min(max(64, int(1.2 * (need - filled) / rate) + 16), 2_000_000)
        x = scale * _positive_stable(alpha, rng, batch)
        keep = x[rng.uniform(size=batch) < np.exp(-nu * x)]
        take = min(keep.size, need - filled)
        out[filled : filled + take] = keep[:take]
        filled += take
    draws = out.reshape(n, pieces).sum(axis=1)
    if size is None:
        return float(draws[0])
    return draws.reshape(size)


# --------------------------------------------------------------------------
# gamma


@dataclass(frozen=True)
class GammaSubordinator(Subordinator):
    """``f(s) = p log(1 + s / beta)``."""

    p: float
    beta: float
    family = "gamma"

    def __post_init__(self):
        _check_positive("p", self.p)
        _check_positive("beta", self.beta)

    def laplace_exponent(self, s):
        return self.p * np.log1p(np.divide(s, self.beta))

    def taylor_coeffs(self, lam, order):
        c = np.empty(order + 1)
        c[0] = self.p * math.log1p(lam / self.beta)
        if order:
            j = np.arange(1, order + 1)
            z = lam / (self.beta + lam)
            c[1:] = self.p * (-1.0) ** (j + 1) * z**j / j
        return Jet(c)

    def unit_moments(self):
        mean = self.p / self.beta
        var = self.p / self.beta**2
        return UnitMoments(mean, var + mean * mean, var)

    def sample(self, t, rng, size=None):
        return rng.gamma(self.p * t, 1.0 / self.beta, size)

    def to_dict(self):
        return {"family": self.family, "p": self.p, "beta": self.beta}


# --------------------------------------------------------------------------
# inverse Gaussian


@dataclass(frozen=True)
class InverseGaussian(Subordinator):
    """``f(s) = delta (sqrt(2 s + gamma^2) - gamma)``."""

    delta: float
    gamma: float
    family = "inverse_gaussian"

    def __post_init__(self):
        _check_positive("delta", self.delta)
        _check_positive("gamma", self.gamma)

    def laplace_exponent(self, s):
        return self.delta * (np.sqrt(np.multiply(2.0, s) + self.gamma**2) - self.gamma)

    def taylor_coeffs(self, lam, order):
        base = 2.0 * lam + self.gamma**2
        j = np.arange(order + 1)
        c = self.delta * math.sqrt(base) * binomial_row(0.5, order) * (2.0 * lam / base) ** j
        c[0] -= self.delta * self.gamma
        return Jet(c)

    def unit_moments(self):
        mean = self.delta / self.gamma
        var = self.delta / self.gamma**3
        return UnitMoments(mean, var + mean * mean, var)

    def sample(self, t, rng, size=None):
        # numpy's Wald generator is the Michael-Schucany-Haas root-selection method
        if t <= 0:
            return np.zeros(size) if size is not None else 0.0
        mean = self.delta * t / self.gamma
        shape = (self.delta * t) ** 2
        return rng.wald(mean, shape, size)

    def to_dict(self):
        return {"family": self.family, "delta": self.delta, "gamma": self.gamma}


# --------------------------------------------------------------------------
# mixtures: f = sum_i c_i f_i, realised as a sum of independent components


def _check_weights(weights):
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ParameterError("mixture weights must be a non-empty sequence")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ParameterError(f"mixture weights must be >= 0 and sum to 1, got {list(w)}")


@dataclass(frozen=True)
class _Mixture(Subordinator):
    weights: tuple = field(default=())

    def components(self) -> list[tuple[float, Subordinator]]:
        raise NotImplementedError

    def laplace_exponent(self, s):
        return sum(c * comp.laplace_exponent(s) for c, comp in self.components())

    def taylor_coeffs(self, lam, order):
        total = np.zeros(order + 1)
        for c, comp in self.components():
            total += c * comp.taylor_coeffs(lam, order).coefficients
        return Jet(total)

    def unit_moments(self):
        mean = var = 0.0
        for c, comp in self.components():
            m = comp.unit_moments()
            if c > 0 and not m.finite:
                return _INFINITE
            mean += c * m.mean
            var += c * m.variance
        return UnitMoments(mean, var + mean * mean, var)

    def sample(self, t, rng, size=None):
        total = np.zeros(size) if size is not None else 0.0
        for c, comp in self.components():
            if c > 0:
                total = total + comp.sample(c * t, rng, size)
        return total


@dataclass(frozen=True)
class MixedStable(_Mixture):
    """``f(s) = sum_i c_i s^{alpha_i}``."""

    alphas: tuple = ()
    family = "mixed_stable"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        _check_weights(self.weights)
        if len(self.alphas) != len(self.weights):
            raise ParameterError("weights and alphas must have equal length")
        for a in self.alphas:
            _check_alpha(a)

    def components(self):
        return [(c, Stable(a)) for c, a in zip(self.weights, self.alphas)]

    def to_dict(self):
        return {"family": self.family, "weights": list(self.weights), "alphas": list(self.alphas)}


@dataclass(frozen=True)
class MixedTempered(_Mixture):
    """``f(s) = sum_i c_i ((s + nu_i)^{alpha_i} - nu_i^{alpha_i})``."""

    alphas: tuple = ()
    nus: tuple = ()
    family = "mixed_tempered"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "nus", tuple(float(v) for v in self.nus))
        _check_weights(self.weights)
        if not len(self.alphas) == len(self.nus) == len(self.weights):
            raise ParameterError("weights, alphas and nus must have equal length")
        for a, v in zip(self.alphas, self.nus):
            _check_alpha(a)
            _check_positive("nu", v)

    def components(self):
        return [(c, TemperedStable(a, v)) for c, a, v in zip(self.weights, self.alphas, self.nus)]

    def to_dict(self):
        return {
            "family": self.family,
            "weights": list(self.weights),
            "alphas": list(self.alphas),
            "nus": list(self.nus),
        }


# --------------------------------------------------------------------------
# functional surface


def laplace_exponent(sub: Subordinator, s):
    if np.any(np.asarray(s) < 0):
        raise ParameterError("the Laplace exponent is evaluated at s >= 0")
    return sub.laplace_exponent(s)


def taylor_coeffs_at(sub: Subordinator, lam: float, order: int) -> Jet:
    """Jet of ``u -> f(lam * u)`` at ``u = 1``; coefficient j is ``d^j f(lam u)/du^j / j!``."""
    _check_positive("lambda", lam)
    if order < 0:
        raise ParameterError(f"jet order must be >= 0, got {order}")
    return sub.taylor_coeffs(lam, order)


def unit_moments(sub: Subordinator) -> UnitMoments:
    return sub.unit_moments()


def subordinator_sample(sub: Subordinator, t: float, rng: np.random.Generator, size=None):
    """Draw ``D(t)``; the result has Laplace transform ``exp(-t f(s))``."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    return sub.sample(t, rng, size)


_FAMILIES = {
    "stable": lambda d: Stable(d["alpha"]),
    "tempered_stable": lambda d: TemperedStable(d["alpha"], d["nu"]),
    "gamma": lambda d: GammaSubordinator(d["p"], d["beta"]),
    "inverse_gaussian": lambda d: InverseGaussian(d["delta"], d["gamma"]),
    "mixed_stable": lambda d: MixedStable(weights=tuple(d["weights"]), alphas=tuple(d["alphas"])),
    "mixed_tempered": lambda d: MixedTempered(
        weights=tuple(d["weights"]), alphas=tuple(d["alphas"]), nus=tuple(d["nus"])
    ),
}

FAMILY_NAMES: Sequence[str] = tuple(_FAMILIES)


def subordinator_from_dict(d: dict) -> Subordinator:
    """Inverse of ``Subordinator.to_dict`` (the JSON config shape)."""
    family = d.get("family")
    if family not in _FAMILIES:
        raise UnknownFamilyError(f"unknown subordinator family {family!r}; expected one of {sorted(_FAMILIES)}")
    try:
        return _FAMILIES[family](d)
    except KeyError as exc:
        raise ParameterError(f"family {family!r} is missing parameter {exc.args[0]!r}") from None
