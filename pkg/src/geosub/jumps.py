"""Laws of jump sizes (compound process) and factors (multiplicative process).

Three representations:

* ``discrete``: pmf on ``0, 1, ..., n``;
* ``atoms``: finitely many arbitrary support points;
* ``grid``: piecewise-constant density on cells ``[origin + i h, origin + (i+1) h)``.

Sums of iid draws are handled on the lattice: a grid law is convolved through
its cell midpoints and each resulting atom is spread back over one cell when
a cdf is read off.  For smooth densities this costs ``O(h^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import ParameterError

__all__ = ["JumpLaw", "lattice_powers", "lattice_power_cdf", "atoms_powers", "atoms_power_cdf"]

_MASS_TOL = 1e-9


def _as_probs(values, name):
    p = np.asarray(values, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ParameterError(f"{name} must be a non-empty list")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ParameterError(f"{name} must be finite and non-negative")
    return p


@dataclass(frozen=True)
class JumpLaw:
    kind: str
    probs: np.ndarray
    origin: float = 0.0
    step: float = 1.0
    support: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("discrete", "atoms", "grid"):
            raise ParameterError(f"unknown jump law kind {self.kind!r}")
        total = float(np.sum(self.probs))
        if abs(total - 1.0) > _MASS_TOL:
            raise ParameterError(f"jump law mass is {total!r}, expected 1 within {_MASS_TOL}")
        if self.kind == "grid" and not self.step > 0:
            raise ParameterError("grid step must be > 0")
        if self.kind == "atoms" and (self.support is None or len(self.support) != len(self.probs)):
            raise ParameterError("atoms need one support value per probability")

    # ---- constructors

    @classmethod
    def discrete(cls, pmf) -> "JumpLaw":
        return cls("discrete", _as_probs(pmf, "pmf"))

    @classmethod
    def atoms(cls, values, probs) -> "JumpLaw":
        v = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ParameterError("atom values must be finite")
        return cls("atoms", _as_probs(probs, "probs"), support=v)

    @classmethod
    def point(cls, value: float) -> "JumpLaw":
        if float(value).is_integer() and value >= 0:
            pmf = np.zeros(int(value) + 1)
            pmf[-1] = 1.0
            return cls.discrete(pmf)
        return cls.atoms([value], [1.0])

    @classmethod
    def bernoulli(cls, q: float) -> "JumpLaw":
        if not 0.0 <= q <= 1.0:
            raise ParameterError(f"q must lie in [0, 1], got {q}")
        return cls.discrete([1.0 - q, q])

    @classmethod
    def grid(cls, origin: float, step: float, values) -> "JumpLaw":
        """Density ``values`` on cells of width ``step`` starting at ``origin``."""
        dens = _as_probs(values, "values")
        return cls("grid", dens * step, origin=float(origin), step=float(step))

    @classmethod
    def from_cdf(cls, cdf, origin: float, step: float, n: int) -> "JumpLaw":
        """Cell masses of a continuous law; the mass beyond the last cell is folded into it."""
        edges = origin + step * np.arange(n + 1)
        F = np.asarray(cdf(edges), dtype=float)
        masses = np.diff(F)
        masses[-1] += 1.0 - F[-1]
        masses[0] += F[0]
        return cls("grid", np.clip(masses, 0.0, None) / masses.sum(), origin=float(origin), step=float(step))

    @classmethod
    def exponential(cls, rate: float, step: float = 0.01, upper: float | None = None) -> "JumpLaw":
        upper = upper if upper is not None else 40.0 / rate
        n = int(math.ceil(upper / step))
        return cls.from_cdf(lambda x: -np.expm1(-rate * x), 0.0, step, n)

    @classmethod
    def from_dict(cls, d: dict) -> "JumpLaw":
        kind = d.get("kind")
        if kind == "discrete":
            return cls.discrete(d["pmf"])
        if kind == "atoms":
            return cls.atoms(d["values"], d["probs"])
        if kind == "grid":
            return cls.grid(d["origin"], d["step"], d["values"])
        raise ParameterError(f"unknown jump law kind {kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "discrete":
            return {"kind": "discrete", "pmf": self.probs.tolist()}
        if self.kind == "atoms":
            return {"kind": "atoms", "values": self.support.tolist(), "probs": self.probs.tolist()}
        return {"kind": "grid", "origin": self.origin, "step": self.step, "values": (self.probs / self.step).tolist()}

    # ---- properties

    @property
    def points(self) -> np.ndarray:
        """Representative atoms: integers, the support, or cell midpoints."""
        if self.kind == "discrete":
            return np.arange(self.probs.size, dtype=float)
        if self.kind == "atoms":
            return self.support
        return self.origin + self.step * (np.arange(self.probs.size) + 0.5)

    @property
    def lower(self) -> float:
        pts = self.points[self.probs > 0]
        return float(pts.min() - (0.5 * self.step if self.kind == "grid" else 0.0))

    @property
    def moment1(self) -> float:
        return float(np.dot(self.probs, self.points))

    @property
    def moment2(self) -> float:
        m2 = float(np.dot(self.probs, self.points**2))
        if self.kind == "grid":
            m2 += self.step**2 / 12.0  # uniform spread inside each cell
        return m2

    @property
    def mass_at_zero(self) -> float:
        return float(self.probs[self.points == 0.0].sum()) if self.kind != "grid" else 0.0

    def mellin(self, beta: float) -> float:
        """``E[X^(beta - 1)]`` for a non-negative law."""
        if self.lower < 0:
            raise ParameterError("Mellin moments need non-negative support")
        e = beta - 1.0
        if self.kind != "grid":
            pts, pr = self.points, self.probs
            with np.errstate(divide="ignore"):
                vals = np.where(pts > 0, pts ** e, 1.0 if e == 0 else (0.0 if e > 0 else np.inf))
            return float(np.dot(pr, vals))
        a = self.origin + self.step * np.arange(self.probs.size)
        b = a + self.step
        if e == -1.0:
            with np.errstate(divide="ignore"):
                per = np.log(b / a) / self.step
        else:
            per = (b ** (e + 1) - a ** (e + 1)) / ((e + 1) * self.step)
        return float(np.dot(self.probs, per))

    def cdf(self, y):
        """Single-jump cdf ``P[X <= y]``."""
        return atoms_power_cdf(self, 1, y) if self.kind == "atoms" else lattice_power_cdf(self, 1, y)

    def log_law(self, step: float = 0.01) -> "JumpLaw":
        """Law of ``log X`` for a positive law (grid laws are re-gridded in log space)."""
        if self.lower <= 0:
            raise ParameterError("log law needs strictly positive support")
        if self.kind != "grid":
            keep = self.probs > 0
            return JumpLaw.atoms(np.log(self.points[keep]), self.probs[keep])
        lo = math.log(self.origin)
        hi = math.log(self.origin + self.step * self.probs.size)
        n = int(math.ceil((hi - lo) / step))
        return JumpLaw.from_cdf(lambda z: self.cdf(np.exp(z)), lo, step, n)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        idx = rng.choice(self.probs.size, size=size, p=self.probs / self.probs.sum())
        x = self.points[idx]
        if self.kind == "grid":
            x = x + self.step * (rng.random(size) - 0.5)
        return x


# --------------------------------------------------------------------------
# m-fold sums


def _convolve(a, b, cap=None):
    out = signal.fftconvolve(a, b) if min(a.size, b.size) > 64 else np.convolve(a, b)
    out = np.clip(out, 0.0, None)
    return out[:cap] if cap is not None else out


def lattice_powers(law: JumpLaw, m_max: int, y_max: float | None = None):
    """Yield ``(m, offset, masses)`` for the m-fold sums, ``m = 0..m_max``.

    The sum of m draws sits on ``offset + step * j``; with non-negative
    support the arrays are cut at ``y_max``.
    """
    if law.kind == "atoms":
        raise ParameterError("lattice sums need a discrete or grid law")
    h = law.step
    base = law.points[0]
    cut = lambda m: None
    if y_max is not None and law.lower >= 0:
        cut = lambda m: max(int(math.floor((y_max - m * base) / h + 0.5)) + 2, 1)
    cur = np.ones(1)
    for m in range(m_max + 1):
        if m:
            cur = _convolve(cur, law.probs, cut(m))
        yield m, m * base, cur


def _lattice_cdf_from(masses, offset, step, spread, y):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    pos = (y - offset) / step
    if spread:
        # every atom spread uniformly over one cell centred on it
        u = pos + 0.5
        j = np.floor(u)
        frac = u - j
        jc = np.clip(j, 0, masses.size).astype(int)
        inside = (j >= 0) & (j < masses.size)
        out = cum[jc] + np.where(inside, frac * masses[np.clip(jc, 0, masses.size - 1)], 0.0)
        out = np.where(j < 0, 0.0, out)
        return np.where(j >= masses.size, cum[-1], out)
    j = np.floor(pos + 1e-9)
    jc = np.clip(j + 1, 0, masses.size).astype(int)
    return np.where(j < 0, 0.0, cum[jc])


def lattice_cdf_from(masses, offset, step, spread, y):
    return _lattice_cdf_from(masses, offset, step, spread, y)


def lattice_power_cdf(law: JumpLaw, m: int, y):
    """``P[X_1 + ... + X_m <= y]`` for a discrete or grid law."""
    *_, (mm, off, masses) = lattice_powers(law, m, float(np.max(y)))
    if m == 0:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return (y >= 0).astype(float)
    return _lattice_cdf_from(masses, off, law.step, law.kind == "grid", y)


def atoms_power_cdf(law: JumpLaw, m: int, y, max_support: int = 200_000):
    """``P[X_1 + ... + X_m <= y]`` by exact enumeration of an atomic law."""
    vals, probs = atoms_power(law, m, max_support)
    return atoms_cdf_from(vals, probs, y)


def atoms_powers(law: JumpLaw, m_max: int, max_support: int = 200_000):
    """Yield ``(m, support, probs)`` for the m-fold sums of an atomic law, ``m = 0..m_max``."""
    vals, probs = np.zeros(1), np.ones(1)
    for m in range(m_max + 1):
        if m:
            v = (vals[:, None] + law.support[None, :]).ravel()
            p = (probs[:, None] * law.probs[None, :]).ravel()
            vals, inv = np.unique(np.round(v, 12), return_inverse=True)
            probs = np.bincount(inv.ravel(), weights=p)
            if vals.size > max_support:
                raise ParameterError(f"atomic sum support exceeds {max_support} points; use a grid law")
        yield m, vals, probs


def atoms_power(law: JumpLaw, m: int, max_support: int = 200_000):
    """Sorted support and probabilities of the m-fold sum of an atomic law."""
    *_, (_, vals, probs) = atoms_powers(law, m, max_support)
    return vals, probs


def atoms_cdf_from(vals, probs, y):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    cum = np.concatenate([[0.0], np.cumsum(probs)])
    return cum[np.searchsorted(vals, y + 1e-12 * np.maximum(1.0, np.abs(y)), side="right")]
