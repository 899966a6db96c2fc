"""Shock models driven by geometric-time subordinated Poisson arrivals.

Extreme model: each shock is survived independently with probability q and
the system fails at the first fatal shock, so ``R(t) = E[q^N] = E[x^N]``
with ``x = q``, i.e. the count's generating function.

Cumulative model: damage ``Z(t) = W_1 + ... + W_{G(t)}`` with iid
``W_i ~ N^f(1)`` is itself a geometric-time subordinated Poisson count, and
the system survives while ``Z(t) < T``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ParameterError
from .gcp import GcpParams, gcp_geometric_draw
from .gspp import GsppParams, gspp_pmf_generic_table, gspp_sample
from .mc import McReport, mc_proportion
from .spp import SppParams
from .subordinators import Stable

__all__ = [
    "ExtremeShockModel",
    "CumulativeShockModel",
    "extreme_reliability",
    "extreme_failure_rate",
    "extreme_mc",
    "cumulative_reliability",
    "cumulative_mc",
    "baseline_model",
    "sensitivity_sweep",
    "sweep_csv",
    "is_monotone",
    "EXPECTED_DIRECTION",
]


@dataclass(frozen=True)
class ExtremeShockModel:
    q: float
    arrivals: GsppParams

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ParameterError(f"q must lie in [0, 1], got {self.q}")


@dataclass(frozen=True)
class CumulativeShockModel:
    threshold: int
    shock_process: GcpParams
    damage_law: SppParams

    def __post_init__(self):
        if int(self.threshold) != self.threshold or self.threshold < 1:
            raise ParameterError(f"threshold must be a positive integer, got {self.threshold}")

    @property
    def damage_process(self) -> GsppParams:
        return GsppParams(self.damage_law, self.shock_process)


def baseline_model(q: float = 0.7, alpha: float = 0.6, lam: float = 1.0, mu: float = 1.0) -> ExtremeShockModel:
    """Stable-family extreme model; defaults are the reference configuration."""
    return ExtremeShockModel(q, GsppParams.of(lam, mu, Stable(alpha)))


def _fatal_intensity(m: ExtremeShockModel) -> float:
    """``c = 1 - e^{-f(lam (1 - q))}``."""
    a = m.arrivals
    return -math.expm1(-float(a.sub.laplace_exponent(a.lam * (1.0 - m.q))))


def _times(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("t must be >= 0")
    return t


def extreme_reliability(t, m: ExtremeShockModel):
    """``P(S > t) = 1 / (1 + mu t c)``."""
    t = _times(t)
    out = 1.0 / (1.0 + m.arrivals.mu * t * _fatal_intensity(m))
    return float(out) if out.ndim == 0 else out


def extreme_failure_rate(t, m: ExtremeShockModel):
    """``r(t) = mu c / (1 + mu t c)``."""
    t = _times(t)
    c = _fatal_intensity(m)
    mu = m.arrivals.mu
    out = mu * c / (1.0 + mu * t * c)
    return float(out) if out.ndim == 0 else out


def _survives(t, m: ExtremeShockModel):
    """Indicator sampler: all of the ``N(t)`` shocks are survived (product of Bernoulli(q) factors is 1)."""

    def draw(rng, size):
        n = gspp_sample(t, m.arrivals, rng, size)
        fatal = rng.binomial(n, 1.0 - m.q)
        return fatal == 0

    return draw


def extreme_mc(t_grid: Sequence[float], m: ExtremeShockModel, n: int, seed: int, *, k: float = 3.0, workers: int = 1):
    """One :class:`McReport` per time point; time point i uses seed stream ``(seed, i)``."""
    if n < 1000:
        raise ParameterError(f"need at least 1000 paths, got {n}")
    out = []
    for i, t in enumerate(t_grid):
        sub_seed = np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1)[0]
        out.append(mc_proportion(_survives(float(t), m), n, int(sub_seed), extreme_reliability(t, m), k=k, workers=workers))
    return out


def cumulative_reliability(t: float, m: CumulativeShockModel) -> float:
    """``P(Z(t) < T) = sum_{k < T} P[Z(t) = k]``."""
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    T = int(m.threshold)
    probs = gspp_pmf_generic_table(t, m.damage_process, max(T - 1, 1))
    return math.fsum(probs[:T])


def cumulative_mc(
    t: float,
    m: CumulativeShockModel,
    n: int,
    seed: int,
    *,
    damage_sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None,
    k: float = 3.0,
    workers: int = 1,
) -> McReport:
    """Fraction of paths with ``Z(t) < T``.

    ``damage_sampler(rng, size)`` replaces the default damage law with any
    integer law; the target is then only available for the default law and
    is reported as ``nan`` otherwise.
    """
    T = int(m.threshold)
    if damage_sampler is None:
        draw = lambda rng, size: gspp_sample(t, m.damage_process, rng, size) < T
        target = cumulative_reliability(t, m)
    else:

        def draw(rng, size):
            g = np.asarray(gcp_geometric_draw(t, m.shock_process, rng, size), dtype=np.int64)
            w = np.asarray(damage_sampler(rng, int(g.sum())), dtype=float)
            z = np.bincount(np.repeat(np.arange(size), g), weights=w, minlength=size)
            return z < T

        target = math.nan
    return mc_proportion(draw, n, seed, target, k=k, workers=workers)


# --------------------------------------------------------------------------
# sensitivity sweeps

# sign of dR/d(parameter): reliability rises with q and alpha, falls with lam and mu
EXPECTED_DIRECTION = {"q": +1, "alpha": +1, "lambda": -1, "mu": -1}


def _vary(m: ExtremeShockModel, parameter: str, value: float) -> ExtremeShockModel:
    a = m.arrivals
    if parameter == "q":
        return replace(m, q=value)
    if parameter == "lambda":
        return replace(m, arrivals=GsppParams.of(value, a.mu, a.sub))
    if parameter == "mu":
        return replace(m, arrivals=GsppParams.of(a.lam, value, a.sub))
    if parameter == "alpha":
        if not hasattr(a.sub, "alpha"):
            raise ParameterError(f"family {type(a.sub).__name__} has no alpha parameter")
        return replace(m, arrivals=GsppParams.of(a.lam, a.mu, replace(a.sub, alpha=value)))
    raise ParameterError(f"unknown sweep parameter {parameter!r}; expected one of q, alpha, lambda, mu")


def sensitivity_sweep(
    model: ExtremeShockModel,
    parameter: str,
    values: Iterable[float],
    t_grid: Sequence[float],
    *,
    quantity: str = "reliability",
    mc_n: int = 0,
    seed: int = 0,
) -> list[dict]:
    """One curve per parameter value, all other parameters held at ``model``.

    Rows carry ``parameter_name, parameter_value, t, <quantity>`` and, when
    ``mc_n > 0``, a Monte Carlo estimate of the reliability and its standard
    error (stream ``(seed, value index)``).
    """
    if quantity not in ("reliability", "failure_rate"):
        raise ParameterError(f"quantity must be reliability or failure_rate, got {quantity!r}")
    fn = extreme_reliability if quantity == "reliability" else extreme_failure_rate
    rows = []
    for i, v in enumerate(values):
        mv = _vary(model, parameter, float(v))
        curve = np.atleast_1d(fn(np.asarray(t_grid, dtype=float), mv))
        reports = None
        if mc_n:
            sub_seed = int(np.random.SeedSequence(seed, spawn_key=(i,)).generate_state(1)[0])
            reports = extreme_mc(t_grid, mv, mc_n, sub_seed)
        for j, t in enumerate(t_grid):
            row = {"parameter_name": parameter, "parameter_value": float(v), "t": float(t), quantity: float(curve[j])}
            if reports is not None:
                row["mc_estimate"] = reports[j].estimate
                row["mc_stderr"] = reports[j].stderr
            rows.append(row)
    return rows


def _fmt(x) -> str:
    return x if isinstance(x, str) else format(float(x), ".17g")


def sweep_csv(rows: list[dict], path=None) -> str:
    """Render sweep rows as CSV (header row, '.' decimal point, 17 significant digits)."""
    if not rows:
        raise ParameterError("no rows to write")
    cols = list(rows[0])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def is_monotone(rows: list[dict], parameter: str, quantity: str = "reliability", direction: int | None = None) -> bool:
    """Whether ``quantity`` moves in ``direction`` with the parameter at every t (ties allowed only at t = 0)."""
    direction = EXPECTED_DIRECTION[parameter] if direction is None else direction
    by_t: dict = {}
    for r in rows:
        by_t.setdefault(r["t"], []).append((r["parameter_value"], r[quantity]))
    for t, pts in by_t.items():
        pts.sort()
        vals = np.array([y for _, y in pts])
        d = np.diff(vals) * direction
        if t == 0:
            if np.any(d < 0):
                return False
        elif np.any(d <= 0):
            return False
    return True
