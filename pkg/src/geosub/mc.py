"""Seeded Monte Carlo estimators with standard errors and verdicts.

Work is split into fixed-size chunks; chunk ``i`` always draws from the
Philox stream keyed by ``(seed, i)`` and partial results are reduced in
chunk order.  The result therefore depends on the seed and ``n`` only, not
on how many threads ran the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError

__all__ = ["McReport", "BandReport", "stream", "run_chunks", "mc_mean", "mc_proportion", "mc_pmf_tv", "mc_cdf_band", "mc_draws"]

CHUNK = 20_000


def stream(seed: int, index: int) -> np.random.Generator:
    """Independent generator number ``index`` derived from a master seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _chunks(n: int, chunk: int):
    sizes = [chunk] * (n // chunk)
    if n % chunk:
        sizes.append(n % chunk)
    return sizes


def run_chunks(fn: Callable[[np.random.Generator, int], object], n: int, seed: int, workers: int = 1, chunk: int = CHUNK):
    """``[fn(stream(seed, i), size_i) for each chunk i]`` in chunk order."""
    sizes = _chunks(n, chunk)
    tasks = [(stream(seed, i), s) for i, s in enumerate(sizes)]
    if workers <= 1:
        return [fn(r, s) for r, s in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda a: fn(*a), tasks))


def mc_draws(sampler, n: int, seed: int, workers: int = 1, chunk: int = CHUNK) -> np.ndarray:
    """All ``n`` draws of ``sampler(rng, size)`` concatenated in chunk order."""
    return np.concatenate([np.asarray(x) for x in run_chunks(sampler, n, seed, workers, chunk)])


@dataclass(frozen=True)
class McReport:
    estimate: float
    stderr: float
    n: int
    target: float
    k: float = 3.0
    degenerate: bool = False

    @property
    def z(self) -> float:
        diff = abs(self.estimate - self.target)
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.stderr

    @property
    def passed(self) -> bool:
        if self.degenerate:
            return False
        return abs(self.estimate - self.target) <= self.k * self.stderr

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "n": self.n,
            "target": self.target,
            "k": self.k,
            "verdict": self.verdict,
        }


def _check_n(n):
    if n < 100:
        raise ParameterError(f"need at least 100 samples, got {n}")


def mc_mean(
    sampler,
    n: int,
    seed: int,
    target: float,
    *,
    k: float = 3.0,
    target_variance: float | None = None,
    workers: int = 1,
) -> McReport:
    """Sample mean of ``sampler(rng, size)`` against ``target``.

    With ``target_variance > 0`` a sampler returning identical values is
    flagged as degenerate.
    """
    _check_n(n)

    def part(rng, size):
        x = np.asarray(sampler(rng, size), dtype=float)
        return x.size, math.fsum(x), x

    parts = run_chunks(part, n, seed, workers)
    count = sum(c for c, _, _ in parts)
    mean = math.fsum(s for _, s, _ in parts) / count
    ss = math.fsum(math.fsum((x - mean) ** 2) for _, _, x in parts)
    var = ss / (count - 1)
    degenerate = var == 0.0 and target_variance is not None and target_variance > 0
    return McReport(mean, math.sqrt(var / count), count, float(target), k, degenerate)


def mc_proportion(indicator_sampler, n: int, seed: int, target: float, *, k: float = 3.0, workers: int = 1) -> McReport:
    """Fraction of true draws, with the binomial standard error ``sqrt(p (1 - p) / n)`` at the estimate."""
    _check_n(n)
    hits = sum(run_chunks(lambda r, s: int(np.count_nonzero(indicator_sampler(r, s))), n, seed, workers))
    p = hits / n
    return McReport(p, math.sqrt(p * (1 - p) / n), n, float(target), k)


def mc_pmf_tv(sampler, pmf, n: int, k_max: int, seed: int, workers: int = 1) -> float:
    """Total variation between the empirical law of integer draws and ``pmf``.

    Counts above ``k_max`` are lumped into one tail cell on both sides.
    """
    _check_n(n)
    probs = np.asarray(pmf(np.arange(k_max + 1)) if callable(pmf) else pmf, dtype=float)[: k_max + 1]
    if probs.size < k_max + 1:
        probs = np.concatenate([probs, np.zeros(k_max + 1 - probs.size)])

    def part(rng, size):
        x = np.asarray(sampler(rng, size), dtype=np.int64)
        return np.bincount(np.minimum(x, k_max + 1), minlength=k_max + 2)

    counts = np.sum(run_chunks(part, n, seed, workers), axis=0)
    emp = counts / n
    target = np.concatenate([probs, [max(1.0 - probs.sum(), 0.0)]])
    return 0.5 * float(np.abs(emp - target).sum())


@dataclass(frozen=True)
class BandReport:
    points: np.ndarray
    reports: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def max_z(self) -> float:
        return max(r.z for r in self.reports)


def mc_cdf_band(
    sampler,
    cdf: Callable,
    n: int,
    seed: int,
    *,
    points: Sequence[float] | None = None,
    quantiles: Sequence[float] = tuple(np.linspace(0.05, 0.95, 10)),
    k: float = 3.0,
    workers: int = 1,
) -> BandReport:
    """Empirical cdf vs ``cdf`` at fixed points, each within ``k`` binomial SE.

    Without explicit ``points`` the sample quantiles at ``quantiles`` are used.
    """
    _check_n(n)
    x = mc_draws(sampler, n, seed, workers)
    pts = np.asarray(points, dtype=float) if points is not None else np.quantile(x, quantiles)
    target = np.atleast_1d(np.asarray(cdf(pts), dtype=float))
    emp = np.array([np.count_nonzero(x <= y) / n for y in pts])
    reps = []
    for e, f in zip(emp, target):
        se = math.sqrt(max(f * (1 - f), 1.0 / n) / n)
        reps.append(McReport(float(e), se, n, float(f), k))
    return BandReport(pts, reps)
