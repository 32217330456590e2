"""Galton-Watson simulators and the tail bounds used to sandwich the
exploration growth: the critical geometric upper tail and the supercritical
lower-deviation decay.

Simulation tracks level sizes only, which is exact in distribution: the
next level is a sum of i.i.d. offspring draws, realized through one
multinomial (finite support) or negative-binomial (geometric offspring)
call per generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "OffspringSpec",
    "two_point_law",
    "geometric_half",
    "simulate_gw",
    "simulate_gw_many",
    "critical_geometric_tail_bound",
    "lower_deviation_check",
    "PopulationCapError",
    "DEFAULT_POPULATION_CAP",
    "DEFAULT_K0",
]

DEFAULT_POPULATION_CAP = 10 ** 8
DEFAULT_K0 = 0.1        # offspring surplus constant in the dominated two-point law


class PopulationCapError(RuntimeError):
    def __init__(self, generation):
        super().__init__(f"population cap exceeded at generation {generation}")
        self.generation = generation


@dataclass(frozen=True)
class OffspringSpec:
    """Offspring law as a finite pmf, or the geometric(1/2) law.

    ``is_supercritical`` checks the standing assumptions mean > 1 and
    p0 + p1 < 1; finite-support laws always have exponential moments.
    """
    pmf: Optional[dict] = None          # value -> probability; None = geometric(1/2)
    geometric: bool = False

    def __post_init__(self):
        if self.geometric:
            if self.pmf is not None:
                raise ValueError("geometric spec carries no pmf")
            return
        if not self.pmf:
            raise ValueError("empty offspring pmf")
        total = sum(self.pmf.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {total}, not 1")
        if any(k < 0 or int(k) != k for k in self.pmf):
            raise ValueError("offspring values must be non-negative integers")
        if any(p < 0 for p in self.pmf.values()):
            raise ValueError("negative probability")

    @property
    def mean(self) -> float:
        if self.geometric:
            return 1.0
        return sum(k * p for k, p in self.pmf.items())

    @property
    def variance(self) -> float:
        if self.geometric:
            return 2.0
        m = self.mean
        return sum(k * k * p for k, p in self.pmf.items()) - m * m

    def is_supercritical(self) -> bool:
        if self.geometric:
            return False
        p01 = self.pmf.get(0, 0.0) + self.pmf.get(1, 0.0)
        return self.mean > 1.0 and p01 < 1.0


def two_point_law(k0: float = DEFAULT_K0) -> OffspringSpec:
    """The dominated supercritical law: one child always, a second with
    probability k0/2.  Extinction is impossible (no mass at zero)."""
    if not 0 < k0 <= 2:
        raise ValueError("k0 must lie in (0, 2]")
    return OffspringSpec(pmf={1: 1 - k0 / 2, 2: k0 / 2})


def geometric_half() -> OffspringSpec:
    """Critical geometric offspring: P(xi = k) = 2^-(k+1), k >= 0."""
    return OffspringSpec(geometric=True)


def _advance(spec: OffspringSpec, z: np.ndarray, rng) -> np.ndarray:
    """One generation for a vector of populations, exact in distribution."""
    out = np.zeros_like(z)
    alive = z > 0
    if not alive.any():
        return out
    za = z[alive]
    if spec.geometric:
        # sum of k geometric(1/2) (from 0) draws is NegativeBinomial(k, 1/2)
        out[alive] = rng.negative_binomial(za, 0.5)
        return out
    vals = np.array(sorted(spec.pmf), dtype=np.int64)
    probs = np.array([spec.pmf[int(v)] for v in vals])
    probs = probs / probs.sum()
    counts = rng.multinomial(za, probs)     # one row per alive population
    out[alive] = counts @ vals
    return out


def simulate_gw(spec: OffspringSpec, generations: int, rng: np.random.Generator,
                population_cap: int = DEFAULT_POPULATION_CAP) -> list:
    """Level sizes Z_0..Z_r of one tree, Z_0 = 1."""
    if generations < 0:
        raise ValueError("generations must be >= 0")
    z = np.array([1], dtype=np.int64)
    out = [1]
    for r in range(1, generations + 1):
        z = _advance(spec, z, rng)
        if z[0] > population_cap:
            raise PopulationCapError(r)
        out.append(int(z[0]))
    return out


def simulate_gw_many(spec: OffspringSpec, generations: int, trials: int,
                     rng: np.random.Generator,
                     population_cap: int = DEFAULT_POPULATION_CAP) -> np.ndarray:
    """Matrix (generations+1) x trials of level sizes across trials."""
    z = np.ones(trials, dtype=np.int64)
    out = np.empty((generations + 1, trials), dtype=np.int64)
    out[0] = z
    for r in range(1, generations + 1):
        z = _advance(spec, z, rng)
        if z.max(initial=0) > population_cap:
            raise PopulationCapError(r)
        out[r] = z
    return out


def critical_geometric_tail_bound(r: int, k: int) -> float:
    """Upper-tail bound for the critical geometric(1/2) process:
    P(Z_r >= k) < (3/2) (1 + 1/(phi''(3/2) r / 2 + 2))^-k, and the
    generating function 1/(2-s) has phi''(3/2) = 16."""
    if r < 1 or k < 1:
        raise ValueError("need r >= 1 and k >= 1")
    phi2 = 16.0
    return 1.5 * (1 + 1 / (phi2 * r / 2 + 2)) ** (-k)


def lower_deviation_check(spec: OffspringSpec, gamma: float, r: int,
                          trials: int, rng: np.random.Generator) -> float:
    """Empirical P(Z_r <= gamma^r) for a supercritical law, 1 < gamma < mean.

    The acceptance harness fits the decay of this probability in r and
    requires a negative log slope; the constants behind the decay are not
    explicit, so only the shape is checked.
    """
    mu = spec.mean
    if not 1 < gamma < mu:
        raise ValueError(f"gamma must lie in (1, {mu}), got {gamma}")
    levels = simulate_gw_many(spec, r, trials, rng)
    return float((levels[r] <= gamma ** r).mean())
