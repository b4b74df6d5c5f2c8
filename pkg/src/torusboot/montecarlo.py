"""Seeded, parallel Monte Carlo experiments on the torus.

Reproducibility contract: the initial state of trial i is a pure function
of (master_seed, i) via a splitmix64 mix, and histograms are merged by
commutative addition, so results are bit-identical for any thread count
and schedule.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .dynamics import (
    InfectionState,
    Percolated,
    Rule,
    Stuck,
    Torus,
    check_rule,
    torus_stop_report,
    torus_uninfected_at,
)
from .lattice import TorusSpec
from .formulas import poisson_pmf

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 scramble step (the documented mixing function)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed: int, trial_index: int) -> int:
    """64-bit stream seed for one trial."""
    return splitmix64(splitmix64(master_seed & _MASK64) ^ trial_index)


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    n: int
    rule: Rule
    q: float
    t_horizon: int
    trials: int
    master_seed: int
    threads: int = 1

    def __post_init__(self) -> None:
        check_rule(self.rule, self.d)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        if self.n < 4 * self.t_horizon + 4:
            raise ValueError(
                f"n={self.n} < 4*t_horizon+4={4 * self.t_horizon + 4}: dependency balls would wrap"
            )
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class EmpiricalDistribution:
    """Histogram of integer outcomes; Stuck trials are counted separately
    and never merged into an outcome value."""

    histogram: Counter = field(default_factory=Counter)
    trials: int = 0
    stuck_count: int = 0

    def add(self, outcome: int | None) -> None:
        self.trials += 1
        if outcome is None:
            self.stuck_count += 1
        else:
            self.histogram[outcome] += 1

    def merge(self, other: "EmpiricalDistribution") -> None:
        self.histogram.update(other.histogram)
        self.trials += other.trials
        self.stuck_count += other.stuck_count

    def pmf(self) -> dict[int, float]:
        return {k: v / self.trials for k, v in sorted(self.histogram.items())}

    def proportion_le(self, t: int) -> float:
        return sum(v for k, v in self.histogram.items() if k <= t) / self.trials

    def to_csv(self) -> str:
        lines = ["outcome,count"]
        for k in sorted(self.histogram):
            lines.append(f"{k},{self.histogram[k]}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EstimateWithCI:
    point: float
    ci_low: float
    ci_high: float
    level: float


def _uniforms(config: ExperimentConfig, trial_index: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(trial_seed(config.master_seed, trial_index)))
    # drawn in lexicographic site order, then reshaped: layout-independent
    return rng.random(config.n**config.d).reshape((config.n,) * config.d)


def sample_initial_grid(config: ExperimentConfig, trial_index: int) -> np.ndarray:
    """Boolean infected grid: each site infected independently with 1 - q."""
    return _uniforms(config, trial_index) < 1.0 - config.q


def sample_initial(config: ExperimentConfig, trial_index: int) -> InfectionState:
    """Torus InfectionState for one trial (the grid form wrapped)."""
    return InfectionState(
        domain=Torus(TorusSpec(d=config.d, n=config.n)),
        infected=sample_initial_grid(config, trial_index),
    )


def _map_trials(config: ExperimentConfig, fn) -> EmpiricalDistribution:
    dist = EmpiricalDistribution()
    indices = range(config.trials)
    if config.threads == 1:
        results = map(fn, indices)
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = pool.map(fn, indices, chunksize=16)
    # merge order is fixed by trial index; addition is commutative anyway
    for outcome in results:
        dist.add(outcome)
    return dist


def run_trials_T(config: ExperimentConfig) -> EmpiricalDistribution:
    """Sample the percolation time T; fixpoints below full infection are Stuck."""

    def one(i: int) -> int | None:
        report = torus_stop_report(sample_initial_grid(config, i), config.rule)
        return report.T if isinstance(report, Percolated) else None

    return _map_trials(config, one)


def run_trials_F(config: ExperimentConfig, t: int) -> EmpiricalDistribution:
    """Sample the uninfected count after t steps."""

    def one(i: int) -> int:
        return torus_uninfected_at(sample_initial_grid(config, i), config.rule, t)

    return _map_trials(config, one)


def estimate_P_T_le_t(dist: EmpiricalDistribution, t: int, level: float = 0.95) -> EstimateWithCI:
    """Proportion of trials with T <= t, with a Wilson score interval."""
    k = sum(v for outcome, v in dist.histogram.items() if outcome <= t)
    n = dist.trials
    point = k / n
    z = NormalDist().inv_cdf(0.5 + level / 2)
    denom = 1 + z * z / n
    centre = (point + z * z / (2 * n)) / denom
    half = z * math.sqrt(point * (1 - point) / n + z * z / (4 * n * n)) / denom
    return EstimateWithCI(point=point, ci_low=centre - half, ci_high=centre + half, level=level)


def coupled_monotonicity(
    config: ExperimentConfig, q_low: float, q_high: float
) -> list[tuple[int | None, int | None]]:
    """Paired percolation times from shared per-site uniforms.

    The two initial sets threshold the same uniforms at 1-q_high and
    1-q_low, so the lower-q run starts with a superset of infected sites.
    """
    if not 0.0 <= q_low <= q_high <= 1.0:
        raise ValueError("need 0 <= q_low <= q_high <= 1")
    pairs: list[tuple[int | None, int | None]] = []
    for i in range(config.trials):
        u = _uniforms(config, i)
        t_vals = []
        for q in (q_low, q_high):
            report = torus_stop_report(u < 1.0 - q, config.rule)
            t_vals.append(report.T if isinstance(report, Percolated) else None)
        pairs.append((t_vals[0], t_vals[1]))
    return pairs


def tv_report(dist: EmpiricalDistribution, lam: float) -> float:
    """Total variation distance between the empirical pmf and Po(lam).

    The Poisson tail beyond the largest observed outcome is included; any
    Stuck mass has no Poisson counterpart and contributes in full.
    """
    if dist.trials == 0:
        raise ValueError("empty distribution")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    max_obs = max(dist.histogram) if dist.histogram else 0
    total = 0.0
    po_mass = 0.0
    for k in range(0, max_obs + 1):
        po_k = poisson_pmf(k, lam)
        po_mass += po_k
        total += abs(dist.histogram.get(k, 0) / dist.trials - po_k)
    total += 1.0 - po_mass  # Poisson tail beyond max observed
    total += dist.stuck_count / dist.trials
    return 0.5 * total
