"""Closed-form quantities: column sizes, leading-order means, thresholds,
and the Barbour-Eagleson total-variation bound.

Integer formulas use exact integer arithmetic.  Real-valued outputs are
leading-order asymptotics where noted: the (1+o(1)) factors are dropped,
and the CLI labels such outputs explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .lattice import Site, ball_size, dependency_offsets, l1_norm
from .dynamics import Modified, Rule, Standard


def ell(t: int, d: int) -> int:
    """Minimum number of protected sites on the layer of radius t: sum of
    binom(d, i) for i = 0..t."""
    if t < 0 or d < 0:
        raise ValueError("t and d must be >= 0")
    return sum(math.comb(d, i) for i in range(0, t + 1))


def m(t: int, d: int) -> int:
    """Size of the centred column in the radius-t ball: sum of ell(r, d)."""
    if t < 0 or d < 0:
        raise ValueError("t and d must be >= 0")
    return sum(ell(r, d) for r in range(0, t + 1))


def m_general(t: int, d: int, r: int) -> int:
    """Size of a (d, r)-canonical set of radius t.

    r-1 axes are constrained to {0, eps_i}; the count is independent of
    which axes and orientations are chosen, by symmetry.
    """
    if not 2 <= r <= d:
        raise ValueError(f"threshold r={r} outside [2, {d}]")
    if t < 0:
        raise ValueError("t must be >= 0")
    free_dims = d - (r - 1)
    total = 0
    for s in range(0, min(r - 1, t) + 1):
        total += math.comb(r - 1, s) * ball_size(free_dims, t - s)
    return total


def minimal_protecting_size(t: int, d: int, rule: Rule) -> int:
    """Minimum number of uninfected sites in B_t protecting the origin:
    m(t, d) for the standard d-neighbour rule, 2t+1 for the modified rule."""
    if isinstance(rule, Standard):
        if rule.r != d:
            raise ValueError("closed form is known only for the d-neighbour threshold")
        return m(t, d)
    return 2 * t + 1


def extremal_count(d: int, rule: Rule) -> int:
    """Number of minimal protecting configurations (t >= 2): d^3 2^(d-1)
    for the standard rule, d axis columns for the modified rule."""
    if isinstance(rule, Standard):
        if rule.r != d:
            raise ValueError("closed form is known only for the d-neighbour threshold")
        return d**3 * 2 ** (d - 1)
    return d


def lambda_leading(n: int, d: int, t: int, q: float, rule: Rule) -> float:
    """Leading-order mean of the uninfected count at time t."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if isinstance(rule, Standard):
        if rule.r != d:
            raise ValueError("closed form is known only for the d-neighbour threshold")
        return d**3 * 2 ** (d - 1) * n**d * q ** m(t, d)
    return d * n**d * q ** (2 * t + 1)


@dataclass(frozen=True)
class ThresholdQuery:
    d: int
    n: int
    t: int
    alpha: float
    rule: Rule

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.t < 0:
            raise ValueError("t must be >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


def p_alpha(query: ThresholdQuery) -> float:
    """Leading-order threshold probability for percolation by time t.

    Solves alpha = exp(-lambda) for the leading-order lambda; the dropped
    (1+o(1)) factor means this is an asymptotic prediction, not exact.
    """
    log_term = math.log(1.0 / query.alpha)
    if isinstance(query.rule, Standard):
        if query.rule.r != query.d:
            raise ValueError("closed form is known only for the d-neighbour threshold")
        denom = query.d**3 * 2 ** (query.d - 1) * query.n**query.d
        exponent = 1.0 / m(query.t, query.d)
    else:
        denom = query.d * query.n**query.d
        exponent = 1.0 / (2 * query.t + 1)
    return 1.0 - (log_term / denom) ** exponent


def stein_chen_rhs(
    n: int,
    d: int,
    t: int,
    rho1: float,
    rho2_by_offset: dict[Site, float],
    *,
    fill_boundary_with_product: bool = False,
) -> float:
    """Barbour-Eagleson bound on d_TV(F_t(n), Po(n^d rho1)).

    Specialised to translation invariance: the dependency neighbourhood of
    every site is the ball of radius 2t+1 around it, so the double sums
    collapse to n^d times per-offset terms.  Offsets at norm exactly 2t+1
    may be auto-filled with rho1^2 (disjoint dependency balls).
    """
    if not 0.0 <= rho1 <= 1.0:
        raise ValueError("rho1 must lie in [0, 1]")
    offsets = dependency_offsets(d, t)
    rho2 = dict(rho2_by_offset)
    boundary = 2 * t + 1
    missing = []
    for off in offsets:
        if off not in rho2:
            if fill_boundary_with_product and l1_norm(off) == boundary:
                rho2[off] = rho1 * rho1
            else:
                missing.append(off)
    if missing:
        raise ValueError(f"rho2 missing for {len(missing)} offsets, e.g. {missing[0]}")
    lam = n**d * rho1
    nbhd_size = len(offsets) + 1
    pair_sum = sum(rho2[off] for off in offsets)
    scale = min(1.0, 1.0 / lam) if lam > 0 else 1.0
    return scale * n**d * (nbhd_size * rho1 * rho1 + pair_sum)


def poisson_pmf(k: int, lam: float) -> float:
    """P(Po(lam) = k)."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if k < 0:
        return 0.0
    if lam == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))


def tv_distance(p: dict[int, float], q: dict[int, float]) -> float:
    """Total variation distance between two integer-supported pmfs.

    Half the l1 distance, which equals the sup-over-events form for
    distributions on the integers.
    """
    support = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in support)
