"""Exhaustive oracles for the extremal structure of protecting sets.

Everything here is certified by brute force: subsets of the ball are
enumerated and tested with the dynamics module, so the only trusted code
path is the evolution itself.  A work budget guards against accidental
explosion; exceeding it raises WorkBudgetExceeded rather than running
forever.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations, islice, product

import numpy as np

from . import dynamics
from .dynamics import Modified, Rule, Standard
from .formulas import ell
from .lattice import Site, enumerate_ball, l1_norm

DEFAULT_BUDGET = 10**8
_BATCH = 1 << 18


class WorkBudgetExceeded(Exception):
    """Raised when an enumeration would exceed the configured work budget."""

    def __init__(self, estimate: int, budget: int):
        self.estimate = estimate
        self.budget = budget
        super().__init__(f"enumeration needs ~{estimate} subset tests, budget is {budget}")


class PreconditionError(Exception):
    """A checker was called on inputs violating its stated hypotheses."""


def _rule_tag(rule: Rule) -> str:
    return f"standard_r{rule.r}" if isinstance(rule, Standard) else "modified"


# ---------------------------------------------------------------------------
# Certificates and classification


@dataclass(frozen=True)
class Certificate:
    """An uninfected subset of B_t that protects the origin."""

    d: int
    t: int
    rule: Rule
    uninfected: frozenset[Site]

    @property
    def size(self) -> int:
        return len(self.uninfected)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "t": self.t,
            "rule": _rule_tag(self.rule),
            "sites": sorted([list(s) for s in self.uninfected]),
            "classification": classification_tag(classify(self)),
        }


@dataclass(frozen=True)
class Canonical:
    axis: int
    orientations: tuple[int, ...]  # length d, 0 at the aligned axis


@dataclass(frozen=True)
class SemiCanonical:
    axis: int
    orientations: tuple[int, ...]
    v_plus: Site
    v_minus: Site


@dataclass(frozen=True)
class Other:
    pass


Classification = Canonical | SemiCanonical | Other


def classification_tag(c: Classification) -> str:
    if isinstance(c, Canonical):
        return "canonical"
    if isinstance(c, SemiCanonical):
        return "semi-canonical"
    return "other"


def _column_set(d: int, t: int, axis: int, orient: tuple[int, ...]) -> frozenset[Site]:
    ball = enumerate_ball(d, t)
    return frozenset(
        x for x in ball.sites if all(x[i] in (0, orient[i]) for i in range(d) if i != axis)
    )


def classify(cert: Certificate) -> Classification:
    """Match the protected set of a certificate against the column templates.

    Canonical: a column aligned with some axis.  Semi-canonical: a column
    whose two extreme points may each be displaced one step sideways.
    """
    state = dynamics.ball_state(cert.d, cert.t, cert.uninfected)
    protected = dynamics.protected_set(state, cert.rule)
    d, t = cert.d, cert.t
    for axis in range(d):
        others = [i for i in range(d) if i != axis]
        for eps in product((-1, 1), repeat=d - 1):
            orient = [0] * d
            for i, e in zip(others, eps):
                orient[i] = e
            orient_t = tuple(orient)
            column = _column_set(d, t, axis, orient_t)
            if protected == column:
                return Canonical(axis=axis, orientations=orient_t)
            top = tuple(t if i == axis else 0 for i in range(d))
            bottom = tuple(-t if i == axis else 0 for i in range(d))
            base = column - {top, bottom}
            v_plus_opts = [top] + [
                tuple((t - 1 if j == axis else 0) - (orient_t[j] if j == i else 0) for j in range(d))
                for i in others
            ]
            v_minus_opts = [bottom] + [
                tuple((-t + 1 if j == axis else 0) - (orient_t[j] if j == i else 0) for j in range(d))
                for i in others
            ]
            for vp in v_plus_opts:
                for vm in v_minus_opts:
                    if protected == base | {vp, vm}:
                        return SemiCanonical(
                            axis=axis, orientations=orient_t, v_plus=vp, v_minus=vm
                        )
    return Other()


# ---------------------------------------------------------------------------
# Batched protection testing


def _batch_protects_origin(uninfected: np.ndarray, d: int, t: int, rule: Rule) -> np.ndarray:
    nbr = dynamics._ball_neighbor_matrix(d, t)
    final = dynamics.evolve_finite_batch(uninfected, nbr, rule, steps=t)
    origin = enumerate_ball(d, t).index_of[(0,) * d]
    return final[:, origin]


def _size_subset_batches(n_sites: int, u: int, batch: int = _BATCH):
    it = combinations(range(n_sites), u)
    while True:
        chunk = list(islice(it, batch))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.int64)


# ---------------------------------------------------------------------------
# Size-major sweep: minimal size and minimal certificates


def min_protecting_size(d: int, t: int, rule: Rule, *, budget: int = DEFAULT_BUDGET) -> int:
    """Smallest u such that some size-u subset of B_t protects the origin.

    Enumerates subsets in size-major order; refuses once the cumulative
    subset count would exceed the budget.
    """
    dynamics.check_rule(rule, d)
    n_sites = len(enumerate_ball(d, t))
    work = 0
    for u in range(n_sites + 1):
        work += math.comb(n_sites, u)
        if work > budget:
            raise WorkBudgetExceeded(work, budget)
        if _any_protecting_of_size(d, t, rule, u):
            return u
    raise AssertionError("the full ball always protects the origin")


def _any_protecting_of_size(d: int, t: int, rule: Rule, u: int) -> bool:
    n_sites = len(enumerate_ball(d, t))
    for idx in _size_subset_batches(n_sites, u):
        uninf = np.zeros((idx.shape[0], n_sites), dtype=bool)
        if u:
            uninf[np.arange(idx.shape[0])[:, None], idx] = True
        if _batch_protects_origin(uninf, d, t, rule).any():
            return True
    return False


def count_min_certificates(
    d: int, t: int, rule: Rule, *, budget: int = DEFAULT_BUDGET
) -> tuple[int, list[Certificate]]:
    """All minimum-size protecting subsets of B_t."""
    u = min_protecting_size(d, t, rule, budget=budget)
    ball = enumerate_ball(d, t)
    n_sites = len(ball)
    certs: list[Certificate] = []
    for idx in _size_subset_batches(n_sites, u):
        uninf = np.zeros((idx.shape[0], n_sites), dtype=bool)
        if u:
            uninf[np.arange(idx.shape[0])[:, None], idx] = True
        hits = np.flatnonzero(_batch_protects_origin(uninf, d, t, rule))
        for h in hits:
            sites = frozenset(ball.sites[j] for j in idx[h])
            certs.append(Certificate(d=d, t=t, rule=rule, uninfected=sites))
    return len(certs), certs


# ---------------------------------------------------------------------------
# Exact probability polynomials


@dataclass(frozen=True)
class RhoPolynomial:
    """Exact subset counts N_u over a finite domain of n_sites sites.

    N_u is the number of size-u uninfected subsets for which the tracked
    protection event holds; evaluation at q gives the exact probability.
    Counts are Python ints, so they never overflow.
    """

    d: int
    t: int
    rule: Rule
    counts: tuple[int, ...]
    n_sites: int
    offset: Site | None = None

    def evaluate(self, q: float) -> float:
        p = 1.0 - q
        return float(
            sum(c * q**u * p ** (self.n_sites - u) for u, c in enumerate(self.counts) if c)
        )

    @property
    def min_size(self) -> int:
        for u, c in enumerate(self.counts):
            if c:
                return u
        raise ValueError("no protecting subset recorded")

    def to_json(self) -> dict:
        out = {
            "d": self.d,
            "t": self.t,
            "rule": _rule_tag(self.rule),
            "n_sites": self.n_sites,
            "counts": list(self.counts),
        }
        if self.offset is not None:
            out["offset"] = list(self.offset)
        return out

    @staticmethod
    def from_json(doc: dict) -> "RhoPolynomial":
        tag = doc["rule"]
        rule: Rule = Modified() if tag == "modified" else Standard(r=int(tag.split("_r")[1]))
        return RhoPolynomial(
            d=doc["d"],
            t=doc["t"],
            rule=rule,
            counts=tuple(int(c) for c in doc["counts"]),
            n_sites=doc["n_sites"],
            offset=tuple(doc["offset"]) if "offset" in doc else None,
        )


def _mask_sweep_counts(
    sites: tuple[Site, ...],
    targets: tuple[Site, ...],
    d: int,
    steps: int,
    rule: Rule,
    budget: int,
) -> list[int]:
    """Exact N_u over all 2^n subsets of `sites`: the event is that every
    target site is still uninfected after `steps` steps (infected exterior)."""
    n_sites = len(sites)
    total = 1 << n_sites
    if total > budget:
        raise WorkBudgetExceeded(total, budget)
    nbr = dynamics.neighbor_matrix(sites)
    index_of = {s: i for i, s in enumerate(sites)}
    target_idx = [index_of[s] for s in targets]
    counts = np.zeros(n_sites + 1, dtype=np.int64)
    chunk = min(total, 1 << 19)
    for lo in range(0, total, chunk):
        masks = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        uninf = np.empty((masks.size, n_sites), dtype=bool)
        for b in range(n_sites):
            uninf[:, b] = (masks >> b) & 1
        popcount = uninf.sum(axis=1, dtype=np.int64)
        final = dynamics.evolve_finite_batch(uninf, nbr, rule, steps=steps)
        good = final[:, target_idx[0]]
        for ti in target_idx[1:]:
            good = good & final[:, ti]
        counts += np.bincount(popcount[good], minlength=n_sites + 1)
    return [int(c) for c in counts]


def exact_rho1(d: int, t: int, rule: Rule | None = None, *, budget: int = DEFAULT_BUDGET) -> RhoPolynomial:
    """Exact per-size counts of origin-protecting subsets of B_t."""
    if rule is None:
        rule = Standard(r=d)
    dynamics.check_rule(rule, d)
    ball = enumerate_ball(d, t)
    counts = _mask_sweep_counts(ball.sites, ((0,) * d,), d, t, rule, budget)
    return RhoPolynomial(d=d, t=t, rule=rule, counts=tuple(counts), n_sites=len(ball))


def exact_joint(
    d: int, t: int, offset: Site, rule: Rule | None = None, *, budget: int = DEFAULT_BUDGET
) -> RhoPolynomial:
    """Exact counts for {origin protected} and {offset protected} jointly.

    Enumerates all states of B_t(0) union B_t(offset); exact because each
    protection event depends only on its own radius-t ball.
    """
    if rule is None:
        rule = Standard(r=d)
    dynamics.check_rule(rule, d)
    if all(c == 0 for c in offset):
        raise ValueError("offset must be nonzero")
    ball = enumerate_ball(d, t)
    shifted = [tuple(c + o for c, o in zip(s, offset)) for s in ball.sites]
    union = sorted(set(ball.sites) | set(shifted), key=lambda s: (l1_norm(s), s))
    counts = _mask_sweep_counts(tuple(union), ((0,) * d, offset), d, t, rule, budget)
    return RhoPolynomial(
        d=d, t=t, rule=rule, counts=tuple(counts), n_sites=len(union), offset=tuple(offset)
    )


def count_near_minimal(d: int, t: int, k: int, rule: Rule | None = None, *, budget: int = DEFAULT_BUDGET) -> int:
    """Number of protecting arrangements of (minimum + k) uninfected sites."""
    poly = exact_rho1(d, t, rule, budget=budget)
    u = poly.min_size + k
    if u >= len(poly.counts):
        return 0
    return poly.counts[u]


# ---------------------------------------------------------------------------
# Lemma checkers


@dataclass(frozen=True)
class KeyLemmaReport:
    x: Site
    config: tuple[int, ...]
    k: int
    compatible_protected: int
    bound: int

    @property
    def holds(self) -> bool:
        return self.compatible_protected >= self.bound


def key_lemma_bound(config: tuple[int, ...], k: int) -> int:
    a = sum(1 for c in config if c == 0)
    return sum(math.comb(a, i) for i in range(0, k + 1))


def check_key_lemma(
    initial: dynamics.InfectionState,
    rule: Rule,
    x: Site,
    config: tuple[int, ...],
    k: int,
) -> KeyLemmaReport:
    """Count protected sites compatible with `config` at distance k from x
    and compare with the binomial lower bound.

    The bound requires the configuration to agree with the sign of x on
    every nonzero coordinate: a free or opposing direction there admits
    counterexamples, e.g. d=2, t=3, x=(1,-1), config (0,0), k=1 with a
    protected origin has only 2 compatible protected sites against a
    bound of 3.  Only zero coordinates of x may be freely constrained.

    Precondition failures (x not protected, k out of range, misaligned
    config) raise PreconditionError; a False report is a genuine lemma
    violation.
    """
    if not isinstance(initial.domain, dynamics.Ball):
        raise PreconditionError("key lemma checker needs a ball domain")
    d, t = initial.domain.d, initial.domain.t
    if len(x) != d or len(config) != d:
        raise PreconditionError("x and config must have length d")
    if any(c not in (-1, 0, 1) for c in config):
        raise PreconditionError("config entries must be in {-1, 0, 1}")
    if any(xi != 0 and c != (1 if xi > 0 else -1) for xi, c in zip(x, config)):
        raise PreconditionError("config must equal sign(x_i) on nonzero coordinates of x")
    if not 0 <= k <= t - l1_norm(x):
        raise PreconditionError(f"k={k} outside [0, {t - l1_norm(x)}]")
    protected = dynamics.protected_set(initial, rule)
    if x not in protected:
        raise PreconditionError(f"site {x} is not protected")
    n = 0
    for y in protected:
        if sum(abs(yi - xi) for yi, xi in zip(y, x)) != k:
            continue
        if all((yi - xi) * c >= 0 for yi, xi, c in zip(y, x, config)):
            n += 1
    return KeyLemmaReport(
        x=x, config=tuple(config), k=k, compatible_protected=n, bound=key_lemma_bound(config, k)
    )


@dataclass(frozen=True)
class LayerReport:
    k: int
    protected_count: int
    bound: int

    @property
    def holds(self) -> bool:
        return self.protected_count >= self.bound

    @property
    def minimal(self) -> bool:
        return self.protected_count == self.bound


def check_layer_bounds(initial: dynamics.InfectionState, rule: Rule) -> list[LayerReport]:
    """Per-layer protected counts against the column layer sizes."""
    if not isinstance(initial.domain, dynamics.Ball):
        raise PreconditionError("layer checker needs a ball domain")
    d, t = initial.domain.d, initial.domain.t
    protected = dynamics.protected_set(initial, rule)
    if (0,) * d not in protected:
        raise PreconditionError("origin is not protected")
    by_norm: dict[int, int] = {}
    for y in protected:
        by_norm[l1_norm(y)] = by_norm.get(l1_norm(y), 0) + 1
    return [LayerReport(k=k, protected_count=by_norm.get(k, 0), bound=ell(k, d)) for k in range(1, t + 1)]


@dataclass(frozen=True)
class ComponentBandReport:
    components_meeting_mid: int
    hypotheses_ok: bool
    failures: tuple[str, ...]


def count_components_band(
    initial: dynamics.InfectionState, rule: Rule, r1: int, r2: int, mid: int
) -> ComponentBandReport:
    """Connected components of protected sites in the band r1 <= ||x|| <= r2
    that meet the layer of radius mid.

    When the hypotheses fail the count is still reported but carries no
    guarantee of being at most two.
    """
    if not isinstance(initial.domain, dynamics.Ball):
        raise PreconditionError("component checker needs a ball domain")
    d, t = initial.domain.d, initial.domain.t
    protected = dynamics.protected_set(initial, rule)
    failures: list[str] = []
    if (0,) * d not in protected:
        failures.append("origin not protected")
    if r1 < d:
        failures.append(f"r1={r1} < d={d}")
    if r2 > t:
        failures.append(f"r2={r2} > t={t}")
    if (r2 - r1) % 2 != 0 or r2 - r1 < 3 * d:
        failures.append(f"band width {r2 - r1} not an even number >= 3d")
    if 2 * mid != r1 + r2:
        failures.append(f"mid={mid} is not the band centre")
    by_norm: dict[int, int] = {}
    for y in protected:
        by_norm[l1_norm(y)] = by_norm.get(l1_norm(y), 0) + 1
    for r in range(r1, min(r2, t) + 1):
        if by_norm.get(r, 0) != ell(r, d):
            failures.append(f"layer {r} not minimal")
            break
    band = [y for y in protected if r1 <= l1_norm(y) <= r2]
    band_set = set(band)
    seen: set[Site] = set()
    n_components = 0
    for start in band:
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        meets_mid = False
        while stack:
            y = stack.pop()
            if l1_norm(y) == mid:
                meets_mid = True
            for i in range(d):
                for delta in (1, -1):
                    nb = y[:i] + (y[i] + delta,) + y[i + 1 :]
                    if nb in band_set and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
        if meets_mid:
            n_components += 1
    return ComponentBandReport(
        components_meeting_mid=n_components,
        hypotheses_ok=not failures,
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# Random origin-protected configurations (rejection sampling)


def sample_protected_configs(
    d: int,
    t: int,
    rule: Rule,
    n_configs: int,
    rng: np.random.Generator,
    q: float = 0.85,
    max_batches: int = 10_000,
) -> list[np.ndarray]:
    """Rejection-sample initial states of B_t whose origin is protected.

    Each site is uninfected with probability q; batches failing the
    protection test are discarded.  q is an engineering knob: the lemma
    checkers are deterministic, any reachable configuration is valid.
    """
    ball = enumerate_ball(d, t)
    n_sites = len(ball)
    out: list[np.ndarray] = []
    batch = max(64, min(4096, 4 * n_configs))
    for _ in range(max_batches):
        uninf = rng.random((batch, n_sites)) < q
        good = _batch_protects_origin(uninf, d, t, rule)
        for row in np.flatnonzero(good):
            out.append(uninf[row].copy())
            if len(out) == n_configs:
                return out
    raise RuntimeError(f"rejection sampling produced {len(out)}/{n_configs} configurations")


def certificates_to_json(certs: list[Certificate]) -> str:
    return json.dumps([c.to_json() for c in certs], indent=2, sort_keys=True)
