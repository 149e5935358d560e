"""Finite dynamical systems under an upper expectation, with exact audits.

A system is a self-map theta of {0, ..., n-1} together with a credal set of
priors.  The map preserves the upper expectation iff the convex hulls of the
prior family and of its pushforward family coincide (the upper expectation is
the support function of the hull), which is decidable by linear feasibility.

On a finite space every orbit is preperiodic, so Birkhoff averages are exact
cycle means, monotone limits of sets are attained after finitely many steps,
and the classical equivalences between indecomposability, simplicity of the
fixed space of the composition operator, and the strong law of large numbers
can be checked exhaustively.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from .credal import (
    TOL_DERIVED,
    TOL_SIMPLEX,
    ContractError,
    EventSet,
    InputError,
    PriorSet,
    ProbVector,
    Rv,
    lower_exp,
    upper_exp,
)

#: L-infinity tolerance for convex-hull membership decisions
HULL_TOL = 1e-10

#: subset-enumeration guard for the exhaustive audits
MAX_ENUM_BITS = 20


@dataclass(frozen=True)
class FiniteMap:
    """A self-map of {0, ..., n-1} given by its image table."""

    image: tuple[int, ...]

    def __post_init__(self):
        image = tuple(int(i) for i in self.image)
        object.__setattr__(self, "image", image)
        n = len(image)
        if n == 0:
            raise InputError("map must act on a nonempty space")
        if any(j < 0 or j >= n for j in image):
            raise InputError("image entry outside 0..n-1")

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, i: int) -> int:
        return self.image[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.image, dtype=np.intp)

    def iterate(self, k: int) -> "FiniteMap":
        """The k-fold composition, computed by exact integer table lookups."""
        if k < 0:
            raise InputError("iteration count must be >= 0")
        cur = np.arange(self.n, dtype=np.intp)
        img = self.as_array()
        for _ in range(k):
            cur = img[cur]
        return FiniteMap(tuple(int(i) for i in cur))


@dataclass(frozen=True)
class FiniteSystem:
    """Outcome-space size, credal prior set, and a self-map."""

    n: int
    priors: PriorSet
    theta: FiniteMap

    def __post_init__(self):
        if self.n != self.priors.n or self.n != self.theta.n:
            raise InputError(
                f"dimension mismatch: n={self.n}, priors n={self.priors.n}, map n={self.theta.n}"
            )


@dataclass(frozen=True)
class GrandOrbitPartition:
    """The finest partition whose blocks are closed under i ~ theta(i).

    A set B satisfies theta^{-1}(B) = B exactly when B is a union of blocks.
    """

    class_of: tuple[int, ...]
    classes: tuple[EventSet, ...]


@dataclass(frozen=True)
class OrbitDecomposition:
    """Preperiod and eventual cycle of every point of a finite map."""

    preperiod: tuple[int, ...]
    cycle_index: tuple[int, ...]
    cycles: tuple[tuple[int, ...], ...]

    @property
    def max_preperiod(self) -> int:
        return max(self.preperiod)

    @property
    def cycle_lcm(self) -> int:
        return math.lcm(*(len(c) for c in self.cycles))

    def cycle_means(self, x: Rv) -> np.ndarray:
        """Exact long-run orbit average of x started from each point."""
        vals = x.as_array()
        per_cycle = [float(np.mean(vals[list(c)])) for c in self.cycles]
        return np.asarray([per_cycle[ci] for ci in self.cycle_index])


@lru_cache(maxsize=None)
def orbit_decomposition(theta: FiniteMap) -> OrbitDecomposition:
    n = theta.n
    img = theta.as_array()
    # theta^n(i) always sits on a cycle
    landing = np.arange(n, dtype=np.intp)
    for _ in range(n):
        landing = img[landing]
    cycles: list[tuple[int, ...]] = []
    cycle_id_of_node: dict[int, int] = {}
    for z in sorted(set(int(v) for v in landing)):
        if z in cycle_id_of_node:
            continue
        cyc = [z]
        cur = int(img[z])
        while cur != z:
            cyc.append(cur)
            cur = int(img[cur])
        for node in cyc:
            cycle_id_of_node[node] = len(cycles)
        cycles.append(tuple(cyc))
    preperiod = []
    cycle_index = []
    cycle_nodes = set(cycle_id_of_node)
    for i in range(n):
        k, cur = 0, i
        while cur not in cycle_nodes:
            cur = int(img[cur])
            k += 1
        preperiod.append(k)
        cycle_index.append(cycle_id_of_node[cur])
    return OrbitDecomposition(tuple(preperiod), tuple(cycle_index), tuple(cycles))


def pushforward(theta: FiniteMap, p: ProbVector) -> ProbVector:
    """Image measure: mass of j becomes the mass of its theta-preimage."""
    if theta.n != p.n:
        raise InputError("dimension mismatch between map and prior")
    out = np.zeros(p.n)
    np.add.at(out, theta.as_array(), p.as_array())
    return ProbVector(tuple(out))


def pushforward_set(theta: FiniteMap, priors: PriorSet) -> PriorSet:
    return PriorSet(tuple(pushforward(theta, p) for p in priors.priors))


def hull_distance(points: np.ndarray, q: np.ndarray) -> float:
    """L-infinity distance from q to the convex hull of the given points.

    Solved as the LP  min t  s.t.  |P^T lam - q| <= t,  sum lam = 1,  lam >= 0.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    q = np.asarray(q, dtype=float)
    m, n = pts.shape
    c = np.zeros(m + 1)
    c[-1] = 1.0
    ones_col = -np.ones((n, 1))
    a_ub = np.vstack([np.hstack([pts.T, ones_col]), np.hstack([-pts.T, ones_col])])
    b_ub = np.concatenate([q, -q])
    a_eq = np.concatenate([np.ones(m), [0.0]])[None, :]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=(0, None), method="highs")
    if not res.success:
        raise ContractError(f"hull-distance LP failed: {res.message}")
    return float(res.fun)


def in_hull(points: np.ndarray, q: np.ndarray, tol: float = HULL_TOL) -> bool:
    return hull_distance(points, q) <= tol


@lru_cache(maxsize=None)
def is_expectation_preserving(sys: FiniteSystem) -> bool:
    """Whether E[X o theta] = E[X] for every payoff X, decided exactly.

    The upper expectation is the support function of the convex hull of the
    prior family, so preservation is equivalent to hull equality of the prior
    family and its pushforward family; each inclusion is checked by linear
    feasibility on the finitely many generators.
    """
    fwd = pushforward_set(sys.theta, sys.priors)
    orig_rows = {p.weights for p in sys.priors.priors}
    fwd_rows = {p.weights for p in fwd.priors}
    if orig_rows == fwd_rows:
        return True
    orig_mat = sys.priors.matrix()
    fwd_mat = fwd.matrix()
    for row in fwd_rows:
        if not in_hull(orig_mat, np.asarray(row)):
            return False
    for row in orig_rows:
        if not in_hull(fwd_mat, np.asarray(row)):
            return False
    return True


def _require_preserving(sys: FiniteSystem) -> None:
    if not is_expectation_preserving(sys):
        raise ContractError("map does not preserve the upper expectation")


@lru_cache(maxsize=None)
def grand_orbits(theta: FiniteMap) -> GrandOrbitPartition:
    """Connected components of the undirected functional graph {i -- theta(i)}."""
    n = theta.n
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        ra, rb = find(i), find(theta(i))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = sorted({find(i) for i in range(n)})
    label = {r: k for k, r in enumerate(roots)}
    class_of = tuple(label[find(i)] for i in range(n))
    classes = tuple(
        EventSet(n, frozenset(i for i in range(n) if class_of[i] == k)) for k in range(len(roots))
    )
    return GrandOrbitPartition(class_of, classes)


def invariant_sets(sys: FiniteSystem) -> list[EventSet]:
    """All B with theta^{-1}(B) = B, as unions of grand-orbit classes."""
    if sys.n > 24:
        raise InputError("enumeration budget exceeded: n must be <= 24")
    part = grand_orbits(sys.theta)
    k = len(part.classes)
    if k > MAX_ENUM_BITS:
        raise InputError(f"enumeration budget exceeded: {k} orbit classes")
    out = []
    for bits in range(1 << k):
        members: set[int] = set()
        for j in range(k):
            if bits >> j & 1:
                members |= part.classes[j].members
        out.append(EventSet(sys.n, frozenset(members)))
    return out


def is_ergodic(sys: FiniteSystem) -> bool:
    """Every invariant set is polar or co-polar."""
    _require_preserving(sys)
    for b in invariant_sets(sys):
        v_b = upper_exp(sys.priors, b.indicator())
        v_bc = upper_exp(sys.priors, b.complement().indicator())
        if v_b > TOL_SIMPLEX and v_bc > TOL_SIMPLEX:
            return False
    return True


@dataclass(frozen=True)
class FixedSpaceReport:
    """Verdict on whether every theta-fixed payoff is constant quasi-surely."""

    dimension: int
    simple: bool
    ergodic: bool

    @property
    def consistent(self) -> bool:
        return self.simple == self.ergodic

    @property
    def ok(self) -> bool:
        return self.consistent


def _constant_quasi_surely(sys: FiniteSystem, values: np.ndarray) -> bool:
    """Whether the payoff equals some constant off a polar set."""
    for v in np.unique(values):
        off = EventSet(sys.n, frozenset(int(i) for i in np.nonzero(np.abs(values - v) > 0)[0]))
        if upper_exp(sys.priors, off.indicator()) <= TOL_SIMPLEX:
            return True
    return False


def fixed_space_audit(sys: FiniteSystem, random_payoffs: int = 5, seed: int = 0) -> FixedSpaceReport:
    """Compare simplicity of the fixed space of f -> f o theta with ergodicity.

    The fixed space {f : f o theta = f} is spanned by the grand-orbit class
    indicators.  Simplicity (every fixed f constant quasi-surely) is decided
    on the 0/1 labelings of classes and double-checked on seeded random
    class-constant payoffs.
    """
    _require_preserving(sys)
    part = grand_orbits(sys.theta)
    k = len(part.classes)
    if k > MAX_ENUM_BITS:
        raise InputError(f"enumeration budget exceeded: {k} orbit classes")
    class_of = np.asarray(part.class_of)
    simple = True
    for bits in range(1 << k):
        labels = np.asarray([(bits >> j) & 1 for j in range(k)], dtype=float)
        if not _constant_quasi_surely(sys, labels[class_of]):
            simple = False
            break
    if simple:
        rng = np.random.default_rng(seed)
        for _ in range(random_payoffs):
            labels = rng.uniform(-1.0, 1.0, k)
            if not _constant_quasi_surely(sys, labels[class_of]):
                simple = False
                break
    return FixedSpaceReport(dimension=k, simple=simple, ergodic=is_ergodic(sys))


def birkhoff_limit(sys: FiniteSystem, x: Rv, omega: int) -> tuple[float, float]:
    """liminf and limsup of the running orbit averages started at omega.

    On a finite space the orbit enters a cycle after finitely many steps, so
    both limits equal the mean of x over that cycle; no sampling is involved.
    """
    if x.n != sys.n:
        raise InputError("payoff dimension mismatch")
    if omega < 0 or omega >= sys.n:
        raise InputError("start point outside the space")
    dec = orbit_decomposition(sys.theta)
    m = float(dec.cycle_means(x)[omega])
    return m, m


@dataclass(frozen=True)
class SllnReport:
    """Exact strong-law check for one payoff on one finite system."""

    ergodic: bool
    lower: float
    upper: float
    cycle_means: tuple[float, ...]
    bad_members: tuple[int, ...]
    bad_capacity: float
    bounds_hold_qs: bool
    theta_fixed_qs: bool
    fixed_bad_members: tuple[int, ...]
    fixed_bad_capacity: float
    equality_holds_qs: bool | None

    @property
    def ok(self) -> bool:
        """No violation of what the theory guarantees for this system."""
        if not self.ergodic:
            return True
        if not self.bounds_hold_qs:
            return False
        if self.theta_fixed_qs and self.equality_holds_qs is False:
            return False
        return True


def slln_audit(sys: FiniteSystem, x: Rv) -> SllnReport:
    """Check the exact orbit averages against the expectation envelope.

    Computes the set of points whose cycle mean escapes
    [lower_exp(x), upper_exp(x)] and its upper capacity; on an ergodic system
    that set must be polar.  If x is theta-fixed off a polar set, additionally
    checks that the cycle mean equals upper_exp(x) off a polar set.
    """
    _require_preserving(sys)
    if x.n != sys.n:
        raise InputError("payoff dimension mismatch")
    dec = orbit_decomposition(sys.theta)
    means = dec.cycle_means(x)
    lo = lower_exp(sys.priors, x)
    hi = upper_exp(sys.priors, x)
    bad = np.nonzero((means < lo - TOL_DERIVED) | (means > hi + TOL_DERIVED))[0]
    bad_set = EventSet(sys.n, frozenset(int(i) for i in bad))
    bad_cap = upper_exp(sys.priors, bad_set.indicator())

    vals = x.as_array()
    moved = np.nonzero(np.abs(vals[sys.theta.as_array()] - vals) > TOL_SIMPLEX)[0]
    moved_set = EventSet(sys.n, frozenset(int(i) for i in moved))
    theta_fixed_qs = upper_exp(sys.priors, moved_set.indicator()) <= TOL_SIMPLEX

    fixed_bad_members: tuple[int, ...] = ()
    fixed_bad_cap = 0.0
    equality: bool | None = None
    if theta_fixed_qs:
        fb = np.nonzero(np.abs(means - hi) > 1e-9)[0]
        fixed_bad_members = tuple(int(i) for i in fb)
        fb_set = EventSet(sys.n, frozenset(fixed_bad_members))
        fixed_bad_cap = upper_exp(sys.priors, fb_set.indicator())
        equality = fixed_bad_cap <= TOL_SIMPLEX

    return SllnReport(
        ergodic=is_ergodic(sys),
        lower=lo,
        upper=hi,
        cycle_means=tuple(float(m) for m in means),
        bad_members=tuple(int(i) for i in bad),
        bad_capacity=float(bad_cap),
        bounds_hold_qs=bad_cap <= TOL_SIMPLEX,
        theta_fixed_qs=theta_fixed_qs,
        fixed_bad_members=fixed_bad_members,
        fixed_bad_capacity=float(fixed_bad_cap),
        equality_holds_qs=equality,
    )


def maximal_ergodic_check(sys: FiniteSystem, xi: Rv, k: int) -> float:
    """Upper expectation of xi restricted to {max of the first k partial orbit sums > 0}.

    With S_0 = 0 and S_j = xi + xi o theta + ... + xi o theta^{j-1}, returns
    E[xi * 1_{max_{0<=j<=k} S_j > 0}], which is >= 0 for every
    expectation-preserving system (the caller warrants preservation).
    """
    if k < 1:
        raise InputError("k must be >= 1")
    if xi.n != sys.n:
        raise InputError("payoff dimension mismatch")
    vals = xi.as_array()
    img = sys.theta.as_array()
    pos = np.arange(sys.n, dtype=np.intp)
    s = np.zeros(sys.n)
    m = np.zeros(sys.n)  # S_0 = 0
    for _ in range(k):
        s = s + vals[pos]
        np.maximum(m, s, out=m)
        pos = img[pos]
    integrand = Rv(tuple(np.where(m > 0.0, vals, 0.0)))
    return upper_exp(sys.priors, integrand)


# ---------------------------------------------------------------------------
# exhaustive four-statement audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndecomposabilityReport:
    """Truth values of the four indecomposability statements on one system.

    statements = (ergodic, almost-invariant sets are trivial, preimages of any
    non-polar set sweep out the space, any two non-polar sets communicate).
    """

    statements: tuple[bool, bool, bool, bool]
    search_bound: int

    @property
    def consistent(self) -> bool:
        return len(set(self.statements)) == 1

    @property
    def ok(self) -> bool:
        return self.consistent


def _capacity_table(sys: FiniteSystem) -> np.ndarray:
    """Upper capacity of every subset, indexed by bitmask."""
    n = sys.n
    masks = np.arange(1 << n, dtype=np.uint64)
    bits = (masks[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & 1
    return np.max(bits.astype(float) @ sys.priors.matrix().T, axis=1)


def _preimage_masks(theta: FiniteMap) -> np.ndarray:
    """premask[j] = bitmask of the theta-preimage of {j}."""
    n = theta.n
    pre = np.zeros(n, dtype=np.uint64)
    for i, j in enumerate(theta.image):
        pre[j] |= np.uint64(1 << i)
    return pre


def _preimage_of_mask(pre_of_point: np.ndarray, mask: int) -> int:
    out = 0
    m = int(mask)
    while m:
        low = m & -m
        out |= int(pre_of_point[low.bit_length() - 1])
        m ^= low
    return out


def indecomposability_audit(sys: FiniteSystem) -> IndecomposabilityReport:
    """Evaluate the four equivalent forms of indecomposability independently.

    (1) every invariant set is polar or co-polar (via grand orbits);
    (2) every almost-invariant set (preimage symmetric difference polar) is
        polar or co-polar, over all 2^n subsets;
    (3) for every non-polar A the complement of union over n >= 1 of
        theta^{-n} A is polar, computed by preimage fixpoint iteration;
    (4) for every pair of non-polar sets A, B some theta^{-n} A meets B with
        positive upper capacity, searched up to max preperiod + lcm of cycle
        lengths, beyond which theta^{-n} A is periodic in n.

    Statements (3) and (4) are monotone in the quantified sets, so they are
    evaluated on the singleton generators of positive capacity; that is an
    elementary reduction, not an appeal to the equivalence being audited.
    """
    _require_preserving(sys)
    n = sys.n
    if n > 12:
        raise InputError("enumeration budget exceeded: audit requires n <= 12")
    vtab = _capacity_table(sys)
    full = (1 << n) - 1
    pre_pt = _preimage_masks(sys.theta)
    dec = orbit_decomposition(sys.theta)
    bound = dec.max_preperiod + dec.cycle_lcm

    s1 = True
    for b in invariant_sets(sys):
        mask = sum(1 << i for i in b.members)
        if vtab[mask] > TOL_SIMPLEX and vtab[full ^ mask] > TOL_SIMPLEX:
            s1 = False
            break

    s2 = True
    for mask in range(1 << n):
        delta = _preimage_of_mask(pre_pt, mask) ^ mask
        if vtab[delta] <= TOL_SIMPLEX:
            if vtab[mask] > TOL_SIMPLEX and vtab[full ^ mask] > TOL_SIMPLEX:
                s2 = False
                break

    support = [i for i in range(n) if vtab[1 << i] > TOL_SIMPLEX]

    s3 = True
    for a in support:
        u = _preimage_of_mask(pre_pt, 1 << a)
        while True:
            nxt = u | _preimage_of_mask(pre_pt, u)
            if nxt == u:
                break
            u = nxt
        if vtab[full ^ u] > TOL_SIMPLEX:
            s3 = False
            break

    s4 = True
    img = sys.theta.as_array()
    for a in support:
        reached = set()
        cur = np.arange(n, dtype=np.intp)
        for _ in range(bound):
            cur = img[cur]
            reached.update(int(b) for b in np.nonzero(cur == a)[0])
        if any(b not in reached for b in support):
            s4 = False
            break

    return IndecomposabilityReport(statements=(s1, s2, s3, s4), search_bound=bound)


# ---------------------------------------------------------------------------
# system generators for sweeps and randomized trials
# ---------------------------------------------------------------------------


def prior_catalog(n: int) -> list[PriorSet]:
    """Fixed prior-set catalog for exhaustive sweeps.

    Contains the full vertex set, the uniform singleton, each vertex
    singleton, and two-point mixtures (a, 1-a, 0, ...) with a in
    {1/4, 1/2, 3/4} both as singletons and as symmetric pairs; this covers
    ergodic, non-ergodic, degenerate and polar-class situations.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    if n == 1:
        return [PriorSet((ProbVector((1.0,)),))]
    vertices = [ProbVector(tuple(1.0 if j == i else 0.0 for j in range(n))) for i in range(n)]
    uniform = ProbVector(tuple(1.0 / n for _ in range(n)))
    catalog: list[PriorSet] = [PriorSet(tuple(vertices)), PriorSet((uniform,))]
    catalog.extend(PriorSet((v,)) for v in vertices)
    for a in (0.25, 0.5, 0.75):
        w = ProbVector((a, 1.0 - a) + (0.0,) * (n - 2))
        rw = ProbVector((1.0 - a, a) + (0.0,) * (n - 2))
        catalog.append(PriorSet((w,)))
        if w.weights != rw.weights:
            catalog.append(PriorSet((w, rw)))
    seen: set[frozenset[tuple[float, ...]]] = set()
    unique = []
    for ps in catalog:
        key = frozenset(p.weights for p in ps.priors)
        if key not in seen:
            seen.add(key)
            unique.append(ps)
    return unique


def all_maps(n: int):
    """All n^n self-maps of {0, ..., n-1}."""
    for image in itertools.product(range(n), repeat=n):
        yield FiniteMap(image)


def enumerate_preserving_systems(n: int, catalog: list[PriorSet] | None = None):
    """Yield every expectation-preserving (map, prior-set) combination."""
    if catalog is None:
        catalog = prior_catalog(n)
    for theta in all_maps(n):
        for priors in catalog:
            sys = FiniteSystem(n, priors, theta)
            if is_expectation_preserving(sys):
                yield sys


def invariant_prior_set(theta: FiniteMap, seed_prior: ProbVector) -> PriorSet:
    """A prior set preserved by theta, grown from one seed prior.

    Pushes the seed forward past every preperiod; the remaining pushforward
    iterates are permuted cyclically by theta, so their collection has
    theta-invariant convex hull.
    """
    dec = orbit_decomposition(theta)
    rho, period = dec.max_preperiod, dec.cycle_lcm
    p = seed_prior
    for _ in range(rho):
        p = pushforward(theta, p)
    iterates = []
    for _ in range(period):
        iterates.append(p)
        p = pushforward(theta, p)
    seen = set()
    unique = []
    for q in iterates:
        if q.weights not in seen:
            seen.add(q.weights)
            unique.append(q)
    return PriorSet(tuple(unique))


def random_preserving_system(n: int, rng: np.random.Generator) -> FiniteSystem:
    """A random system that preserves its upper expectation by construction."""
    theta = FiniteMap(tuple(int(i) for i in rng.integers(0, n, n)))
    raw = rng.uniform(0.0, 1.0, n) + 1e-3
    seed_prior = ProbVector(tuple(raw / raw.sum()))
    priors = invariant_prior_set(theta, seed_prior)
    return FiniteSystem(n, priors, theta)
