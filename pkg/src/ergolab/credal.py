"""Upper/lower expectations over a finite credal set of probability vectors.

The upper expectation of a payoff vector X over a finite set of priors is
max_p <p, X>; the lower expectation is the min.  Together they induce a pair
of capacities (upper, lower) on events.  Everything here is exact linear
algebra on small vectors; no sampling is involved except in the two audit
routines, which draw seed-deterministic random payoffs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

#: absolute tolerance for simplex membership and capacity comparisons
TOL_SIMPLEX = 1e-12
#: absolute tolerance for derived identities (audits, no-mean-uncertainty)
TOL_DERIVED = 1e-10


class InputError(ValueError):
    """Malformed input: bad dimensions, invalid weights, budget exceeded."""


class ContractError(RuntimeError):
    """A precondition on the mathematical state was violated."""


@dataclass(frozen=True)
class ProbVector:
    """A probability vector: nonnegative weights summing to one."""

    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        if w.ndim != 1 or w.size == 0:
            raise InputError("weights must be a nonempty 1-d sequence")
        if np.any(w < -TOL_SIMPLEX):
            raise InputError(f"negative weight in {self.weights}")
        s = float(w.sum())
        if abs(s - 1.0) > TOL_SIMPLEX:
            raise InputError(f"weights sum to {s}, expected 1 within {TOL_SIMPLEX}")

    @property
    def n(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True)
class PriorSet:
    """A nonempty finite family of priors of identical length."""

    priors: tuple[ProbVector, ...]

    def __post_init__(self):
        priors = tuple(
            p if isinstance(p, ProbVector) else ProbVector(tuple(p)) for p in self.priors
        )
        object.__setattr__(self, "priors", priors)
        if not priors:
            raise InputError("prior set must be nonempty")
        n = priors[0].n
        if any(p.n != n for p in priors):
            raise InputError("all priors must have the same length")

    @property
    def n(self) -> int:
        return self.priors[0].n

    def matrix(self) -> np.ndarray:
        """Priors stacked as rows, shape (len(priors), n)."""
        return np.asarray([p.weights for p in self.priors], dtype=float)


@dataclass(frozen=True)
class Rv:
    """A real payoff vector on the finite outcome space."""

    values: tuple[float, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise InputError("values must be a nonempty 1-d sequence")
        object.__setattr__(self, "values", tuple(float(x) for x in v))

    @property
    def n(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def __neg__(self) -> "Rv":
        return Rv(tuple(-x for x in self.values))


@dataclass(frozen=True)
class EventSet:
    """A subset of the outcome space {0, ..., n-1}."""

    n: int
    members: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(int(i) for i in self.members))
        if self.n < 1:
            raise InputError("space size must be positive")
        if any(i < 0 or i >= self.n for i in self.members):
            raise InputError(f"member outside 0..{self.n - 1}")

    def indicator(self) -> Rv:
        return Rv(tuple(1.0 if i in self.members else 0.0 for i in range(self.n)))

    def complement(self) -> "EventSet":
        return EventSet(self.n, frozenset(range(self.n)) - self.members)


def _check_dims(prior_set: PriorSet, x: Rv) -> None:
    if prior_set.n != x.n:
        raise InputError(f"dimension mismatch: priors have n={prior_set.n}, payoff n={x.n}")


def upper_exp(prior_set: PriorSet, x: Rv) -> float:
    """max over priors of <p, X>; exact, no sampling."""
    _check_dims(prior_set, x)
    return float(np.max(prior_set.matrix() @ x.as_array()))


def lower_exp(prior_set: PriorSet, x: Rv) -> float:
    """min over priors of <p, X>, computed as -upper_exp(-X) bit-for-bit."""
    return -upper_exp(prior_set, -x)


def capacity(prior_set: PriorSet, event: EventSet) -> tuple[float, float]:
    """The pair (upper capacity, lower capacity) of the event."""
    if event.n != prior_set.n:
        raise InputError("event size does not match prior set")
    ind = event.indicator()
    return upper_exp(prior_set, ind), lower_exp(prior_set, ind)


def is_polar(prior_set: PriorSet, event: EventSet) -> bool:
    """True iff the upper capacity of the event is zero (within tolerance).

    A statement holding off a polar set holds quasi-surely.
    """
    v_up, _ = capacity(prior_set, event)
    return v_up <= TOL_SIMPLEX


def has_no_mean_uncertainty(prior_set: PriorSet, x: Rv) -> bool:
    """True iff the upper and lower expectations of X coincide."""
    return abs(upper_exp(prior_set, x) + upper_exp(prior_set, -x)) <= TOL_DERIVED


@dataclass(frozen=True)
class AuditReport:
    """Outcome of a randomized audit: trial count and any violations found."""

    trials: int
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def axiom_audit(prior_set: PriorSet, trials: int, seed: int) -> AuditReport:
    """Randomized check of the four defining properties of the upper expectation.

    For each trial draws payoffs X, Y with components uniform in [-1, 1],
    lam uniform in [0, 2], c uniform in [-1, 1], and checks monotonicity,
    constant preserving, sub-additivity and positive homogeneity within
    TOL_DERIVED.  Violations indicate an implementation bug, never sampling
    noise: the checked inequalities are exact for a max of linear functionals.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    n = prior_set.n
    violations: list[str] = []
    for k in range(trials):
        xv = rng.uniform(-1.0, 1.0, n)
        yv = rng.uniform(-1.0, 1.0, n)
        lam = rng.uniform(0.0, 2.0)
        c = rng.uniform(-1.0, 1.0)
        x, y = Rv(tuple(xv)), Rv(tuple(yv))
        smaller = Rv(tuple(xv - np.abs(yv)))  # smaller <= x pointwise
        if upper_exp(prior_set, x) < upper_exp(prior_set, smaller) - TOL_DERIVED:
            violations.append(f"trial {k}: monotonicity")
        const = Rv(tuple(np.full(n, c)))
        if abs(upper_exp(prior_set, const) - c) > TOL_DERIVED:
            violations.append(f"trial {k}: constant preserving")
        xy = Rv(tuple(xv + yv))
        if upper_exp(prior_set, xy) > upper_exp(prior_set, x) + upper_exp(prior_set, y) + TOL_DERIVED:
            violations.append(f"trial {k}: sub-additivity")
        lx = Rv(tuple(lam * xv))
        if abs(upper_exp(prior_set, lx) - lam * upper_exp(prior_set, x)) > TOL_DERIVED:
            violations.append(f"trial {k}: positive homogeneity")
    return AuditReport(trials=trials, violations=tuple(violations))


def _certainty_basis(prior_set: PriorSet) -> np.ndarray:
    """Orthonormal basis of {X : <p, X> identical for every prior p}.

    These are exactly the payoffs with no mean uncertainty: the upper and
    lower envelopes of a finite family of linear functionals agree iff the
    functionals all take the same value.
    """
    mat = prior_set.matrix()
    diffs = mat[1:] - mat[0]
    if diffs.shape[0] == 0:
        return np.eye(prior_set.n)
    return scipy.linalg.null_space(diffs)


def mean_uncertainty_space_audit(prior_set: PriorSet, trials: int, seed: int) -> AuditReport:
    """Check closure of the no-mean-uncertainty payoffs under linear combinations.

    Draws random pairs X1, X2 from the certainty subspace (so both pass
    has_no_mean_uncertainty) and random reals lam1, lam2 of any sign, and
    asserts lam1*X1 + lam2*X2 also passes.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    basis = _certainty_basis(prior_set)
    violations: list[str] = []
    for k in range(trials):
        if basis.shape[1] == 0:
            break
        c1 = rng.uniform(-1.0, 1.0, basis.shape[1])
        c2 = rng.uniform(-1.0, 1.0, basis.shape[1])
        x1 = Rv(tuple(basis @ c1))
        x2 = Rv(tuple(basis @ c2))
        if not has_no_mean_uncertainty(prior_set, x1):
            violations.append(f"trial {k}: generated X1 has mean uncertainty")
            continue
        if not has_no_mean_uncertainty(prior_set, x2):
            violations.append(f"trial {k}: generated X2 has mean uncertainty")
            continue
        l1, l2 = rng.uniform(-2.0, 2.0, 2)
        combo = Rv(tuple(l1 * x1.as_array() + l2 * x2.as_array()))
        if not has_no_mean_uncertainty(prior_set, combo):
            violations.append(f"trial {k}: combination lam1*X1+lam2*X2 broke closure")
    return AuditReport(trials=trials, violations=tuple(violations))
