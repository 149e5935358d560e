"""Monotone explicit solver for the sign-split heat flow on the circle.

The evolution is du/dt = H(u_xx) with H(d) = (hi2 * max(d,0) - lo2 * max(-d,0)) / 2:
high diffusivity acts on convex regions, low diffusivity on concave ones.
The scheme is explicit Euler on the periodic three-point stencil; it is
monotone under dt * hi2 / h^2 <= 1 and therefore obeys a discrete maximum
principle and converges to the viscosity solution.

A structural fact worth keeping in mind when reading the audits: for
hi2 > lo2 the flow does not preserve the spatial mean.  Integrating the
equation over the circle gives
    d/dt mean(u) = (hi2 - lo2)/2 * mean(max(u_xx, 0)) >= 0,
with equality only for constant u, because the periodic second derivative
integrates to zero.  The mean therefore increases strictly until the
solution flattens, and the flat limit sits strictly above mean(phi) for
every nonconstant initial datum.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .credal import ContractError, InputError


@dataclass(frozen=True)
class CircleGrid:
    """M uniform nodes x_i = i * 2*pi/M on [0, 2*pi); indices wrap modulo M."""

    m: int

    def __post_init__(self):
        if self.m < 8:
            raise InputError("grid must have at least 8 nodes")

    @property
    def h(self) -> float:
        return 2.0 * np.pi / self.m

    def nodes(self) -> np.ndarray:
        return self.h * np.arange(self.m)


class GridFn:
    """Real values on the nodes of a CircleGrid; immutable after construction."""

    __slots__ = ("grid", "_values")

    def __init__(self, grid: CircleGrid, values):
        v = np.array(values, dtype=float)
        if v.shape != (grid.m,):
            raise InputError(f"expected {grid.m} values, got shape {v.shape}")
        v.flags.writeable = False
        self.grid = grid
        self._values = v

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __repr__(self):
        return f"GridFn(m={self.grid.m}, range=[{self._values.min():.3g}, {self._values.max():.3g}])"

    @staticmethod
    def from_callable(grid: CircleGrid, f) -> "GridFn":
        return GridFn(grid, f(grid.nodes()))


def cos_fn(grid: CircleGrid) -> GridFn:
    return GridFn(grid, np.cos(grid.nodes()))


def quad_fn(grid: CircleGrid) -> GridFn:
    """(x - pi)^2 sampled on the nodes; convex on the interval, kinked at the seam."""
    return GridFn(grid, (grid.nodes() - np.pi) ** 2)


def indicator_fn(grid: CircleGrid, a: float, b: float) -> GridFn:
    """Indicator of the node-aligned half-open arc [a, b)."""
    x = grid.nodes()
    return GridFn(grid, ((x >= a - 1e-12) & (x < b - 1e-12)).astype(float))


def random_fn(grid: CircleGrid, seed: int) -> GridFn:
    rng = np.random.default_rng(seed)
    return GridFn(grid, rng.uniform(-1.0, 1.0, grid.m))


def constant_fn(grid: CircleGrid, c: float) -> GridFn:
    return GridFn(grid, np.full(grid.m, float(c)))


@dataclass(frozen=True)
class GHeatParams:
    """Squared volatility band and CFL safety factor of the solver."""

    sigma_lo2: float
    sigma_hi2: float
    cfl: float = 0.8

    def __post_init__(self):
        if not (0.0 < self.sigma_lo2 <= self.sigma_hi2):
            raise InputError("need 0 < sigma_lo2 <= sigma_hi2")
        if not (0.0 < self.cfl < 1.0):
            raise InputError("cfl must lie in (0, 1)")

    def dt(self, grid: CircleGrid) -> float:
        """Stable step: dt * sigma_hi2 / h^2 = cfl < 1."""
        return self.cfl * grid.h**2 / self.sigma_hi2


def second_diff(u: GridFn) -> GridFn:
    """Periodic three-point second difference (u_{i+1} - 2 u_i + u_{i-1}) / h^2."""
    v = u.values
    d = (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / u.grid.h**2
    return GridFn(u.grid, d)


def g_operator(u: GridFn, p: GHeatParams) -> GridFn:
    """Sign-split diffusion: hi2/2 on positive curvature, lo2/2 on negative."""
    d = second_diff(u).values
    out = 0.5 * p.sigma_hi2 * np.maximum(d, 0.0) - 0.5 * p.sigma_lo2 * np.maximum(-d, 0.0)
    return GridFn(u.grid, out)


def step_explicit(u: GridFn, p: GHeatParams, dt: float) -> GridFn:
    """One explicit Euler step; requires the monotonicity bound dt*hi2/h^2 <= 1."""
    if dt < 0:
        raise InputError("dt must be >= 0")
    lam = dt * p.sigma_hi2 / u.grid.h**2
    if lam > 1.0 + 1e-12:
        raise ContractError(f"CFL violation: dt*sigma_hi2/h^2 = {lam:.6f} > 1")
    return GridFn(u.grid, u.values + dt * g_operator(u, p).values)


def solve(phi: GridFn, t: float, p: GHeatParams) -> GridFn:
    """Evolve phi for time t; the last step is shortened to land exactly on t."""
    if t < 0:
        raise InputError("t must be >= 0")
    dt = p.dt(phi.grid)
    n_full = int(np.floor(t / dt + 1e-9))
    rem = t - n_full * dt
    u = phi
    for _ in range(n_full):
        u = step_explicit(u, p, dt)
    if rem > 1e-12:
        u = step_explicit(u, p, rem)
    return u


def semigroup_check(phi: GridFn, s: float, t: float, p: GHeatParams) -> float:
    """sup-norm defect of the flow property: |solve(phi, s+t) - solve(solve(phi, t), s)|."""
    if s < 0 or t < 0:
        raise InputError("times must be >= 0")
    direct = solve(phi, s + t, p)
    chained = solve(solve(phi, t, p), s, p)
    return float(np.max(np.abs(direct.values - chained.values)))


def mean(u: GridFn) -> float:
    """Normalized circle integral; on a uniform periodic grid this is the node mean."""
    return float(np.mean(u.values))


def invariant_expectation(phi: GridFn, delta: float, p: GHeatParams) -> float:
    """mean(solve(phi, delta)) for delta > 0.

    For sigma_lo2 == sigma_hi2 this is delta-independent and equals mean(phi).
    For a strict band it increases with delta (see the module docstring), so
    callers comparing several delta values measure that drift.
    """
    if delta <= 0:
        raise InputError("delta must be > 0")
    return mean(solve(phi, delta, p))


def convergence_profile(phi: GridFn, times: list[float], p: GHeatParams) -> list[float]:
    """sup_x |solve(phi, t) - mean(phi)| at each requested time."""
    if any(b <= a for a, b in zip(times, times[1:])):
        raise InputError("times must be strictly increasing")
    m0 = mean(phi)
    out = []
    u = phi
    prev_t = 0.0
    for t in times:
        u = solve(u, t - prev_t, p)
        prev_t = t
        out.append(float(np.max(np.abs(u.values - m0))))
    return out


@dataclass(frozen=True)
class SteadyStateReport:
    """Flatness of the long-time state and residual of the generator on it."""

    horizon: float
    oscillation: float
    generator_norm: float
    flat_tol: float
    generator_tol: float

    @property
    def ok(self) -> bool:
        return self.oscillation <= self.flat_tol and self.generator_norm <= self.generator_tol


def steady_state_audit(
    phi0: GridFn,
    p: GHeatParams,
    horizon: float = 100.0,
    flat_tol: float = 1e-6,
    generator_tol: float = 1e-8,
) -> SteadyStateReport:
    """Run to a long horizon and check the state is a constant steady state.

    The only periodic steady states of the sign-split flow are constants, so
    the oscillation of the terminal state and the sup norm of the generator
    applied to it must both vanish to tolerance.
    """
    u = solve(phi0, horizon, p)
    osc = float(u.values.max() - u.values.min())
    gnorm = float(np.max(np.abs(g_operator(u, p).values)))
    return SteadyStateReport(horizon, osc, gnorm, flat_tol, generator_tol)


def convex_concave_split(phi: GridFn) -> tuple[GridFn, GridFn]:
    """Split an interval function into convex + concave parts, exactly.

    phi is treated on the closed interval (no wraparound).  Interior second
    differences of the parts are the positive and negative parts of those of
    phi; both parts are reconstructed by double cumulative summation anchored
    so that part1 + part2 == phi at every node.  Zero-curvature (linear)
    content lands in the convex part, which makes the split deterministic.
    """
    v = phi.values
    m = phi.grid.m
    h = phi.grid.h
    d2 = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2  # interior nodes 1..m-2
    d2_pos = np.maximum(d2, 0.0)
    p1 = np.empty(m)
    p1[0] = v[0]
    p1[1] = v[1]  # initial slope of the convex part matches phi
    for i in range(1, m - 1):
        p1[i + 1] = 2.0 * p1[i] - p1[i - 1] + h**2 * d2_pos[i - 1]
    p2 = v - p1
    return GridFn(phi.grid, p1), GridFn(phi.grid, p2)


# ---------------------------------------------------------------------------
# CSV interchange: header "x,u", 17 significant digits
# ---------------------------------------------------------------------------


def write_csv(u: GridFn, path: str) -> None:
    with open(path, "w", newline="") as fh:
        _write_csv_stream(u, fh)


def to_csv_text(u: GridFn) -> str:
    buf = io.StringIO()
    _write_csv_stream(u, buf)
    return buf.getvalue()


def _write_csv_stream(u: GridFn, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["x", "u"])
    for x, val in zip(u.grid.nodes(), u.values):
        writer.writerow([f"{x:.17g}", f"{val:.17g}"])


def read_csv(path: str) -> GridFn:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["x", "u"]:
        raise InputError("expected CSV with header 'x,u'")
    vals = [float(r[1]) for r in rows[1:]]
    return GridFn(CircleGrid(len(vals)), vals)
