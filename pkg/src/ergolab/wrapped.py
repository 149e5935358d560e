"""Wrapped Gaussian heat kernels on the circle and the linear semigroups they generate.

The transition density of constant-volatility Brownian motion on [0, 2*pi) is
the 2*pi-periodized Gaussian; convolving against it on the uniform grid with
the trapezoid rule is spectrally accurate for smooth periodic integrands.
These linear semigroups are the reference targets the nonlinear solver is
cross-checked against, and single steps of them are the transition operators
of the dynamic-programming oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .credal import InputError
from .gheat import CircleGrid, GHeatParams, GridFn, indicator_fn

#: default kernel-image truncation tolerance
TAIL_TOL = 1e-15

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WrappedKernelSpec:
    """Variance rate, elapsed time and truncation tolerance of a wrapped kernel."""

    sigma2: float
    t: float
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise InputError("sigma2 must be > 0")
        if self.t <= 0:
            raise InputError("t must be > 0")
        if not (0 < self.tail_tol < 1):
            raise InputError("tail_tol must lie in (0, 1)")

    @property
    def variance(self) -> float:
        return self.sigma2 * self.t

    @property
    def truncation_order(self) -> int:
        """Smallest K whose omitted image terms sum below tail_tol.

        Bound: for |x - y| <= 2*pi the omitted centers sit at distance at
        least 2*pi*K, and successive terms decay at least geometrically with
        ratio exp(-(2*pi)^2 (2K+1) / (2 v)).
        """
        v = self.variance
        amp = 2.0 / math.sqrt(TWO_PI * v)
        for k in range(1, 201):
            lead = math.exp(-((TWO_PI * k) ** 2) / (2.0 * v))
            ratio = math.exp(-(TWO_PI**2) * (2 * k + 1) / (2.0 * v))
            if amp * lead / (1.0 - ratio) < self.tail_tol:
                return k
        raise InputError("kernel truncation order exceeds 200; variance too large")


def wrapped_gauss(spec: WrappedKernelSpec, x, y):
    """Periodized Gaussian transition density p(t, x, y); vectorizes over x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v = spec.variance
    k_ord = spec.truncation_order
    d = x - y
    out = np.zeros(np.broadcast(x, y).shape)
    for k in range(-k_ord, k_ord + 1):
        out = out + np.exp(-((d - TWO_PI * k) ** 2) / (2.0 * v))
    return out / math.sqrt(TWO_PI * v)


@lru_cache(maxsize=64)
def kernel_matrix(m: int, sigma2: float, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
    """Trapezoid transition operator K[i, j] = h * p(t, x_i, x_j); cached, read-only."""
    grid = CircleGrid(m)
    spec = WrappedKernelSpec(sigma2, t, tail_tol)
    x = grid.nodes()
    mat = grid.h * wrapped_gauss(spec, x[:, None], x[None, :])
    mat.flags.writeable = False
    return mat


def linear_semigroup(phi: GridFn, spec: WrappedKernelSpec) -> GridFn:
    """Quadrature convolution of phi with the wrapped kernel."""
    mat = kernel_matrix(phi.grid.m, spec.sigma2, spec.t, spec.tail_tol)
    return GridFn(phi.grid, mat @ phi.values)


def regularity_bound(t: float, sigma_lo2: float, leb: float) -> float:
    """Uniform upper bound for the flow of an indicator of Lebesgue measure leb.

    Value: leb / sqrt(2*pi*lo2*t) * exp((2*pi)^2 / (2*lo2*t))
               / (1 - exp(-pi^2 / (lo2*t))).
    The exponential factor is enormous for small lo2*t, so the bound is only
    informative once it drops below 1; it vanishes linearly as leb -> 0 either
    way, which is the point of the estimate.
    """
    if t <= 0:
        raise InputError("t must be > 0")
    if sigma_lo2 <= 0:
        raise InputError("sigma_lo2 must be > 0")
    if leb < 0:
        raise InputError("leb must be >= 0")
    if leb == 0.0:
        return 0.0
    vt = sigma_lo2 * t
    try:
        grow = math.exp((TWO_PI**2) / (2.0 * vt))
    except OverflowError:
        return math.inf
    return leb / math.sqrt(TWO_PI * vt) * grow / (1.0 - math.exp(-(math.pi**2) / vt))


@dataclass(frozen=True)
class RegularityAuditRow:
    leb: float
    sup_value: float
    closed_form_bound: float
    proxy_bound: float


@dataclass(frozen=True)
class RegularityAuditReport:
    """Vanishing of sup_x T_t 1_{A_n} along a shrinking interval family."""

    t: float
    rows: tuple[RegularityAuditRow, ...]
    non_increasing: bool
    within_bounds: bool
    final_below_proxy: bool

    @property
    def ok(self) -> bool:
        return self.non_increasing and self.within_bounds and self.final_below_proxy


def strong_regularity_audit(
    p: GHeatParams,
    t: float,
    intervals: list[tuple[float, float]],
    grid: CircleGrid | None = None,
    steps: int = 64,
) -> RegularityAuditReport:
    """Evaluate sup_x of the nonlinear flow of shrinking indicators.

    The flow values come from the dynamic-programming oracle (the independent
    route, not the finite-difference scheme).  Checks that the sequence is
    non-increasing, that every value stays below min(1, closed-form bound),
    and that the final value falls below the practical proxy
    10 * leb * sup of the low-volatility kernel.
    """
    from .scenario import dp_upper_expectation  # local import: avoids a module cycle

    if grid is None:
        grid = CircleGrid(256)
    if t <= 0:
        raise InputError("t must be > 0")
    for (a0, b0), (a1, b1) in zip(intervals, intervals[1:]):
        if a1 < a0 - 1e-12 or b1 > b0 + 1e-12:
            raise InputError("intervals must be nested decreasing")
    c_dominant = float(wrapped_gauss(WrappedKernelSpec(p.sigma_lo2, t), 0.0, 0.0))
    rows = []
    for a, b in intervals:
        ind = indicator_fn(grid, a, b)
        leb = float(np.sum(ind.values)) * grid.h
        val = float(np.max(dp_upper_expectation(ind, t, p, steps).values))
        rows.append(
            RegularityAuditRow(
                leb=leb,
                sup_value=val,
                closed_form_bound=regularity_bound(t, p.sigma_lo2, leb),
                proxy_bound=10.0 * leb * c_dominant,
            )
        )
    vals = [r.sup_value for r in rows]
    non_inc = all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
    within = all(r.sup_value <= min(1.0, r.closed_form_bound) + 1e-9 for r in rows)
    final_ok = rows[-1].sup_value <= rows[-1].proxy_bound if rows else True
    return RegularityAuditReport(
        t=t,
        rows=tuple(rows),
        non_increasing=non_inc,
        within_bounds=within,
        final_below_proxy=final_ok,
    )
