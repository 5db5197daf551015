"""Inverses of (1 - delta^2 d_x^2) on the exterior segments, the boundary layer, and trace operators.

R0 solves with u(+-R) = 0, R1 with d_x u(+-R) = 0; both take u(+-L) = 0.
Both segments share one tridiagonal matrix once the left segment is read
boundary first, so each variant is factored once and solved with two
right-hand sides.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import lapack

from .core_types import ExteriorField, GridSpec, _side, average, jump
from .errors import HyperbolicPathError, TraceOrderError
from .stencils import one_sided_derivative


class HelmholtzSolver:
    """Prefactored second-order discretization of (1 - delta^2 d_x^2) on one segment.

    Attributes:
        grid: the exterior grid.
        delta: dispersion length (> 0).
    """

    def __init__(self, grid: GridSpec, delta: float):
        if not delta > 0:
            raise HyperbolicPathError("delta must be positive; use the hyperbolic path for delta = 0")
        self.grid = grid
        self.delta = float(delta)
        n = grid.n_per_side
        r = delta * delta / (grid.dx * grid.dx)
        self._r = r

        # Dirichlet at both ends: unknowns are nodes 1..n-2
        m = n - 2
        self._dirichlet = self._factor(np.full(m - 1, -r), np.full(m, 1 + 2 * r), np.full(m - 1, -r))

        # Neumann at the contact point via a ghost node: unknowns are nodes 0..n-2
        m = n - 1
        du = np.full(m - 1, -r)
        du[0] = -2 * r
        self._neumann = self._factor(np.full(m - 1, -r), np.full(m, 1 + 2 * r), du)

    @staticmethod
    def _factor(dl, d, du):
        dl, d, du, du2, ipiv, info = lapack.dgttrf(dl, d, du)
        if info != 0:
            raise np.linalg.LinAlgError(f"tridiagonal factorization failed (info={info})")
        return dl, d, du, du2, ipiv

    @staticmethod
    def _solve(fac, rhs):
        x, info = lapack.dgttrs(*fac, rhs)
        if info != 0:
            raise np.linalg.LinAlgError(f"tridiagonal solve failed (info={info})")
        return x

    def _columns(self, f: ExteriorField) -> np.ndarray:
        return np.column_stack([f.boundary_first(-1), f.boundary_first(1)])

    def R0(self, f: ExteriorField) -> ExteriorField:
        rhs = self._columns(f)
        u = np.zeros_like(rhs)
        u[1:-1] = self._solve(self._dirichlet, np.ascontiguousarray(rhs[1:-1]))
        return ExteriorField.from_boundary_first(self.grid, u[:, 0], u[:, 1])

    def R1(self, f: ExteriorField) -> ExteriorField:
        rhs = self._columns(f)
        u = np.zeros_like(rhs)
        u[:-1] = self._solve(self._neumann, np.ascontiguousarray(rhs[:-1]))
        return ExteriorField.from_boundary_first(self.grid, u[:, 0], u[:, 1])

    def apply(self, u: ExteriorField) -> ExteriorField:
        """Discrete (1 - delta^2 d_x^2) u at interior nodes of each segment; zero at segment ends."""
        out = []
        for a in (u.values_left, u.values_right):
            b = np.zeros_like(a)
            b[1:-1] = a[1:-1] - self._r * (a[2:] - 2 * a[1:-1] + a[:-2])
            out.append(b)
        return ExteriorField(self.grid, *out)


@lru_cache(maxsize=64)
def get_solver(grid: GridSpec, delta: float) -> HelmholtzSolver:
    return HelmholtzSolver(grid, delta)


def solve_R0(f: ExteriorField, delta: float) -> ExteriorField:
    return get_solver(f.grid, float(delta)).R0(f)


def solve_R1(f: ExteriorField, delta: float) -> ExteriorField:
    return get_solver(f.grid, float(delta)).R1(f)


def boundary_layer(sigma: float, delta: float, grid: GridSpec) -> ExteriorField:
    """sigma * exp(-|x|_R / delta) on both segments."""
    if not delta > 0:
        raise HyperbolicPathError("boundary layer needs delta > 0")
    e = sigma * np.exp(-grid.s / delta)
    return ExteriorField.from_boundary_first(grid, e, e.copy())


def one_sided_dx(f: ExteriorField, side) -> float:
    """Second-order one-sided d_x f at x = +-R, the stencil shared by all boundary jumps."""
    sg = _side(side)
    ds = one_sided_derivative(f.boundary_first(sg), f.grid.dx, 1, 2)
    return sg * ds


def jump_dx(f: ExteriorField) -> float:
    return one_sided_dx(f, 1) - one_sided_dx(f, -1)


# ---------------------------------------------------------------------------
# nonlocal trace I


@lru_cache(maxsize=64)
def _exp_weights(grid: GridSpec, delta: float) -> np.ndarray:
    """Weights w with sum(w * f_bf) = delta^-1 int exp(-s/delta) f_lin(s) ds over one segment."""
    h = grid.dx
    beta = h / delta
    a = grid.s[:-1]
    decay = np.exp(-a / delta)
    # int_0^1 exp(-beta u) du and int_0^1 u exp(-beta u) du
    em = -math.expm1(-beta)
    e0 = em / beta
    if beta > 1e-3:
        e1 = (em - beta * math.exp(-beta)) / (beta * beta)
    else:
        e1 = 0.5 - beta / 3 + beta**2 / 8 - beta**3 / 30
    w = np.zeros(grid.n_per_side)
    w[:-1] += beta * decay * (e0 - e1)
    w[1:] += beta * decay * e1
    w.setflags(write=False)
    return w


def trace_I(f: ExteriorField, side, delta: float) -> float:
    """I(f) at the contact point: delta^-1 int exp(-|y|_R/delta) f(y) dy over that side.

    The exponential is integrated exactly against the piecewise-linear interpolant of f.
    """
    if not delta > 0:
        raise HyperbolicPathError("trace_I needs delta > 0")
    w = _exp_weights(f.grid, float(delta))
    return float(np.dot(w, f.boundary_first(side)))


# ---------------------------------------------------------------------------
# local trace sums


def x_derivative_trace(f: ExteriorField, side, order: int, accuracy: int) -> float:
    """d_x^order f at x = +-R from a one-sided stencil with error O(dx^accuracy)."""
    sg = _side(side)
    ds = one_sided_derivative(f.boundary_first(sg), f.grid.dx, order, accuracy)
    return ds if sg == 1 else (-1) ** order * ds


@dataclass(frozen=True)
class TraceSet:
    """Boundary data (delta d_x)^l f at x = +R (plus) and x = -R (minus), l = 0..k_max."""

    delta: float
    plus: np.ndarray
    minus: np.ndarray

    @property
    def k_max(self) -> int:
        return len(self.plus) - 1

    @classmethod
    def from_field(cls, f: ExteriorField, delta: float, k_max: int) -> "TraceSet":
        """One-sided stencils of accuracy max(2, k_max - l) for the l-th entry."""
        vals = {}
        for sg in (1, -1):
            e = np.empty(k_max + 1)
            for l in range(k_max + 1):
                acc = max(2, k_max - l)
                e[l] = delta**l * x_derivative_trace(f, sg, l, acc) if l else f.trace(sg)
            vals[sg] = e
        return cls(float(delta), vals[1], vals[-1])

    @classmethod
    def from_derivatives(cls, plus_derivs, minus_derivs, delta: float) -> "TraceSet":
        """Build from plain x-derivatives d_x^l f(+-R)."""
        p = np.array([delta**l * v for l, v in enumerate(plus_derivs)], dtype=float)
        m = np.array([delta**l * v for l, v in enumerate(minus_derivs)], dtype=float)
        return cls(float(delta), p, m)

    def entries(self, side) -> np.ndarray:
        return self.plus if _side(side) == 1 else self.minus

    def _need(self, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        if k - 1 > self.k_max:
            raise TraceOrderError(f"k={k} needs entries up to order {k - 1}, have {self.k_max}")

    def D(self, k: int, side) -> float:
        self._need(k)
        e = self.entries(side)
        return float(sum(e[l] for l in range(0, k, 2)))

    def S(self, k: int, side) -> float:
        self._need(k)
        sg = _side(side)
        e = self.entries(side)
        return float(sum(sg**l * e[l] for l in range(k)))

    def P(self, k: int, side) -> float:
        self._need(k)
        sg = _side(side)
        e = self.entries(side)
        return float(sum(sg * e[l] for l in range(1, k, 2)))


def trace_D(f: ExteriorField, k: int, side, delta: float) -> float:
    return TraceSet.from_field(f, delta, k - 1).D(k, side)


def trace_S(f: ExteriorField, k: int, side, delta: float) -> float:
    return TraceSet.from_field(f, delta, k - 1).S(k, side)


def trace_P(f: ExteriorField, k: int, side, delta: float) -> float:
    return TraceSet.from_field(f, delta, k - 1).P(k, side)


def derivative_identity_residual(f: ExteriorField, delta: float, far_margin: Optional[float] = None) -> float:
    """Max-norm residual of d_x R0 f = R1 d_x f +- delta^-1 f(+-R) exp(-|x|_R/delta).

    Nodes within far_margin (default 20 delta) of the truncation points +-L are
    left out: the Dirichlet closure there carries its own layer, absent on the
    unbounded exterior.
    """
    solver = get_solver(f.grid, float(delta))
    lhs = solver.R0(f).ddx()
    rhs = solver.R1(f.ddx())
    e = np.exp(-f.grid.s / delta) / delta
    corr = ExteriorField.from_boundary_first(f.grid, -f.trace(-1) * e, f.trace(1) * e)
    margin = 20.0 * delta if far_margin is None else far_margin
    keep = f.grid.s <= (f.grid.L - f.grid.R) - margin
    r = lhs - rhs - corr
    return float(max(np.max(np.abs(r.boundary_first(sg)[keep]), initial=0.0) for sg in (1, -1)))


def residual_AB(f: ExteriorField, rho: float, k: int, alpha: float, delta: float,
                traces: Optional[TraceSet] = None):
    """(A, B) = ([[D_k f]], alpha <D_k f> - 2 delta <P_k f> - rho).

    Small A and B is what keeps q = R(f, rho) bounded uniformly in delta.
    """
    ts = traces if traces is not None else TraceSet.from_field(f, delta, k - 1)
    Dp, Dm = ts.D(k, 1), ts.D(k, -1)
    Pp, Pm = ts.P(k, 1), ts.P(k, -1)
    A = Dp - Dm
    B = alpha * 0.5 * (Dp + Dm) - 2 * delta * 0.5 * (Pp + Pm) - rho
    return A, B


def residual_AB_tilde(q: ExteriorField, rho: float, alpha: float, delta: float):
    """(A~, B~) = ([[q]], alpha <q> - delta^2 [[d_x q]] - rho) from traces of q."""
    return jump(q), alpha * average(q) - delta**2 * jump_dx(q) - rho
