"""Parameters, grids, exterior fields, states and the elevation change of variables.

The exterior domain is the pair of segments [-L, -R] and [R, L]. Fields keep
the left segment in increasing x (its last node is x = -R) and the right
segment in increasing x (its first node is x = +R).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import (
    DomainError,
    InvalidStateError,
    ObstacleTouchesBottomError,
    ResolutionError,
)
from .stencils import d1

ALPHA_NODES = 201


# ---------------------------------------------------------------------------
# scalar helpers


def _side(side) -> int:
    if side in (1, "+", "plus", "right"):
        return 1
    if side in (-1, "-", "minus", "left"):
        return -1
    raise ValueError(f"side must be +1 or -1, got {side!r}")


def abs_R(x, R: float):
    """Distance to the obstacle, |x|_R = |x| - R, for points of the closed exterior.

    Points strictly inside (-R, R) raise DomainError. The contact points
    x = +-R themselves map to 0.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) < R):
        raise DomainError(f"|x| < R={R}: point lies under the obstacle")
    out = np.abs(xa) - R
    return float(out) if out.ndim == 0 else out


def _check_admissible(theta, epsilon: float):
    g = 1.0 + 2.0 * epsilon * np.asarray(theta, dtype=float)
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise InvalidStateError("1 + 2*eps*theta < 0: the water column has cavitated")
    return np.sqrt(g)


def water_height(theta, epsilon: float):
    """h = 1 + eps*zeta = sqrt(1 + 2*eps*theta)."""
    return _check_admissible(theta, epsilon)


def c_of_theta(theta, epsilon: float):
    """c(theta) = -2 theta^2 / (1 + sqrt(1 + 2 eps theta))^2, so that zeta = theta + eps*c(theta)."""
    s = _check_admissible(theta, epsilon)
    th = np.asarray(theta, dtype=float)
    out = -2.0 * th * th / (1.0 + s) ** 2
    return float(out) if out.ndim == 0 else out


def c_prime(theta, epsilon: float):
    """Derivative of c, written as -2 theta / (s (1 + s)) with s = sqrt(1 + 2 eps theta).

    This equals (1/s - 1)/eps for eps > 0 without the cancellation near theta = 0,
    and reduces to -theta at eps = 0.
    """
    s = _check_admissible(theta, epsilon)
    th = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -2.0 * th / (s * (1.0 + s))
    return float(out) if out.ndim == 0 else out


def one_plus_eps_cprime(theta, epsilon: float):
    """1 + eps*c'(theta) = d zeta / d theta = 1/sqrt(1 + 2 eps theta)."""
    s = _check_admissible(theta, epsilon)
    with np.errstate(divide="ignore"):
        out = 1.0 / s
    return float(out) if np.ndim(out) == 0 else out


def zeta_to_theta(zeta, epsilon: float):
    z = np.asarray(zeta, dtype=float)
    out = z + 0.5 * epsilon * z * z
    return float(out) if out.ndim == 0 else out


def theta_to_zeta(theta, epsilon: float):
    """Root of zeta + eps*zeta^2/2 = theta that tends to theta as eps -> 0."""
    s = _check_admissible(theta, epsilon)
    th = np.asarray(theta, dtype=float)
    out = 2.0 * th / (1.0 + s)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# obstacle profile


@dataclass(frozen=True)
class ObstacleProfile:
    """Bottom profile zeta_w of the obstacle on [-R, R].

    kind is "flat" (constant value), "poly" (coefficients, lowest degree first)
    or "table" (nodes and values, cubic spline).
    """

    kind: str = "flat"
    value: float = 0.0
    coeffs: Tuple[float, ...] = ()
    table_x: Tuple[float, ...] = ()
    table_y: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("flat", "poly", "table"):
            raise ValueError(f"unknown obstacle profile kind {self.kind!r}")
        if self.kind == "table" and len(self.table_x) < 2:
            raise ValueError("table profile needs at least two nodes")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "flat":
            return np.full_like(x, self.value)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(x, np.asarray(self.coeffs, dtype=float))
        spline = CubicSpline(np.asarray(self.table_x), np.asarray(self.table_y))
        return spline(x)

    def to_dict(self) -> dict:
        if self.kind == "flat":
            return {"kind": "flat", "value": self.value}
        if self.kind == "poly":
            return {"kind": "poly", "coeffs": list(self.coeffs)}
        return {"kind": "table", "x": list(self.table_x), "values": list(self.table_y)}

    @classmethod
    def from_dict(cls, d: dict) -> "ObstacleProfile":
        kind = d.get("kind", "flat")
        if kind == "flat":
            return cls("flat", value=float(d.get("value", 0.0)))
        if kind == "poly":
            return cls("poly", coeffs=tuple(float(c) for c in d["coeffs"]))
        return cls("table", table_x=tuple(map(float, d["x"])), table_y=tuple(map(float, d["values"])))


def interior_nodes(R: float, n_nodes: int = ALPHA_NODES) -> np.ndarray:
    return np.linspace(-R, R, n_nodes)


def alpha_from_obstacle(zeta_w: Callable, epsilon: float, R: float, h_min: float = 0.1,
                        n_nodes: int = ALPHA_NODES) -> float:
    """Composite Simpson value of the integral of 1/(1 + eps*zeta_w) over [-R, R]."""
    x = interior_nodes(R, n_nodes)
    hw = 1.0 + epsilon * np.asarray(zeta_w(x), dtype=float)
    if np.min(hw) < h_min:
        raise ObstacleTouchesBottomError(
            f"h_w = 1 + eps*zeta_w drops to {np.min(hw):.4g} < h_min = {h_min}"
        )
    return float(simpson(1.0 / hw, x=x))


# ---------------------------------------------------------------------------
# parameters and grid


@dataclass(frozen=True)
class Parameters:
    """Physical and dispersion constants of one scenario.

    Give either mu or delta; the other follows from delta^2 = mu/3.
    """

    epsilon: float
    mu: Optional[float] = None
    delta: Optional[float] = None
    R: float = 1.0
    zeta_w: Callable = field(default_factory=ObstacleProfile)
    h_min: float = 0.1
    c0: float = 0.05
    alpha: float = field(init=False)

    def __post_init__(self):
        mu, delta = self.mu, self.delta
        if mu is None and delta is None:
            raise ValueError("give mu or delta")
        if delta is None:
            delta = math.sqrt(mu / 3.0)
        if mu is None:
            mu = 3.0 * delta * delta
        if mu < 0 or delta < 0:
            raise ValueError("mu and delta must be non-negative")
        if abs(delta * delta - mu / 3.0) > 1e-14 * max(1.0, mu):
            raise ValueError(f"inconsistent mu={mu} and delta={delta}: need delta^2 = mu/3")
        if self.R <= 0:
            raise ValueError("R must be positive")
        object.__setattr__(self, "mu", float(mu))
        object.__setattr__(self, "delta", float(delta))
        object.__setattr__(
            self, "alpha", alpha_from_obstacle(self.zeta_w, self.epsilon, self.R, self.h_min)
        )

    def with_delta(self, delta: float) -> "Parameters":
        return Parameters(self.epsilon, delta=delta, R=self.R, zeta_w=self.zeta_w,
                          h_min=self.h_min, c0=self.c0)

    def with_epsilon(self, epsilon: float) -> "Parameters":
        return Parameters(epsilon, delta=self.delta, R=self.R, zeta_w=self.zeta_w,
                          h_min=self.h_min, c0=self.c0)


@dataclass(frozen=True)
class GridSpec:
    """Uniform nodes on [-L, -R] and [R, L], both endpoints included."""

    R: float
    L: float
    n_per_side: int

    def __post_init__(self):
        if self.L <= self.R:
            raise ValueError("L must exceed R")
        if self.n_per_side < 4:
            raise ValueError("need at least 4 nodes per side")

    @classmethod
    def with_spacing(cls, R: float, L: float, dx: float) -> "GridSpec":
        """Grid whose spacing is the largest value not exceeding dx."""
        n = int(math.ceil((L - R) / dx - 1e-9)) + 1
        return cls(R, L, n)

    @property
    def dx(self) -> float:
        return (self.L - self.R) / (self.n_per_side - 1)

    @property
    def s(self) -> np.ndarray:
        """Distance to the boundary along a segment, boundary first."""
        return np.linspace(0.0, self.L - self.R, self.n_per_side)

    @property
    def x_right(self) -> np.ndarray:
        return self.R + self.s

    @property
    def x_left(self) -> np.ndarray:
        return -(self.R + self.s)[::-1]

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.x_left, self.x_right])

    def check_resolution(self, delta: float, allow_coarse: bool = False) -> None:
        if delta > 0 and self.dx > delta / 4 * (1 + 1e-12) and not allow_coarse:
            raise ResolutionError(
                f"dx={self.dx:.4g} exceeds delta/4={delta / 4:.4g}; refine the grid or allow coarse grids"
            )

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_per_side, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w


# ---------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class ExteriorField:
    """A scalar function sampled on both exterior segments."""

    grid: GridSpec
    values_left: np.ndarray
    values_right: np.ndarray

    def __post_init__(self):
        vl = np.asarray(self.values_left, dtype=float)
        vr = np.asarray(self.values_right, dtype=float)
        n = self.grid.n_per_side
        if vl.shape != (n,) or vr.shape != (n,):
            raise ValueError(f"field arrays must have shape ({n},)")
        object.__setattr__(self, "values_left", vl)
        object.__setattr__(self, "values_right", vr)

    # construction
    @classmethod
    def zeros(cls, grid: GridSpec) -> "ExteriorField":
        return cls(grid, np.zeros(grid.n_per_side), np.zeros(grid.n_per_side))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "ExteriorField":
        return cls(grid, np.full(grid.n_per_side, value), np.full(grid.n_per_side, value))

    @classmethod
    def from_function(cls, grid: GridSpec, func: Callable) -> "ExteriorField":
        return cls(grid, func(grid.x_left), func(grid.x_right))

    @classmethod
    def from_boundary_first(cls, grid: GridSpec, left_bf, right_bf) -> "ExteriorField":
        return cls(grid, np.asarray(left_bf)[::-1], right_bf)

    @classmethod
    def from_concat(cls, grid: GridSpec, arr) -> "ExteriorField":
        n = grid.n_per_side
        return cls(grid, arr[:n], arr[n:])

    # views
    def boundary_first(self, side) -> np.ndarray:
        """Values of one segment ordered from the contact point outwards."""
        return self.values_right if _side(side) == 1 else self.values_left[::-1]

    def concat(self) -> np.ndarray:
        return np.concatenate([self.values_left, self.values_right])

    def trace(self, side) -> float:
        return float(self.values_right[0] if _side(side) == 1 else self.values_left[-1])

    def jump(self) -> float:
        return jump(self)

    def average(self) -> float:
        return average(self)

    def map(self, func: Callable) -> "ExteriorField":
        return ExteriorField(self.grid, func(self.values_left), func(self.values_right))

    def ddx(self) -> "ExteriorField":
        """Second-order x-derivative: centered inside each segment, one-sided at its ends."""
        h = self.grid.dx
        return ExteriorField(self.grid, d1(self.values_left, h), d1(self.values_right, h))

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.values_left)), np.max(np.abs(self.values_right))))

    def integrate(self) -> float:
        """Trapezoid integral over both segments."""
        w = self.grid.trapezoid_weights()
        return float(np.dot(w, self.values_left) + np.dot(w, self.values_right))

    def gradient_energy(self) -> float:
        """Sum over cells of dx * ((f[i+1] - f[i]) / dx)^2, the Dirichlet form of the 3-point Laplacian."""
        h = self.grid.dx
        return float((np.sum(np.diff(self.values_left) ** 2) + np.sum(np.diff(self.values_right) ** 2)) / h)

    def l2_norm(self) -> float:
        return math.sqrt((self * self).integrate())

    def reflect(self) -> "ExteriorField":
        """f(-x)."""
        return ExteriorField(self.grid, self.values_right[::-1].copy(), self.values_left[::-1].copy())

    def copy(self) -> "ExteriorField":
        return ExteriorField(self.grid, self.values_left.copy(), self.values_right.copy())

    # arithmetic
    def _binary(self, other, op):
        if isinstance(other, ExteriorField):
            return ExteriorField(self.grid, op(self.values_left, other.values_left),
                                 op(self.values_right, other.values_right))
        return ExteriorField(self.grid, op(self.values_left, other), op(self.values_right, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __neg__(self):
        return ExteriorField(self.grid, -self.values_left, -self.values_right)


def jump(f: ExteriorField) -> float:
    """[[f]] = f(R) - f(-R)."""
    return f.trace(1) - f.trace(-1)


def average(f: ExteriorField) -> float:
    """<f> = (f(R) + f(-R))/2."""
    return 0.5 * (f.trace(1) + f.trace(-1))


# ---------------------------------------------------------------------------
# state


@dataclass
class State:
    """U = (theta, q) at time t."""

    t: float
    theta: ExteriorField
    q: ExteriorField

    @property
    def grid(self) -> GridSpec:
        return self.theta.grid

    def zeta(self, epsilon: float) -> ExteriorField:
        return self.theta.map(lambda a: theta_to_zeta(a, epsilon))

    def check(self, params: Parameters, tol_jump: float = 1e-10) -> None:
        """Raise InvalidStateError unless the discharge is continuous and the depth admissible."""
        if abs(jump(self.q)) > tol_jump:
            raise InvalidStateError(f"|[[q]]| = {abs(jump(self.q)):.3g} exceeds {tol_jump:g}")
        a0 = one_plus_eps_cprime(self.theta.concat(), params.epsilon)
        if np.min(a0) < params.c0:
            raise InvalidStateError(
                f"1 + eps*c'(theta) drops to {np.min(a0):.3g} < c0 = {params.c0}"
            )

    def reflect(self) -> "State":
        """(theta(-x), -q(-x))."""
        return State(self.t, self.theta.reflect(), -self.q.reflect())

    def copy(self) -> "State":
        return State(self.t, self.theta.copy(), self.q.copy())

    @classmethod
    def rest(cls, grid: GridSpec, t: float = 0.0) -> "State":
        return cls(t, ExteriorField.zeros(grid), ExteriorField.zeros(grid))


def from_zeta(t: float, zeta: ExteriorField, q: ExteriorField, epsilon: float) -> State:
    return State(t, zeta.map(lambda z: zeta_to_theta(z, epsilon)), q)


def sobolev_norm(f: ExteriorField, order: int) -> float:
    """Discrete H^order norm: dx-weighted sums of squared m-th divided differences, m <= order.

    Differences are taken within each segment only, so no one-sided stencil is
    ever iterated at the ends.
    """
    dx = f.grid.dx
    total = (f * f).integrate()
    for m in range(1, order + 1):
        for vals in (f.values_left, f.values_right):
            d = np.diff(vals, m) / dx**m
            total += dx * float(d @ d)
    return math.sqrt(total)


def state_sobolev_norm(U: State, order: int, include_dq: bool = False, delta: float = 0.0) -> float:
    parts = [sobolev_norm(U.theta, order) ** 2, sobolev_norm(U.q, order) ** 2]
    if include_dq:
        parts.append((delta * sobolev_norm(U.q.ddx(), order)) ** 2)
    return math.sqrt(sum(parts))


__all__: Sequence[str] = [
    "abs_R", "c_of_theta", "c_prime", "one_plus_eps_cprime", "water_height",
    "zeta_to_theta", "theta_to_zeta", "ObstacleProfile", "alpha_from_obstacle",
    "Parameters", "GridSpec", "ExteriorField", "State", "jump", "average",
    "from_zeta", "sobolev_norm", "state_sobolev_norm",
]
