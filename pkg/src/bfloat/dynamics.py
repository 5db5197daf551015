"""Right-hand side of the evolution in ODE form, and its delta = 0 limit.

With U = (theta, q):

    d_t theta = -Phi,        Phi   = d_x q / (1 + eps c'(theta)) = sqrt(1 + 2 eps theta) d_x q
    d_t q     = -R(Gamma, [[theta]]),   Gamma = d_x (theta + eps q^2)

where R(G, rho) = R0 G + sigma exp(-|x|_R/delta) and
sigma = (delta^2 [[d_x R0 G]] + rho) / (alpha + 2 delta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core_types import (
    ExteriorField,
    Parameters,
    State,
    _check_admissible,
    average,
    c_prime,
    jump,
    one_plus_eps_cprime,
)
from .elliptic import boundary_layer, get_solver, jump_dx
from .errors import BlowUpError, HyperbolicPathError, InsufficientHistoryError, InvalidStateError


@dataclass
class RhsEvaluation:
    dtheta: ExteriorField
    dq: ExteriorField
    d_avg_q: float
    gamma_field: ExteriorField


def _height(theta: ExteriorField, eps: float, t: float = float("nan")) -> ExteriorField:
    try:
        return theta.map(lambda a: _check_admissible(a, eps))
    except InvalidStateError as exc:
        raise BlowUpError(str(exc), t) from None


def compute_Phi(U: State, eps: float, c0: float = 0.0) -> ExteriorField:
    """d_x q / (1 + eps c'(theta)).

    Raises BlowUpError if the change of variables breaks down or if
    1 + eps c'(theta) falls below c0.
    """
    h = _height(U.theta, eps, U.t)
    if c0 > 0:
        hmax = max(np.max(h.values_left), np.max(h.values_right))
        if hmax > 1.0 / c0:
            raise BlowUpError(f"1 + eps*c'(theta) = {1 / hmax:.3g} below c0 = {c0}", U.t)
    return U.q.ddx() * h


def compute_Gamma(U: State, eps: float) -> ExteriorField:
    """d_x (theta + eps q^2)."""
    return (U.theta + eps * U.q * U.q).ddx()


def layer_coefficient(gamma: ExteriorField, rho: float, params: Parameters,
                      r0_gamma: ExteriorField = None) -> float:
    """sigma = (delta^2 [[d_x R0 Gamma]] + rho) / (alpha + 2 delta)."""
    delta = params.delta
    if r0_gamma is None:
        r0_gamma = get_solver(gamma.grid, delta).R0(gamma)
    return (delta**2 * jump_dx(r0_gamma) + rho) / (params.alpha + 2 * delta)


def apply_R_operator(gamma: ExteriorField, rho: float, params: Parameters) -> ExteriorField:
    """R(Gamma, rho) = R0 Gamma + sigma exp(-|x|_R / delta)."""
    delta = params.delta
    if not delta > 0:
        raise HyperbolicPathError("R(Gamma, rho) needs delta > 0; use rhs_hyperbolic")
    r0g = get_solver(gamma.grid, delta).R0(gamma)
    sigma = layer_coefficient(gamma, rho, params, r0g)
    return r0g + boundary_layer(sigma, delta, gamma.grid)


def dt_avg_q(U: State, params: Parameters) -> float:
    """d<q>/dt = -(delta^2 [[d_x R0 Gamma]] + [[theta]]) / (alpha + 2 delta)."""
    if not params.delta > 0:
        raise HyperbolicPathError("dt_avg_q needs delta > 0")
    return -layer_coefficient(compute_Gamma(U, params.epsilon), jump(U.theta), params)


def rhs(U: State, params: Parameters) -> RhsEvaluation:
    """L(U) = (-Phi, -R(Gamma, [[theta]]))."""
    delta = params.delta
    if not delta > 0:
        raise HyperbolicPathError("rhs needs delta > 0; use rhs_hyperbolic")
    eps = params.epsilon
    phi = compute_Phi(U, eps, params.c0)
    gamma = compute_Gamma(U, eps)
    solver = get_solver(U.grid, delta)
    r0g = solver.R0(gamma)
    sigma = layer_coefficient(gamma, jump(U.theta), params, r0g)
    dq = -(r0g + boundary_layer(sigma, delta, U.grid))
    # far-field Dirichlet data are held fixed
    dtheta = -phi
    dtheta.values_left[0] = 0.0
    dtheta.values_right[-1] = 0.0
    return RhsEvaluation(dtheta, dq, -sigma, gamma)


# ---------------------------------------------------------------------------
# delta = 0


@dataclass
class HyperbolicRhs:
    dtheta: ExteriorField
    dq: ExteriorField
    d_avg_q: float


def characteristic_speeds(theta: float, q: float, eps: float):
    """Eigenvalues eps q -+ sqrt(eps^2 q^2 + h) of the hyperbolic system, h = sqrt(1 + 2 eps theta)."""
    h = math.sqrt(max(1.0 + 2.0 * eps * theta, 0.0))
    root = math.sqrt(eps * eps * q * q + h)
    return eps * q - root, eps * q + root


def rhs_hyperbolic(U: State, params: Parameters, boundary_order: int = 1) -> HyperbolicRhs:
    """L0(U) = (-d_x q / (1 + eps c'(theta)), -d_x(theta + eps q^2)) with a characteristic closure.

    Interior nodes use centered differences. At x = +-R the discharge is the
    common value q_i, driven by alpha dq_i/dt = -[[theta]], and theta follows
    the outgoing characteristic relation
        d_t theta + lam d_t q = -lam (d_x theta + lam d_x q)
    with one-sided (upwind) differences of the given order. Far-field values are frozen.
    """
    eps = params.epsilon
    h = _height(U.theta, eps, U.t)
    grid = U.grid
    dx = grid.dx
    out_t, out_q = [], []
    for th, q, hh in ((U.theta.values_left, U.q.values_left, h.values_left),
                      (U.theta.values_right, U.q.values_right, h.values_right)):
        dth = np.zeros_like(th)
        dq = np.zeros_like(q)
        dth[1:-1] = -hh[1:-1] * (q[2:] - q[:-2]) / (2 * dx)
        g = th + eps * q * q
        dq[1:-1] = -(g[2:] - g[:-2]) / (2 * dx)
        out_t.append(dth)
        out_q.append(dq)

    dqi = -jump(U.theta) / params.alpha
    for sg in (1, -1):
        idx = 0 if sg == 1 else -1
        k = 1 if sg == 1 else 0
        th = U.theta.values_right if sg == 1 else U.theta.values_left
        q = U.q.values_right if sg == 1 else U.q.values_left
        lam_minus, lam_plus = characteristic_speeds(th[idx], q[idx], eps)
        lam = lam_minus if sg == 1 else lam_plus
        # one-sided derivative pointing into the segment
        if boundary_order == 1:
            w = np.array([-1.0, 1.0])
        else:
            w = np.array([-1.5, 2.0, -0.5])
        nodes = np.arange(len(w)) if sg == 1 else -1 - np.arange(len(w))
        dth_dx = sg * np.dot(w, th[nodes]) / dx
        dq_dx = sg * np.dot(w, q[nodes]) / dx
        out_q[k][idx] = dqi
        out_t[k][idx] = -lam * dqi - lam * (dth_dx + lam * dq_dx)
    return HyperbolicRhs(ExteriorField(grid, out_t[0], out_t[1]),
                         ExteriorField(grid, out_q[0], out_q[1]), dqi)


# ---------------------------------------------------------------------------
# trajectory residuals


def _uniform_dt(history: Sequence[State]) -> float:
    ts = np.array([u.t for u in history])
    dts = np.diff(ts)
    dt = float(dts[0])
    if not np.allclose(dts, dt, rtol=1e-9, atol=1e-14):
        raise InsufficientHistoryError("history must be sampled at uniform dt")
    if dt <= 0:
        raise InsufficientHistoryError("history times must increase")
    return dt


def transmission_residuals(history: Sequence[State], params: Parameters):
    """(max |[[q]]|, max |-delta^2 d_t [[d_x q]] + [[theta]] + alpha d_t <q>|) over a window.

    Time derivatives are centered differences, evaluated at the interior states of the window.
    """
    if len(history) < 3:
        raise InsufficientHistoryError("transmission residuals need at least 3 states")
    dt = _uniform_dt(history)
    r1 = max(abs(jump(u.q)) for u in history)
    jdq = [jump_dx(u.q) for u in history]
    avq = [average(u.q) for u in history]
    r2 = 0.0
    for i in range(1, len(history) - 1):
        dj = (jdq[i + 1] - jdq[i - 1]) / (2 * dt)
        da = (avq[i + 1] - avq[i - 1]) / (2 * dt)
        r2 = max(r2, abs(-params.delta**2 * dj + jump(history[i].theta) + params.alpha * da))
    return r1, r2


def y_ode_residual(history: Sequence[State], params: Parameters) -> ExteriorField:
    """Pointwise residual of the second-order-in-time equation satisfied by Y = d_x theta.

        a0 delta^2 Y'' + eps delta^2 a1 Y' + (1 + eps delta a2) Y = chi + eps psi

    with a0 = 1 + eps c'(theta), a1 = 2 d_t c'(theta), a2 = delta d_t^2 c'(theta),
    chi = -d_t q and psi = 2 q a0 d_t theta. Evaluated at the middle state of
    the window with three-point centered time differences.
    """
    if len(history) < 5:
        raise InsufficientHistoryError("the oscillation residual needs at least 5 states")
    dt = _uniform_dt(history)
    eps, delta = params.epsilon, params.delta
    m = len(history) // 2
    um, u0, up = history[m - 1], history[m], history[m + 1]
    Y = [u.theta.ddx() for u in (um, u0, up)]
    cp = [u.theta.map(lambda a: c_prime(a, eps)) for u in (um, u0, up)]
    Yt = (Y[2] - Y[0]) / (2 * dt)
    Ytt = (Y[2] - 2 * Y[1] + Y[0]) / dt**2
    cpt = (cp[2] - cp[0]) / (2 * dt)
    cptt = (cp[2] - 2 * cp[1] + cp[0]) / dt**2
    a0 = u0.theta.map(lambda a: one_plus_eps_cprime(a, eps))
    a1 = 2 * cpt
    a2 = delta * cptt
    chi = -(up.q - um.q) / (2 * dt)
    psi = 2 * u0.q * a0 * (up.theta - um.theta) / (2 * dt)
    return a0 * delta**2 * Ytt + eps * delta**2 * a1 * Yt + (1 + eps * delta * a2) * Y[1] - chi - eps * psi
