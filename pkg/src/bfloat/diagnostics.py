"""Energies, fluxes, the blow-up monitor, boundary-layer width and interior pressure."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.optimize import minimize_scalar

from .core_types import (
    ExteriorField,
    Parameters,
    State,
    _side,
    average,
    interior_nodes,
    one_plus_eps_cprime,
    theta_to_zeta,
)
from .dynamics import _uniform_dt
from .elliptic import one_sided_dx
from .errors import InsufficientHistoryError, InvalidStateError

NO_LAYER = float("nan")


@dataclass
class EnergyRecord:
    t: float
    e_ext: float
    e_int: float
    e_tot: float
    flux_jump: float
    m0: float
    layer_width: float
    frakE: float

    @staticmethod
    def header() -> str:
        return ",".join(f.name for f in fields(EnergyRecord))

    def csv_row(self) -> str:
        return ",".join(repr(float(getattr(self, f.name))) for f in fields(EnergyRecord))


def energy_exterior(zeta: ExteriorField, q: ExteriorField, params: Parameters,
                    dqdt: Optional[ExteriorField] = None) -> Tuple[float, Tuple[float, float]]:
    """Integral of e_ext = zeta^2/2 + eps zeta^3/6 + q^2/2 + mu (d_x q)^2/6 and flux traces (F(-R), F(R)).

    F_ext = q [zeta + 2 eps q^2/3 + eps zeta^2/2 - (mu/3) d_x d_t q]; the
    dispersive part needs dqdt. Without it the fluxes are NaN unless q vanishes
    at the contact point.
    """
    eps, mu = params.epsilon, params.mu
    dens = 0.5 * zeta * zeta + (eps / 6) * zeta * zeta * zeta + 0.5 * q * q
    # the gradient term uses cell differences, the quadratic form matched by the Helmholtz matrix
    e = dens.integrate() + (mu / 6) * q.gradient_energy()
    flux = []
    for sg in (-1, 1):
        qs, zs = q.trace(sg), zeta.trace(sg)
        if dqdt is not None:
            disp = one_sided_dx(dqdt, sg)
        else:
            disp = 0.0 if qs == 0 else float("nan")
        flux.append(qs * (zs + (2 * eps / 3) * qs * qs + 0.5 * eps * zs * zs - (mu / 3) * disp))
    return e, (flux[0], flux[1])


def energy_interior(avg_q: float, params: Parameters) -> float:
    """Integral over (-R, R) of zeta_w^2/2 + <q>^2/(2 h_w), same Simpson rule as alpha."""
    x = interior_nodes(params.R)
    zw = np.asarray(params.zeta_w(x), dtype=float)
    return float(simpson(0.5 * zw * zw, x=x)) + 0.5 * params.alpha * avg_q * avg_q


def linearized_energy(U: State, avg_q: float, ref: State, params: Parameters) -> float:
    """E_tot = 1/2 int (1 + eps c'(theta_ref)) theta^2 + q^2 + delta^2 (d_x q)^2 + alpha <q>^2 / 2."""
    a0 = ref.theta.map(lambda a: one_plus_eps_cprime(a, params.epsilon))
    dens = a0 * U.theta * U.theta + U.q * U.q
    return 0.5 * (dens.integrate() + params.delta**2 * U.q.gradient_energy()) + 0.5 * params.alpha * avg_q * avg_q


def blowup_monitor(U: State, eps: float) -> float:
    """max of |theta|, |q|, |d_x q|, 1/(1 + eps c'(theta)) and 1 + eps c'(theta) over the grid.

    The last term diverges when the water column empties (h -> 0); an
    inadmissible state returns +inf.
    """
    try:
        a0 = one_plus_eps_cprime(U.theta.concat(), eps)
    except InvalidStateError:
        return math.inf
    terms = [
        U.theta.max_abs(),
        U.q.max_abs(),
        U.q.ddx().max_abs(),
        float(np.max(1.0 / a0)),
        float(np.max(a0)),
    ]
    if not all(np.isfinite(terms)):
        return math.inf
    return max(terms)


def frak_E(history: Sequence[State], params: Parameters) -> float:
    """Sum over j <= 2 of ||d_t^j U||^2 + delta^2 ||d_t^j d_x q||^2 + alpha <d_t^j q>^2 at the window middle."""
    if len(history) < 5:
        raise InsufficientHistoryError("frak_E needs at least 5 states")
    dt = _uniform_dt(history)
    m = len(history) // 2
    um, u0, up = history[m - 1], history[m], history[m + 1]
    ders = [
        (u0.theta, u0.q),
        ((up.theta - um.theta) / (2 * dt), (up.q - um.q) / (2 * dt)),
        ((up.theta - 2 * u0.theta + um.theta) / dt**2, (up.q - 2 * u0.q + um.q) / dt**2),
    ]
    total = 0.0
    for th, q in ders:
        total += (th * th + q * q).integrate() + params.delta**2 * q.gradient_energy()
        total += params.alpha * average(q) ** 2
    return total


def layer_width(q: ExteriorField, side, delta: float, noise_floor: float = 1e-12) -> float:
    """Fitted e-folding length of the boundary layer carried by d_x q, or NaN if there is none.

    Over the first max(8, 4 delta/dx) nodes from the contact point, d_x q is
    fit by a + b s + c exp(-s/w): linear least squares in (a, b, c) for each w,
    and a bounded scalar search over log w in [dx/2, window]. The result is NaN
    when the signal is below the noise floor, when the exponential amplitude is
    negligible, or when w runs into the window bound (no localized layer).
    """
    sg = _side(side)
    grid = q.grid
    dx = grid.dx
    g = sg * q.ddx().boundary_first(sg)
    n = int(max(8, math.ceil(4 * delta / dx))) + 1
    n = min(n, grid.n_per_side)
    s = grid.s[:n]
    y = g[:n]
    if np.max(np.abs(y - y.mean())) < noise_floor:
        return NO_LAYER
    w_lo, w_hi = 0.5 * dx, s[-1]

    def fit(logw):
        w = math.exp(logw)
        A = np.column_stack([np.ones(n), s, np.exp(-s / w)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        r = A @ coef - y
        return float(r @ r), coef

    res = minimize_scalar(lambda lw: fit(lw)[0], bounds=(math.log(w_lo), math.log(w_hi)),
                          method="bounded", options={"xatol": 1e-6})
    w = math.exp(res.x)
    _, coef = fit(res.x)
    if abs(coef[2]) < noise_floor or w > 0.95 * w_hi:
        return NO_LAYER
    return w


def interior_pressure(avg_q_dot: float, U: State, params: Parameters, dqdt: ExteriorField,
                      n_nodes: int = 201):
    """P_i + zeta_w on [-R, R] from (1/h_w) d<q>/dt = -d_x (P_i + zeta_w).

    The constant is fixed by continuity of the energy flux at x = -R, i.e.
    P_i + zeta_w = zeta + 2 eps q^2/3 + eps zeta^2/2 - (mu/3) d_x d_t q there.
    Returns (x, profile).
    """
    eps, mu = params.epsilon, params.mu
    x = interior_nodes(params.R, n_nodes)
    hw = 1.0 + eps * np.asarray(params.zeta_w(x), dtype=float)
    cum = cumulative_simpson(1.0 / hw, x=x, initial=0.0)
    zeta_m = theta_to_zeta(U.theta.trace(-1), eps)
    qm = U.q.trace(-1)
    C = zeta_m + (2 * eps / 3) * qm * qm + 0.5 * eps * zeta_m**2 - (mu / 3) * one_sided_dx(dqdt, -1)
    return x, C - avg_q_dot * cum


def pressure_jump_residual(avg_q_dot: float, U: State, params: Parameters, dqdt: ExteriorField) -> float:
    """Reconstructed [[P_i + zeta_w]] minus [[zeta + eps zeta^2/2 - (mu/3) d_x d_t q]]."""
    _, prof = interior_pressure(avg_q_dot, U, params, dqdt)
    eps, mu = params.epsilon, params.mu
    rhs_side = []
    for sg in (1, -1):
        z = theta_to_zeta(U.theta.trace(sg), eps)
        rhs_side.append(z + 0.5 * eps * z * z - (mu / 3) * one_sided_dx(dqdt, sg))
    return (prof[-1] - prof[0]) - (rhs_side[0] - rhs_side[1])
