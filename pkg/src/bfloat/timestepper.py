"""Explicit RK4 integration of the ODE form, run orchestration and termination policy."""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core_types import ExteriorField, GridSpec, Parameters, State, average, jump
from .diagnostics import (
    EnergyRecord,
    blowup_monitor,
    energy_exterior,
    energy_interior,
    frak_E,
    layer_width,
)
from .dynamics import characteristic_speeds, rhs, rhs_hyperbolic, transmission_residuals
from .errors import BlowUpError, InsufficientHistoryError, InvalidStateError

log = logging.getLogger(__name__)

COMPLETED = "completed"
BLOWUP = "blow-up"
MAX_HALVINGS = 40


@dataclass
class RunConfig:
    """Settings of one simulation.

    t_final defaults to tau/(eps + delta^2); dt defaults to cfl*dx/c_max with
    c_max the largest characteristic speed of the initial data.
    """

    params: Parameters
    grid: GridSpec
    t_final: Optional[float] = None
    dt: Optional[float] = None
    tau: float = 0.5
    cfl: float = 0.5
    snapshot_stride: int = 0
    monitor_ceiling: float = 1e3
    monitor_growth: float = 1.5
    mode: str = "dispersive"
    allow_coarse: bool = False
    hyperbolic_boundary_order: int = 1

    def __post_init__(self):
        if self.mode not in ("dispersive", "hyperbolic"):
            raise ValueError(f"mode must be dispersive or hyperbolic, got {self.mode!r}")
        if self.mode == "dispersive":
            if not self.params.delta > 0:
                raise ValueError("dispersive mode needs delta > 0")
            self.grid.check_resolution(self.params.delta, self.allow_coarse)

    def resolved_t_final(self) -> float:
        if self.t_final is not None:
            return float(self.t_final)
        return self.tau / (self.params.epsilon + self.params.delta**2)

    def resolved_dt(self, U: State) -> float:
        if self.dt is not None:
            return float(self.dt)
        eps = self.params.epsilon
        cmax = 1.0
        for th, q in zip(U.theta.concat(), U.q.concat()):
            lo, hi = characteristic_speeds(th, q, eps)
            cmax = max(cmax, abs(lo), abs(hi))
        return self.cfl * self.grid.dx / cmax


@dataclass
class RunResult:
    status: str
    message: str
    t_end: float
    steps: int
    dt: float
    records: List[EnergyRecord]
    snapshots: List[State]
    transmission: List[tuple] = field(default_factory=list)
    final: Optional[State] = None


def _vector_field(mode: str, params: Parameters, boundary_order: int = 1) -> Callable:
    if mode == "dispersive":
        def f(U):
            ev = rhs(U, params)
            return ev.dtheta, ev.dq
    else:
        def f(U):
            ev = rhs_hyperbolic(U, params, boundary_order)
            return ev.dtheta, ev.dq
    return f


def rk4_step(f: Callable, U: State, dt: float, k1=None) -> State:
    """Classical four-stage step for dU/dt = f(U); k1 may be supplied if already known."""
    if k1 is None:
        k1 = f(U)
    th, q = U.theta, U.q
    h2 = 0.5 * dt
    k2 = f(State(U.t + h2, th + h2 * k1[0], q + h2 * k1[1]))
    k3 = f(State(U.t + h2, th + h2 * k2[0], q + h2 * k2[1]))
    k4 = f(State(U.t + dt, th + dt * k3[0], q + dt * k3[1]))
    w = dt / 6.0
    theta = th + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    qn = q + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    return State(U.t + dt, theta, qn)


def step_rk4(U: State, dt: float, params: Parameters, mode: str = "dispersive") -> State:
    return rk4_step(_vector_field(mode, params), U, dt)


def _record(U: State, params: Parameters, mode: str, dqdt: Optional[ExteriorField]) -> EnergyRecord:
    eps = params.epsilon
    try:
        zeta = U.zeta(eps)
    except InvalidStateError:
        nan = float("nan")
        return EnergyRecord(U.t, nan, nan, nan, nan, math.inf, nan, nan)
    e_ext, (fm, fp) = energy_exterior(zeta, U.q, params, dqdt)
    e_int = energy_interior(average(U.q), params)
    if mode == "dispersive":
        lw = layer_width(U.q, 1, params.delta)
    else:
        lw = float("nan")
    return EnergyRecord(U.t, e_ext, e_int, e_ext + e_int, fp - fm, blowup_monitor(U, eps), lw, float("nan"))


def _admissible(U: Optional[State], eps: float) -> bool:
    if U is None:
        return False
    th, q = U.theta.concat(), U.q.concat()
    if not (np.all(np.isfinite(th)) and np.all(np.isfinite(q))):
        return False
    return bool(np.all(1.0 + 2.0 * eps * th > 0))


def run(config: RunConfig, U_in: State, progress: Optional[Callable] = None) -> RunResult:
    """Integrate from U_in to t_final, or until the blow-up monitor reaches its ceiling.

    Steps are uniform, except that a step leaving the admissible set is
    retried with half the step size (down to dt * 2**-MAX_HALVINGS); so is a
    step that multiplies the blow-up monitor by more than monitor_growth. The
    reduced size is then kept. This resolves the approach to a blow-up time
    so that the run ends through the monitor rather than a failed step.

    One EnergyRecord per accepted step (frakE is filled once a centered
    5-state window at uniform spacing is available), snapshots every
    snapshot_stride steps plus the final state, and transmission residuals
    over sliding 3-state windows at uniform spacing.
    """
    params = config.params
    mode = config.mode
    eps = params.epsilon
    U_in.check(params)
    t_final = config.resolved_t_final()
    dt = config.resolved_dt(U_in)
    nsteps = max(1, int(math.ceil(t_final / dt - 1e-9)))
    dt = t_final / nsteps
    f = _vector_field(mode, params, config.hyperbolic_boundary_order)

    records: List[EnergyRecord] = []
    snapshots: List[State] = [U_in.copy()]
    window: deque = deque(maxlen=5)
    trans: List[tuple] = []
    status, message = COMPLETED, f"reached t={t_final:.6g}"
    U = U_in.copy()
    U.t = 0.0 if U.t is None else U.t
    steps = 0
    h = dt
    reduced = False

    def push(state: State):
        window.append(state)
        if len(window) >= 3:
            last3 = list(window)[-3:]
            try:
                if mode == "dispersive":
                    r1, r2 = transmission_residuals(last3, params)
                else:
                    r1, r2 = max(abs(jump(s.q)) for s in last3), float("nan")
                trans.append((last3[1].t, r1, r2))
            except InsufficientHistoryError:
                pass
        if len(window) == 5:
            idx = len(records) - 3
            if idx >= 0:
                try:
                    records[idx].frakE = frak_E(list(window), params)
                except InsufficientHistoryError:
                    pass

    while True:
        try:
            k1 = f(U)
            dqdt = k1[1] if mode == "dispersive" else None
        except BlowUpError:
            k1, dqdt = None, None
        rec = _record(U, params, mode, dqdt)
        records.append(rec)
        push(U)
        if progress is not None:
            progress(U, rec)
        if not (rec.m0 < config.monitor_ceiling):
            status = BLOWUP
            message = f"blow-up criterion tripped at t={U.t:.6g} (monitor {rec.m0:.4g} >= {config.monitor_ceiling:g})"
            break
        if t_final - U.t <= 1e-9 * dt:
            break
        if k1 is None:
            status, message = BLOWUP, f"blow-up criterion tripped at t={U.t:.6g} (inadmissible state)"
            break
        Unew = None
        for _ in range(MAX_HALVINGS + 1):
            h = min(h, t_final - U.t)
            try:
                Unew = rk4_step(f, U, h, k1)
            except BlowUpError:
                Unew = None
            if _admissible(Unew, eps) and blowup_monitor(Unew, eps) <= config.monitor_growth * max(rec.m0, 1.0):
                break
            Unew = None
            h *= 0.5
            reduced = True
        if Unew is None:
            status = BLOWUP
            message = f"blow-up criterion tripped at t={U.t:.6g} (no admissible step down to dt={h:.3g})"
            break
        steps += 1
        # uniform steps land exactly on multiples of dt
        Unew.t = steps * dt if not reduced else U.t + h
        U = Unew
        if config.snapshot_stride and steps % config.snapshot_stride == 0 and t_final - U.t > 1e-9 * dt:
            snapshots.append(U.copy())

    if snapshots[-1].t != U.t:
        snapshots.append(U.copy())
    log.info("%s: %s", status, message)
    return RunResult(status, message, U.t, steps, dt, records, snapshots, trans, U)
