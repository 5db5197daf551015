"""Initial data families.

Every family is given by closed-form profiles of x on each segment so that
nodal values and, for analytic profiles, exact boundary derivatives are
both available.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .core_types import ExteriorField, GridSpec, Parameters, State

COMPATIBLE_KINDS = ("rest", "pulse-right", "pulse-left", "colliding-pulses", "symmetric-touching")
ALL_KINDS = COMPATIBLE_KINDS + ("incompatible-jump", "cavitation", "random-smooth")


def _phi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_cutoff(s, margin: float, ramp: float = 1.0):
    """C-infinity function of the distance s: 0 for s <= margin, 1 for s >= margin + ramp."""
    a = _phi((np.asarray(s, dtype=float) - margin) / ramp)
    b = _phi((margin + ramp - np.asarray(s, dtype=float)) / ramp)
    return a / (a + b)


@dataclass
class Scenario:
    """Profiles theta(x), q(x) per side; analytic profiles also expose exact derivatives."""

    kind: str
    theta_right: Callable
    theta_left: Callable
    q_right: Callable
    q_left: Callable
    analytic: bool = False
    options: Dict = field(default_factory=dict)

    def state(self, grid: GridSpec, t: float = 0.0) -> State:
        th = ExteriorField(grid, self.theta_left(grid.x_left), self.theta_right(grid.x_right))
        q = ExteriorField(grid, self.q_left(grid.x_left), self.q_right(grid.x_right))
        return State(t, th, q)

    def boundary_derivatives(self, R: float, k_max: int, radius: float = 0.25, npts: int = 64):
        """Exact d_x^k of theta and q at +R and -R (k = 0..k_max) by Cauchy integrals.

        Returns dict keyed by ("theta"|"q", +1|-1) of arrays of length k_max + 1.
        """
        if not self.analytic:
            raise ValueError(f"scenario {self.kind!r} has non-analytic profiles")
        out = {}
        for name, fr, fl in (("theta", self.theta_right, self.theta_left), ("q", self.q_right, self.q_left)):
            out[(name, 1)] = analytic_derivatives(fr, R, k_max, radius, npts)
            out[(name, -1)] = analytic_derivatives(fl, -R, k_max, radius, npts)
        return out


def analytic_derivatives(func: Callable, x0: float, k_max: int, radius: float = 0.25, npts: int = 64):
    """d^k func(x0) for k <= k_max from the trapezoid rule on a circle (Cauchy formula)."""
    z = x0 + radius * np.exp(2j * np.pi * np.arange(npts) / npts)
    vals = np.asarray(func(z), dtype=complex)
    coef = np.fft.fft(vals) / npts
    return np.array([(coef[k] / radius**k).real * math.factorial(k) for k in range(k_max + 1)])


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def _zero_c(x):
    return 0.0 * x


def make_scenario(kind: str, params: Parameters, **opts) -> Scenario:
    R = params.R
    if kind == "rest":
        return Scenario(kind, _zero_c, _zero_c, _zero_c, _zero_c, analytic=True)

    if kind in ("pulse-right", "pulse-left", "colliding-pulses"):
        A = float(opts.get("amplitude", 0.1))
        c = float(opts.get("center_offset", 5.0))
        w = float(opts.get("width", 1.0))
        margin = float(opts.get("margin", 1.0))
        direction = float(opts.get("direction", 1.0))

        def bump(s):
            return A * np.exp(-((s - c) / w) ** 2) * smooth_cutoff(s, margin)

        if kind == "pulse-right":
            return Scenario(kind, lambda x: bump(x - R), _zero, lambda x: direction * bump(x - R), _zero, options=opts)
        if kind == "pulse-left":
            return Scenario(kind, _zero, lambda x: bump(-x - R), _zero, lambda x: -direction * bump(-x - R), options=opts)
        # symmetric pair travelling towards the obstacle
        return Scenario(kind, lambda x: bump(x - R), lambda x: bump(-x - R),
                        lambda x: -bump(x - R), lambda x: bump(-x - R), options=opts)

    if kind == "symmetric-touching":
        # theta even, q odd about x = 0 and about each contact point
        A = float(opts.get("amplitude", 0.1))
        B = float(opts.get("discharge", 0.1))
        w = float(opts.get("width", 1.5))

        def th_r(x):
            s = x - R
            return A * np.exp(-(s / w) ** 2)

        def q_r(x):
            s = x - R
            return B * (s / w) * np.exp(-(s / w) ** 2)

        return Scenario(kind, th_r, lambda x: th_r(-x), q_r, lambda x: -q_r(-x), analytic=True, options=opts)

    if kind == "incompatible-jump":
        A = float(opts.get("amplitude", 0.1))
        w = float(opts.get("width", 1.5))
        return Scenario(kind, lambda x: A * np.exp(-((x - R) / w) ** 2), _zero_c, _zero_c, _zero_c,
                        analytic=True, options=opts)

    if kind == "cavitation":
        # a strongly diverging discharge drains the water column around x = R + c
        B = float(opts.get("amplitude", 3.0))
        c = float(opts.get("center_offset", 10.0))
        w = float(opts.get("width", 3.0))

        def q_r(x):
            s = x - R - c
            return B * s * np.exp(-(s / w) ** 2) * smooth_cutoff(x - R, 1.0)

        return Scenario(kind, _zero_c, _zero_c, q_r, _zero_c, options=opts)

    if kind == "random-smooth":
        seed = int(opts.get("seed", 0))
        amp = float(opts.get("amplitude", 0.1))
        rng = np.random.default_rng(seed)
        nb = 4
        cen = rng.uniform(0.0, 6.0, size=(4, nb))
        wid = rng.uniform(0.5, 2.0, size=(4, nb))
        am = rng.uniform(-amp, amp, size=(4, nb))

        def prof(i, sgn):
            def f(x):
                s = sgn * np.asarray(x) - R
                return sum(am[i, m] * np.exp(-((s - cen[i, m]) / wid[i, m]) ** 2) for m in range(nb))
            return f

        qr, ql = prof(2, 1), prof(3, -1)
        # make the discharge continuous across the obstacle
        shift = 0.5 * (qr(np.array([R]))[0] - ql(np.array([-R]))[0])
        return Scenario(kind, prof(0, 1), prof(1, -1), lambda x: qr(x) - shift * np.exp(-(np.asarray(x) - R) ** 2),
                        lambda x: ql(x) + shift * np.exp(-(np.asarray(x) + R) ** 2), analytic=True, options=opts)

    raise ValueError(f"unknown scenario kind {kind!r}; known: {', '.join(ALL_KINDS)}")


def initial_state(kind: str, params: Parameters, grid: GridSpec, **opts) -> State:
    return make_scenario(kind, params, **opts).state(grid)
