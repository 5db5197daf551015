import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from bfloat.core_types import ExteriorField, GridSpec, ObstacleProfile, Parameters, State, average
from bfloat.diagnostics import (
    EnergyRecord,
    blowup_monitor,
    energy_exterior,
    energy_interior,
    frak_E,
    interior_pressure,
    layer_width,
    linearized_energy,
    pressure_jump_residual,
)
from bfloat.dynamics import rhs
from bfloat.elliptic import boundary_layer
from bfloat.errors import InsufficientHistoryError
from conftest import smooth_state


def test_energy_exterior_rest(grid, params):
    z = ExteriorField.zeros(grid)
    e, flux = energy_exterior(z, z, params)
    assert e == 0.0 and flux == (0.0, 0.0)


def test_energy_exterior_kinetic_only(grid):
    p = Parameters(0.0, mu=0.0)
    q = ExteriorField.from_function(grid, lambda x: np.exp(-(np.abs(x) - 4) ** 2))
    e, _ = energy_exterior(ExteriorField.zeros(grid), q, p)
    assert e == pytest.approx(0.5 * (q * q).integrate(), rel=1e-14)
    assert e == pytest.approx(math.sqrt(math.pi / 2), rel=1e-6)


def test_energy_exterior_dispersive_term_second_quadrature():
    p = Parameters(0.3, mu=0.12)
    win = lambda s: np.sin(s) * np.exp(-((s - 3) / 1.5) ** 2)
    dwin = lambda s: np.cos(s) * np.exp(-((s - 3) / 1.5) ** 2) - np.sin(s) * 2 * (s - 3) / 2.25 * np.exp(-((s - 3) / 1.5) ** 2)
    zf = lambda s: 0.2 * np.exp(-((s - 4) ** 2))
    dens = lambda s: 0.5 * zf(s) ** 2 + 0.3 / 6 * zf(s) ** 3 + 0.5 * win(s) ** 2 + 0.12 / 6 * dwin(s) ** 2
    ref = 2 * quad(dens, 0, 10, limit=200)[0]
    errs = []
    for dx in (0.02, 0.01):
        g = GridSpec.with_spacing(1.0, 11.0, dx)
        q = ExteriorField.from_boundary_first(g, win(g.s), win(g.s))
        z = ExteriorField.from_boundary_first(g, zf(g.s), zf(g.s))
        errs.append(abs(energy_exterior(z, q, p)[0] - ref))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)


def test_energy_interior_examples():
    assert energy_interior(0.0, Parameters(0.1, delta=0.1)) == 0.0
    p = Parameters(0.1, delta=0.1)
    assert p.alpha == pytest.approx(2.0)
    assert energy_interior(1.0, p) == pytest.approx(1.0)
    p = Parameters(0.5, delta=0.1, zeta_w=ObstacleProfile("flat", 1.0))
    assert p.alpha == pytest.approx(4 / 3)
    assert energy_interior(2.0, p) == pytest.approx(1 + 8 / 3, rel=1e-9)


def test_linearized_energy_examples(grid):
    p = Parameters(0.0, delta=0.2)
    rest = State.rest(grid)
    assert linearized_energy(rest, 0.0, rest, p) == 0.0
    U = smooth_state(grid, 2)
    want = 0.5 * ((U.theta * U.theta + U.q * U.q).integrate() + 0.04 * U.q.gradient_energy()) + p.alpha * 0.09 / 2
    assert linearized_energy(U, 0.3, rest, p) == pytest.approx(want, rel=1e-13)


@given(st.integers(0, 1000))
def test_linearized_energy_positive(seed):
    g = GridSpec.with_spacing(1.0, 6.0, 0.05)
    p = Parameters(0.2, delta=0.1)
    U, ref = smooth_state(g, seed), smooth_state(g, seed + 7, amp=0.5)
    assert linearized_energy(U, 0.1, ref, p) > 0


def test_blowup_monitor_examples(grid):
    assert blowup_monitor(State.rest(grid), 0.3) == 1.0
    eps = 0.5
    th = (10.0**2 - 1) / (2 * eps)  # 1 + eps c' = 1/h = 0.1
    U = State(0.0, ExteriorField.constant(grid, th), ExteriorField.zeros(grid))
    assert blowup_monitor(U, eps) >= 10.0
    vals = []
    for h in (0.5, 0.1, 0.01, 1e-4):
        th = (h * h - 1) / (2 * eps)
        vals.append(blowup_monitor(State(0.0, ExteriorField.constant(grid, th), ExteriorField.zeros(grid)), eps))
    assert all(b > a for a, b in zip(vals, vals[1:])) and vals[-1] >= 0.99e4
    bad = State(0.0, ExteriorField.constant(grid, -2.0), ExteriorField.zeros(grid))
    assert blowup_monitor(bad, eps) == math.inf


def test_frak_E_examples(grid, params):
    hist = [State.rest(grid, 0.1 * i) for i in range(5)]
    assert frak_E(hist, params) == 0.0
    U = smooth_state(grid, 4)
    static = [State(0.1 * i, U.theta, U.q) for i in range(5)]
    want = (U.theta * U.theta + U.q * U.q).integrate() + 0.01 * U.q.gradient_energy() + params.alpha * average(U.q) ** 2
    assert frak_E(static, params) == pytest.approx(want, rel=1e-13)
    with pytest.raises(InsufficientHistoryError):
        frak_E(hist[:4], params)
    with pytest.raises(InsufficientHistoryError):
        frak_E(hist[:4] + [State.rest(grid, 0.7)], params)


def test_layer_width_examples():
    g = GridSpec.with_spacing(1.0, 11.0, 0.01)
    # d_x q = exp(-s/0.2) on the right
    q = -0.2 * boundary_layer(1.0, 0.2, g)
    assert layer_width(q, 1, 0.2) == pytest.approx(0.2, rel=0.05)
    smooth = ExteriorField.from_function(g, lambda x: 0.1 * x)
    assert math.isnan(layer_width(smooth, 1, 0.2))
    assert math.isnan(layer_width(ExteriorField.zeros(g), -1, 0.2))


def test_interior_pressure_examples(grid):
    p = Parameters(0.0, delta=0.1)
    U = State.rest(grid)
    z = ExteriorField.zeros(grid)
    x, prof = interior_pressure(0.0, U, p, z)
    assert np.all(prof == 0.0)
    assert pressure_jump_residual(0.0, U, p, z) == 0.0
    x, prof = interior_pressure(1.0, U, p, z)
    assert np.allclose(prof, -(x + 1.0), atol=1e-12)
    assert prof[0] - prof[-1] == pytest.approx(p.alpha)


def test_pressure_jump_identity_converges():
    p = Parameters(0.09, delta=0.1)
    res = []
    for dx in (0.02, 0.01):
        g = GridSpec.with_spacing(1.0, 8.0, dx)
        U = smooth_state(g, 3)
        ev = rhs(U, p)
        res.append(abs(pressure_jump_residual(ev.d_avg_q, U, p, ev.dq)))
    assert res[1] < 1e-4
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.25)


def test_energy_record_csv():
    r = EnergyRecord(0.0, 1.0, 2.0, 3.0, 0.0, 1.0, float("nan"), float("nan"))
    assert EnergyRecord.header() == "t,e_ext,e_int,e_tot,flux_jump,m0,layer_width,frakE"
    assert r.csv_row().split(",")[3] == "3.0"
