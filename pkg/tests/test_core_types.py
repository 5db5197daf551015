import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from bfloat.core_types import (
    ExteriorField,
    GridSpec,
    ObstacleProfile,
    Parameters,
    State,
    abs_R,
    alpha_from_obstacle,
    average,
    c_of_theta,
    c_prime,
    jump,
    one_plus_eps_cprime,
    sobolev_norm,
    theta_to_zeta,
    zeta_to_theta,
)
from bfloat.errors import DomainError, InvalidStateError, ObstacleTouchesBottomError, ResolutionError


def test_abs_R_examples():
    assert abs_R(1.5, 1.0) == pytest.approx(0.5)
    assert abs_R(-2.0, 1.0) == pytest.approx(1.0)
    assert abs_R(2.3, 2.0) == pytest.approx(0.3)
    assert abs_R(1.0, 1.0) == 0.0
    with pytest.raises(DomainError):
        abs_R(0.5, 1.0)


def test_c_of_theta_examples():
    assert c_of_theta(0.0, 0.7) == 0.0
    c = c_of_theta(0.5, 1.0)
    assert c == pytest.approx(-0.085786437626905, abs=1e-12)
    assert 0.5 + c == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
    # at eps = 0 the correction is -theta^2/2 but zeta = theta
    assert c_of_theta(0.3, 0.0) == pytest.approx(-0.045)
    assert theta_to_zeta(0.3, 0.0) == 0.3
    with pytest.raises(InvalidStateError):
        c_of_theta(-1.0, 1.0)


def test_zeta_theta_examples():
    assert zeta_to_theta(0.2, 0.5) == pytest.approx(0.21)
    assert theta_to_zeta(0.21, 0.5) == pytest.approx(0.2, abs=1e-14)
    assert zeta_to_theta(0.37, 0.0) == 0.37


def test_c_prime_matches_finite_difference():
    for eps in (0.1, 0.5, 1.0):
        for th in (-0.3, 0.0, 0.4, 2.0):
            h = 1e-6
            fd = (c_of_theta(th + h, eps) - c_of_theta(th - h, eps)) / (2 * h)
            assert c_prime(th, eps) == pytest.approx(fd, abs=1e-8)
            assert one_plus_eps_cprime(th, eps) == pytest.approx(1.0 / math.sqrt(1 + 2 * eps * th))


@given(st.floats(-0.9, 5.0), st.floats(0.0, 1.0))
def test_round_trip(z, eps):
    if 1.0 + eps * z <= 0:
        return
    assert theta_to_zeta(zeta_to_theta(z, eps), eps) == pytest.approx(z, abs=1e-12)


@given(st.floats(-0.45, 5.0), st.floats(0.01, 1.0))
def test_c_against_root_finder(th, eps):
    if 1 + 2 * eps * th <= 1e-9:
        return
    # root of zeta + eps zeta^2/2 = theta on the branch through zeta = theta at eps -> 0
    z = brentq(lambda z: z + 0.5 * eps * z * z - th, -1.0 / eps, max(th, 0.0) + 1.0, xtol=1e-15)
    assert th + eps * c_of_theta(th, eps) == pytest.approx(z, abs=1e-10)


def _field(grid, left, right):
    return ExteriorField(grid, np.full(grid.n_per_side, left, dtype=float), np.full(grid.n_per_side, right, dtype=float))


def test_jump_average_examples(grid):
    f = _field(grid, 3.0, 3.0)
    assert jump(f) == 0.0 and average(f) == 3.0
    g = _field(grid, -1.0, 1.0)
    assert jump(g) == 2.0 and average(g) == 0.0
    x = ExteriorField.from_function(grid, lambda x: x)
    assert jump(x) == pytest.approx(2.0) and average(x) == pytest.approx(0.0)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
def test_jump_average_linear(a, b, seed):
    g = GridSpec(1.0, 3.0, 8)
    rng = np.random.default_rng(seed)
    f = ExteriorField(g, rng.normal(size=8), rng.normal(size=8))
    h = ExteriorField(g, rng.normal(size=8), rng.normal(size=8))
    assert jump(a * f + b * h) == pytest.approx(a * jump(f) + b * jump(h), abs=1e-12)
    assert average(a * f + b * h) == pytest.approx(a * average(f) + b * average(h), abs=1e-12)
    c = ExteriorField.constant(g, a)
    assert jump(c) == 0 and average(c) == pytest.approx(a)


def test_traces_are_endpoint_nodes(grid):
    f = ExteriorField.from_function(grid, lambda x: x**3)
    assert f.trace(1) == f.values_right[0]
    assert f.trace(-1) == f.values_left[-1]
    assert grid.x_right[0] == 1.0 and grid.x_left[-1] == -1.0
    assert grid.x_right[-1] == 11.0 and grid.x_left[0] == -11.0


def test_alpha_examples():
    assert alpha_from_obstacle(ObstacleProfile(), 0.3, 1.0) == pytest.approx(2.0)
    assert alpha_from_obstacle(ObstacleProfile("flat", value=1.0), 0.5, 1.0) == pytest.approx(4 / 3)
    a = alpha_from_obstacle(ObstacleProfile("poly", coeffs=(0.0, 0.0, 1.0)), 1.0, 1.0)
    assert a == pytest.approx(math.pi / 2, abs=1e-8)
    with pytest.raises(ObstacleTouchesBottomError):
        alpha_from_obstacle(ObstacleProfile("flat", value=-0.95), 1.0, 1.0)


def test_alpha_quadrature_order():
    prof = ObstacleProfile("poly", coeffs=(0.0, 0.0, 1.0))
    errs = [abs(alpha_from_obstacle(prof, 1.0, 1.0, n_nodes=n) - math.pi / 2) for n in (11, 21, 41)]
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(rates) > 3.7


def test_table_obstacle_roundtrip():
    prof = ObstacleProfile("table", table_x=(-1.0, 0.0, 1.0), table_y=(0.0, 0.5, 0.0))
    assert ObstacleProfile.from_dict(prof.to_dict()) == prof
    assert float(prof(np.array([0.0]))[0]) == pytest.approx(0.5)


def test_parameters_invariants():
    p = Parameters(0.09, mu=0.09)
    assert p.delta**2 == pytest.approx(p.mu / 3, rel=1e-15)
    assert Parameters(0.1, delta=0.2).mu == pytest.approx(0.12)
    with pytest.raises(ValueError):
        Parameters(0.1, mu=0.3, delta=0.2)
    with pytest.raises(ValueError):
        Parameters(0.1)


def test_grid_resolution_rule():
    g = GridSpec.with_spacing(1.0, 5.0, 0.05)
    g.check_resolution(0.2)
    with pytest.raises(ResolutionError):
        g.check_resolution(0.1)
    g.check_resolution(0.1, allow_coarse=True)


def test_state_check(grid, params):
    st_ = State.rest(grid)
    st_.check(params)
    bad = State(0.0, st_.theta, st_.q + ExteriorField(grid, np.zeros(grid.n_per_side), np.full(grid.n_per_side, 1e-6)))
    with pytest.raises(InvalidStateError):
        bad.check(params)
    cav = State(0.0, ExteriorField.constant(grid, -10.0), st_.q)
    with pytest.raises(InvalidStateError):
        cav.check(params)


def test_reflection(grid):
    f = ExteriorField.from_function(grid, lambda x: np.exp(-(x - 3) ** 2))
    r = f.reflect()
    assert np.allclose(r.values_left, f.values_right[::-1])
    assert np.allclose(r.reflect().concat(), f.concat())


def test_sobolev_norm_of_sine():
    g = GridSpec.with_spacing(1.0, 1.0 + 2 * math.pi * 4, 0.005)
    f = ExteriorField.from_function(g, lambda x: np.sin(x - 1.0))
    # four full periods per side: every derivative carries L2 mass 4 pi per side
    m = 8 * math.pi
    assert sobolev_norm(f, 0) == pytest.approx(math.sqrt(m), rel=1e-4)
    assert sobolev_norm(f, 2) == pytest.approx(math.sqrt(3 * m), rel=1e-3)
