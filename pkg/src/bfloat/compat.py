"""Time-derivative ladders of the initial data and the two families of compatibility checks.

The exact ladder U_j = d_t^j U at t = 0 is built from the nonlocal recursion
theta_{j+1} = -Phi_j, q_{j+1} = -R(Gamma_j, [[theta_j]]). The Taylor ladder
replaces R by its truncated Neumann series and works only with boundary
Taylor coefficients, so it stays defined at delta = 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from .core_types import ExteriorField, GridSpec, Parameters, State, average, jump, sobolev_norm, state_sobolev_norm
from .dynamics import apply_R_operator
from .elliptic import TraceSet, residual_AB, x_derivative_trace
from .errors import BlowUpError, HyperbolicPathError, InvalidStateError, TraceOrderError
from .scenarios import COMPATIBLE_KINDS, make_scenario
from .series import jet_dx, jet_mul, jet_sqrt, series_mul, series_sqrt

DEFAULT_ORDER = 5
DEFAULT_ATOL = 1e-12


# ---------------------------------------------------------------------------
# exact ladder


@dataclass
class DerivativeLadder:
    """theta_j, q_j (j = 0..n+1) and Gamma_j (j = 0..n) as fields."""

    n: int
    theta: List[ExteriorField]
    q: List[ExteriorField]
    gamma: List[ExteriorField]
    avg_q: List[float]
    delta: float

    @property
    def entries(self):
        return list(zip(self.theta, self.q))


def exact_ladder(U_in: State, n: int, params: Parameters) -> DerivativeLadder:
    """Apply the nonlocal recursion n+1 times.

    Time derivatives of the products in Phi and Gamma are expanded with
    truncated series of fields (Leibniz rule), never by time stepping.
    """
    if not params.delta > 0:
        raise HyperbolicPathError("the exact ladder needs delta > 0; use taylor_ladder at delta = 0")
    U_in.check(params)
    eps = params.epsilon
    grid = U_in.grid
    N = 2 * grid.n_per_side
    A = np.zeros((n + 2, N))  # theta_j / j!
    B = np.zeros((n + 2, N))  # q_j / j!
    A[0] = U_in.theta.concat()
    B[0] = U_in.q.concat()
    dq = []
    gammas = []

    def field(arr):
        return ExteriorField.from_concat(grid, arr)

    for j in range(n + 1):
        g = 2.0 * eps * A[: j + 1]
        g[0] += 1.0
        S = series_sqrt(g)
        dq.append(field(B[j]).ddx().concat())
        phi = sum(dq[i] * S[j - i] for i in range(j + 1))
        G = A[j] + eps * series_mul(B[: j + 1], B[: j + 1])[j]
        gam = field(G).ddx()
        gammas.append(gam * math.factorial(j))
        A[j + 1] = -phi / (j + 1)
        # far-field values stay fixed, as in the evolution
        A[j + 1, 0] = 0.0
        A[j + 1, -1] = 0.0
        B[j + 1] = -apply_R_operator(gam, jump(field(A[j])), params).concat() / (j + 1)

    theta = [field(A[j] * math.factorial(j)) for j in range(n + 2)]
    q = [field(B[j] * math.factorial(j)) for j in range(n + 2)]
    return DerivativeLadder(n, theta, q, gammas, [average(f) for f in q], params.delta)


# ---------------------------------------------------------------------------
# Taylor ladder


@dataclass
class TaylorLadder:
    """Approximate boundary Taylor data hat U_{j,k} = (theta, q) for j + k <= n at x = +R and -R.

    Arrays are indexed [j, k] and hold plain derivatives d_t^j d_x^k.
    """

    n: int
    delta: float
    theta_hat: Dict[int, np.ndarray]
    q_hat: Dict[int, np.ndarray]
    gamma_hat: Dict[int, np.ndarray] = field(default_factory=dict)


def boundary_derivatives(U_in: State, n: int) -> Dict:
    """One-sided d_x^k of theta and q at +-R for k <= n, accuracy max(2, n - k)."""
    out = {}
    for name, f in (("theta", U_in.theta), ("q", U_in.q)):
        for sg in (1, -1):
            out[(name, sg)] = np.array([x_derivative_trace(f, sg, k, max(2, n - k)) if k else f.trace(sg)
                                        for k in range(n + 1)])
    return out


def _taylor_side(th0: np.ndarray, q0: np.ndarray, n: int, eps: float, delta: float):
    fact = np.array([math.factorial(k) for k in range(n + 2)], dtype=float)
    Tt = np.zeros((n + 1, n + 1))
    Tq = np.zeros((n + 1, n + 1))
    Tt[0, :] = th0[: n + 1] / fact[: n + 1]
    Tq[0, :] = q0[: n + 1] / fact[: n + 1]
    Tg = np.zeros((n + 1, n + 1))
    if 1.0 + 2.0 * eps * Tt[0, 0] <= 0:
        raise InvalidStateError("1 + 2 eps theta <= 0 at the contact point")
    for j in range(n):
        g = 2.0 * eps * Tt
        g[0, 0] += 1.0
        S = jet_sqrt(g)
        phi = jet_mul(jet_dx(Tq), S)
        gam = jet_dx(Tt + eps * jet_mul(Tq, Tq))
        Tg[j] = gam[j]
        for k in range(n - j):
            Tt[j + 1, k] = -phi[j, k] / (j + 1)
            acc = 0.0
            l = 0
            while 2 * l < n - k - j:
                acc += delta ** (2 * l) * fact[k + 2 * l] / fact[k] * gam[j, k + 2 * l]
                l += 1
            Tq[j + 1, k] = -acc / (j + 1)
    scale = np.outer(fact[: n + 1], fact[: n + 1])
    return Tt * scale, Tq * scale, Tg * scale


def taylor_ladder_from_derivatives(derivs: Dict, n: int, params: Parameters) -> TaylorLadder:
    """Taylor ladder from boundary derivatives keyed by ("theta"|"q", +1|-1)."""
    th, q, g = {}, {}, {}
    for sg in (1, -1):
        t0 = np.asarray(derivs[("theta", sg)], dtype=float)
        q0 = np.asarray(derivs[("q", sg)], dtype=float)
        if len(t0) < n + 1 or len(q0) < n + 1:
            raise TraceOrderError(f"need boundary derivatives up to order {n}")
        th[sg], q[sg], g[sg] = _taylor_side(t0, q0, n, params.epsilon, params.delta)
    return TaylorLadder(n, params.delta, th, q, g)


def taylor_ladder(U_in: State, n: int, params: Parameters) -> TaylorLadder:
    """Approximate recursion on one-sided Taylor traces of the initial data."""
    return taylor_ladder_from_derivatives(boundary_derivatives(U_in, n), n, params)


# ---------------------------------------------------------------------------
# reports


@dataclass
class CompatRow:
    j: int
    r1: float
    r2: float
    threshold: float
    passed: bool

    def to_dict(self):
        return {"j": self.j, "r1": self.r1, "r2": self.r2, "threshold": self.threshold, "pass": self.passed}


@dataclass
class CompatReport:
    mode: str
    n: int
    delta: float
    M: float
    rows: List[CompatRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def failing_rows(self) -> List[int]:
        return [r.j for r in self.rows if not r.passed]

    def to_dict(self) -> dict:
        return {"mode": self.mode, "n": self.n, "delta": self.delta, "M": self.M,
                "rows": [r.to_dict() for r in self.rows], "pass": self.passed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def threshold(M: float, delta: float, n: int, j: int) -> float:
    return M * delta ** (n - j - 0.5)


def _row(j, r1, r2, thr, atol):
    ok = bool(r1 <= thr + atol and r2 <= thr + atol)
    return CompatRow(j, float(r1), float(r2), float(thr), ok)


def default_M(U_in: State, n: int) -> float:
    """10 (||U_in||_{H^{n+1}} + 1) with the discrete Sobolev norm."""
    return 10.0 * (state_sobolev_norm(U_in, n + 1) + 1.0)


def check_exact(ladder: DerivativeLadder, M: float, n: int, params: Parameters,
                atol: float = DEFAULT_ATOL) -> CompatReport:
    """Nonlocal conditions for rows j = 0..n-1.

    With q_{j+1} = -R(Gamma_j, [[theta_j]]), the transmission form of the
    conditions holds identically, so each row reports the pair
    r1 = |[[D_k Gamma_j]]|, r2 = |alpha <D_k Gamma_j> - 2 delta <P_k Gamma_j> - [[theta_j]]|
    with k = n - j, whose smallness is what keeps q_{j+1} bounded.
    """
    if ladder.n < n:
        raise ValueError(f"ladder of order {ladder.n} is too short for n = {n}")
    rows = []
    for j in range(n):
        k = n - j
        A, B = residual_AB(ladder.gamma[j], jump(ladder.theta[j]), k, params.alpha, params.delta)
        rows.append(_row(j, abs(A), abs(B), threshold(M, params.delta, n, j), atol))
    return CompatReport("exact", n, params.delta, M, rows)


def approx_residuals(ladder: TaylorLadder, n: int, alpha: float):
    """(r1, r2) per row from the hat quantities."""
    d = ladder.delta
    th, q = ladder.theta_hat, ladder.q_hat
    out = []
    for j in range(n):
        r1 = q[1][j + 1, 0] - q[-1][j + 1, 0]
        jq1 = q[1][j + 1, 1] - q[-1][j + 1, 1] if j + 2 <= n else 0.0
        r2 = alpha * 0.5 * (q[1][j + 1, 0] + q[-1][j + 1, 0]) + (th[1][j, 0] - th[-1][j, 0]) - d * d * jq1
        out.append((abs(r1), abs(r2)))
    return out


def check_approx(ladder: TaylorLadder, M: float, n: int, params: Parameters,
                 atol: float = DEFAULT_ATOL) -> CompatReport:
    """Local conditions |[[q_{j+1,0}]]| and |alpha <q_{j+1,0}> + [[theta_{j,0}]] - delta^2 [[q_{j+1,1}]]|."""
    if ladder.n < n:
        raise ValueError(f"ladder of order {ladder.n} is too short for n = {n}")
    rows = [_row(j, r1, r2, threshold(M, ladder.delta, n, j), atol)
            for j, (r1, r2) in enumerate(approx_residuals(ladder, n, params.alpha))]
    mode = "hyperbolic" if ladder.delta == 0 else "approximate"
    return CompatReport(mode, n, ladder.delta, M, rows)


def check_hyperbolic(U_in: State, n: int, params: Parameters, M: float = 0.0,
                     atol: float = DEFAULT_ATOL) -> CompatReport:
    """Classical corner conditions [[q_{j+1,0}]] = 0, alpha <q_{j+1,0}> + [[theta_{j,0}]] = 0."""
    p0 = params.with_delta(0.0)
    return check_approx(taylor_ladder(U_in, n, p0), M, n, p0, atol)


# ---------------------------------------------------------------------------
# data


def generate_compatible(kind: str, params: Parameters, grid: GridSpec, **opts) -> State:
    """Initial data of a family that satisfies the compatibility conditions.

    "pulse-right", "pulse-left" and "colliding-pulses" vanish identically near
    the obstacle; "symmetric-touching" touches it but is even in theta and odd
    in q about x = 0 and about each contact point, which makes every residual vanish.
    """
    if kind not in COMPATIBLE_KINDS:
        raise ValueError(f"unknown compatible scenario {kind!r}; known: {', '.join(COMPATIBLE_KINDS)}")
    return make_scenario(kind, params, **opts).state(grid)


def extrapolated_boundary_traces(make_state: Callable[[GridSpec], State], grid: GridSpec, n: int,
                                 params: Parameters, levels: int = 3):
    """Exact-ladder traces at +-R, Richardson-extrapolated in dx^2 over successive halvings.

    Returns dict keyed by ("theta"|"q", +1|-1) of arrays over j = 0..n.
    """
    tables = []
    g = grid
    for _ in range(levels):
        lad = exact_ladder(make_state(g), n, params)
        tables.append({(name, sg): np.array([getattr(lad, name)[j].trace(sg) for j in range(n + 1)])
                       for name in ("theta", "q") for sg in (1, -1)})
        g = GridSpec(g.R, g.L, 2 * g.n_per_side - 1)
    # Richardson table for an even expansion in dx
    while len(tables) > 1:
        m = levels - len(tables) + 1
        f = 4.0**m
        tables = [{key: (f * b[key] - a[key]) / (f - 1.0) for key in a} for a, b in zip(tables[:-1], tables[1:])]
    return tables[0]


def ladder_norms(ladder: DerivativeLadder) -> np.ndarray:
    """||(theta_j, q_j, delta d_x q_j)||_{H^{n+1-j}} for j = 0..n+1.

    ||d_x q||_{H^m} is taken as the divided-difference part of ||q||_{H^{m+1}}.
    """
    d = ladder.delta
    out = []
    for j, (th, q) in enumerate(ladder.entries):
        o = ladder.n + 1 - j
        dq2 = sobolev_norm(q, o + 1) ** 2 - (q * q).integrate()
        out.append(math.sqrt(sobolev_norm(th, o) ** 2 + sobolev_norm(q, o) ** 2 + d * d * dq2))
    return np.array(out)
