"""Weakly dispersive Boussinesq waves interacting with a fixed partially immersed obstacle."""

__version__ = "0.1.0"

from .core_types import (  # noqa: E402
    ExteriorField,
    GridSpec,
    ObstacleProfile,
    Parameters,
    State,
    average,
    jump,
)
from .compat import (  # noqa: E402
    CompatReport,
    DerivativeLadder,
    TaylorLadder,
    check_approx,
    check_exact,
    check_hyperbolic,
    exact_ladder,
    generate_compatible,
    taylor_ladder,
)
from .dynamics import rhs, rhs_hyperbolic  # noqa: E402
from .scenarios import initial_state, make_scenario  # noqa: E402
from .timestepper import RunConfig, RunResult, run  # noqa: E402
