"""Online Fisher-market pacing dynamics, equilibrium oracle and metrics."""

from ._core import (
    DimensionMismatch,
    Engine,
    Equilibrium,
    InvalidMarket,
    ItemSpace,
    Market,
    Mode,
    ModeMismatch,
    NoConvergence,
    PaceError,
    ParseError,
    Step,
    discretize,
    dual_objective,
    kkt_check,
    relative_errors,
    run_experiment,
    solve,
)

__all__ = [
    "DimensionMismatch",
    "Engine",
    "Equilibrium",
    "InvalidMarket",
    "ItemSpace",
    "Market",
    "Mode",
    "ModeMismatch",
    "NoConvergence",
    "PaceError",
    "ParseError",
    "Step",
    "discretize",
    "dual_objective",
    "kkt_check",
    "relative_errors",
    "run_experiment",
    "solve",
]
