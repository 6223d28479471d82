"""Payoff-based learning of Nash equilibria in convex games."""

from .core import BoxBudgetSet, BoxSet, NonFiniteError, ProductSet, project_box_budget, project_joint
from .games import (
    GameMappingAffine,
    PayoffOracle,
    QuadraticAggregativeGame,
    SmoothTestGame,
    assemble_hat_M,
    check_assumptions,
    random_instance,
)
from .learner import DEFAULT_SCHEDULE, ScheduleSpec, run, validate_schedule
from .vi_oracle import best_response_gap, solve_game, solve_vi_extragradient, vi_residual

__all__ = [
    "BoxBudgetSet",
    "BoxSet",
    "GameMappingAffine",
    "NonFiniteError",
    "DEFAULT_SCHEDULE",
    "PayoffOracle",
    "ProductSet",
    "QuadraticAggregativeGame",
    "ScheduleSpec",
    "SmoothTestGame",
    "assemble_hat_M",
    "best_response_gap",
    "check_assumptions",
    "project_box_budget",
    "project_joint",
    "random_instance",
    "run",
    "solve_game",
    "solve_vi_extragradient",
    "validate_schedule",
    "vi_residual",
]
