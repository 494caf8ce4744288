"""
Constants module for mdpattr.
"""

from mdpattr.constants.examples import (
    DEAD_STATE,
    EXAMPLE_MODELS,
    EXAMPLE_NAMES,
    GRID_MOVES,
    GRIDWORLD_DEFAULTS,
    STAY_ACTION,
    get_example_info,
)
from mdpattr.constants.numerics import (
    DISTRIBUTION_TOLERANCE,
    EXTERNAL_AGREEMENT_TOLERANCE,
    IMPROVEMENT_TOLERANCE,
    LOCAL_OPTIMALITY_TOLERANCE,
    LP_SIGNIFICANT_DIGITS,
    OUTPUT_SIGNIFICANT_DIGITS,
    REACH_OPTIMAL_TOLERANCE,
    SOLUTION_TOLERANCE,
    VALUE_ITERATION_MAX_STEPS,
    VALUE_ITERATION_TOLERANCE,
)

__all__ = [
    "DEAD_STATE",
    "EXAMPLE_MODELS",
    "EXAMPLE_NAMES",
    "GRID_MOVES",
    "GRIDWORLD_DEFAULTS",
    "STAY_ACTION",
    "get_example_info",
    "DISTRIBUTION_TOLERANCE",
    "EXTERNAL_AGREEMENT_TOLERANCE",
    "IMPROVEMENT_TOLERANCE",
    "LOCAL_OPTIMALITY_TOLERANCE",
    "LP_SIGNIFICANT_DIGITS",
    "OUTPUT_SIGNIFICANT_DIGITS",
    "REACH_OPTIMAL_TOLERANCE",
    "SOLUTION_TOLERANCE",
    "VALUE_ITERATION_MAX_STEPS",
    "VALUE_ITERATION_TOLERANCE",
]
