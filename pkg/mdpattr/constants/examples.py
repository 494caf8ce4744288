"""
Example Model Constants

Catalogue of the bundled example models and the default gridworld layout.
"""

from typing import Any, Dict, List, Tuple

# ============================================================================
# EXAMPLE MODELS
# Built-in models available through `gen` and GET /v1/examples/{name}
# ============================================================================

EXAMPLE_MODELS: Dict[str, Dict[str, Any]] = {
    "loan": {
        "name": "Loan Application",
        "description": "Customer journey of a loan application, from applying to a granted or rejected loan",
        "target": "Granted",
        "parameters": [],
        "tags": ["process", "small"],
    },
    "nonmono": {
        "name": "Non-Monotone Importance",
        "description": "Five-state model where improving reachability lowers a state's importance",
        "target": "s_t",
        "parameters": [],
        "tags": ["regression", "small"],
    },
    "gridworld": {
        "name": "Key and Door Gridworld",
        "description": "Deterministic grid: pick up a key, cross a lava river through a door, reach the goal",
        "target": "c6_4_k",
        "parameters": ["width", "height", "lava_row", "door_col", "key", "start", "goal"],
        "tags": ["grid", "heatmap"],
    },
    "random": {
        "name": "Random Layered MDP",
        "description": "Seeded layered MDP with back-edges, a goal and a failure sink",
        "target": "t",
        "parameters": ["states", "actions", "density", "seed"],
        "tags": ["property-testing"],
    },
}

EXAMPLE_NAMES: List[str] = list(EXAMPLE_MODELS)

# ============================================================================
# GRIDWORLD
# Default layout (a reconstruction): 7x5 grid, lava river on row 2 with a door
# at column 3, key just above the door. Coordinates are (x, y), y=0 is the top.
# ============================================================================

GRIDWORLD_DEFAULTS: Dict[str, Any] = {
    "width": 7,
    "height": 5,
    "lava_row": 2,
    "door_col": 3,
    "key": (3, 1),
    "start": (0, 0),
    "goal": (6, 4),
}

GRID_MOVES: Dict[str, Tuple[int, int]] = {
    "up": (0, -1),
    "down": (0, 1),
    "left": (-1, 0),
    "right": (1, 0),
}

DEAD_STATE = "dead"
STAY_ACTION = "stay"

# Random generator limits
RANDOM_MAX_STATES = 40
RANDOM_MAX_ACTIONS = 5
# Probabilities of random models are multiples of 1/RANDOM_PROBABILITY_GRAIN
RANDOM_PROBABILITY_GRAIN = 10


def get_example_info(name: str) -> Dict[str, Any]:
    """
    Look up catalogue information for an example model.

    Args:
        name: Example key (loan, nonmono, gridworld, random)

    Returns:
        Catalogue entry

    Raises:
        ValueError: If the name is unknown
    """
    if name not in EXAMPLE_MODELS:
        raise ValueError(f"Unknown example '{name}'. Valid examples: {', '.join(EXAMPLE_NAMES)}")
    return EXAMPLE_MODELS[name]
