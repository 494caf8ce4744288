"""
Example Model Generators

Deterministic builders for the bundled models:

- loan: customer journey of a loan application (10 states, target Granted)
- nonmono: five-state model where better reachability lowers importance
- gridworld: key/door/lava grid, parameterized layout
- random: seeded layered MDPs with back-edges for property tests

Every generator also fills exact "p/q" probabilities for the oracle.
"""

from collections import deque
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from mdpattr.constants.examples import (
    DEAD_STATE,
    EXAMPLE_MODELS,
    GRID_MOVES,
    GRIDWORLD_DEFAULTS,
    RANDOM_MAX_ACTIONS,
    RANDOM_MAX_STATES,
    RANDOM_PROBABILITY_GRAIN,
    STAY_ACTION,
)
from mdpattr.errors import InvalidQueryError
from mdpattr.models.mdp import Mdp, StrategyTable
from mdpattr.services.mdp_core import ensure_valid

Spec = Dict[str, Dict[str, Dict[str, str]]]


def _from_spec(states: List[str], initial: str, spec: Spec, labels: Optional[Dict[str, Tuple[str, ...]]] = None) -> Mdp:
    """Build an Mdp from state -> action -> successor -> "p/q" text."""
    actions: List[str] = []
    transitions: Dict[str, Dict[str, Dict[str, float]]] = {}
    for s in states:
        transitions[s] = {}
        for a, dist in spec[s].items():
            if a not in actions:
                actions.append(a)
            transitions[s][a] = {succ: float(Fraction(text)) for succ, text in dist.items()}
    m = Mdp(
        states=tuple(states),
        actions=tuple(actions),
        initial=initial,
        transitions=transitions,
        labels=labels or {},
        exact={s: {a: dict(dist) for a, dist in spec[s].items()} for s in states},
    )
    ensure_valid(m)
    return m


def _absorbing(state: str) -> Dict[str, Dict[str, str]]:
    return {STAY_ACTION: {state: "1"}}


def loan_model() -> Mdp:
    """Loan application journey; Granted and Rejected are absorbing."""
    spec: Spec = {
        "s0": {
            "Apply": {"Application": "19/20", "Error": "1/20"},
            "Consult": {"Consultation": "1"},
        },
        "Application": {"Provider": {"Application+": "1/2", "Consultation": "1/2"}},
        "Error": {"Consult": {"Consultation": "1"}, "Quit": {"Rejected": "1"}},
        "Consultation": {"Apply": {"Application+": "1"}, "Angry": {"Angry": "1"}},
        "Angry": {"Quit": {"Rejected": "1"}},
        "Application+": {"Provider": {"Granted": "9/10", "Rework": "1/10"}},
        "Rework": {"Submit": {"Resubmit": "1"}, "Quit": {"Rejected": "1"}},
        "Resubmit": {"Provider": {"Granted": "4/5", "Rejected": "1/5"}},
        "Granted": _absorbing("Granted"),
        "Rejected": _absorbing("Rejected"),
    }
    return _from_spec(list(spec), "s0", spec)


def nonmono_model() -> Mdp:
    """
    s0 moves to s1 (1/10) or s2 (9/10). s1 reaches s_t with 1/10. In s2,
    action a goes to s_t directly, b detours through s1.
    """
    spec: Spec = {
        "s0": {"a": {"s1": "1/10", "s2": "9/10"}},
        "s1": {"a": {"s_t": "1/10", "sink": "9/10"}},
        "s2": {"a": {"s_t": "1"}, "b": {"s1": "1"}},
        "sink": _absorbing("sink"),
        "s_t": _absorbing("s_t"),
    }
    return _from_spec(list(spec), "s0", spec)


def grid_state(x: int, y: int, has_key: bool) -> str:
    return f"c{x}_{y}_k" if has_key else f"c{x}_{y}"


def gridworld_model(**params: Any) -> Mdp:
    """
    Deterministic key/door gridworld.

    States are reachable (cell, has key) pairs plus DEAD_STATE. Moves into
    walls, or into the door without the key, are disabled. Lava cells only
    offer "burn" into DEAD_STATE. The goal with the key is absorbing.

    Args:
        width, height, lava_row, door_col, key, start, goal: layout, see
            GRIDWORLD_DEFAULTS

    Raises:
        InvalidQueryError: Layout out of bounds or inconsistent
    """
    layout = {**GRIDWORLD_DEFAULTS, **{k: v for k, v in params.items() if v is not None}}
    width, height = int(layout["width"]), int(layout["height"])
    lava_row, door_col = int(layout["lava_row"]), int(layout["door_col"])
    key, start, goal = (tuple(layout[k]) for k in ("key", "start", "goal"))
    door = (door_col, lava_row)

    def inside(cell) -> bool:
        return 0 <= cell[0] < width and 0 <= cell[1] < height

    if width < 2 or height < 3:
        raise InvalidQueryError("gridworld needs width >= 2 and height >= 3", {"width": width, "height": height})
    for name, cell in (("key", key), ("start", start), ("goal", goal), ("door", door)):
        if not inside(cell):
            raise InvalidQueryError(f"{name} cell {cell} is outside the grid", {"cell": list(cell)})
    if start[1] == lava_row or key[1] == lava_row or goal[1] == lava_row:
        raise InvalidQueryError("start, key and goal must lie off the lava row")

    def is_lava(cell) -> bool:
        return cell[1] == lava_row and cell != door

    def moves(cell, has_key):
        if is_lava(cell):
            return {"burn": (DEAD_STATE, has_key)}
        if has_key and cell == goal:
            return {STAY_ACTION: (cell, has_key)}
        out = {}
        for action, (dx, dy) in GRID_MOVES.items():
            succ = (cell[0] + dx, cell[1] + dy)
            if not inside(succ) or (succ == door and not has_key):
                continue
            out[action] = (succ, has_key)
        if cell == key and not has_key:
            out["pickup"] = (cell, True)
        return out

    seen = {(start, False)}
    queue = deque([(start, False)])
    while queue:
        cell, has_key = queue.popleft()
        for succ, succ_key in moves(cell, has_key).values():
            if succ != DEAD_STATE and (succ, succ_key) not in seen:
                seen.add((succ, succ_key))
                queue.append((succ, succ_key))

    states: List[str] = []
    spec: Spec = {}
    labels: Dict[str, Tuple[str, ...]] = {}
    for has_key in (False, True):
        for y in range(height):
            for x in range(width):
                cell = (x, y)
                if (cell, has_key) not in seen:
                    continue
                name = grid_state(x, y, has_key)
                states.append(name)
                spec[name] = {
                    a: {DEAD_STATE if succ == DEAD_STATE else grid_state(*succ, succ_key): "1"}
                    for a, (succ, succ_key) in moves(cell, has_key).items()
                }
                tags = [f"cell:{x},{y}"]
                if cell == key:
                    tags.append("key")
                if is_lava(cell):
                    tags.append("lava")
                if cell == door:
                    tags.append("door")
                if cell == goal and has_key:
                    tags.append("target")
                labels[name] = tuple(tags)
    states.append(DEAD_STATE)
    spec[DEAD_STATE] = {STAY_ACTION: {DEAD_STATE: "1"}}
    return _from_spec(states, grid_state(*start, False), spec, labels)


def gridworld_target(**params: Any) -> str:
    layout = {**GRIDWORLD_DEFAULTS, **{k: v for k, v in params.items() if v is not None}}
    return grid_state(*tuple(layout["goal"]), True)


def random_model(
    states: int = 6,
    actions: int = 2,
    density: float = 0.5,
    seed: int = 0,
    reach_goal: bool = True,
) -> Mdp:
    """
    Seeded layered MDP over s0..s{n-3}, goal "t" and sink "fail".

    Each inner state gets 1..actions actions. An action has one successor,
    or two with probability `density`; a successor is a back-edge (to an
    earlier or the same layer) with probability 1/5, otherwise a later state,
    "t" or "fail". Probabilities are multiples of 1/10.

    Args:
        states: Total number of states (>= 3)
        actions: Maximum actions per state
        density: Probability of a second successor
        seed: Random seed; equal arguments give equal models
        reach_goal: When False, no transition enters "t"

    Raises:
        InvalidQueryError: Parameters out of range
    """
    if not 3 <= states <= RANDOM_MAX_STATES:
        raise InvalidQueryError(f"states must be in [3, {RANDOM_MAX_STATES}]", {"states": states})
    if not 1 <= actions <= RANDOM_MAX_ACTIONS:
        raise InvalidQueryError(f"actions must be in [1, {RANDOM_MAX_ACTIONS}]", {"actions": actions})
    if not 0 <= density <= 1:
        raise InvalidQueryError("density must be in [0, 1]", {"density": density})

    rng = np.random.default_rng(seed)
    inner = [f"s{i}" for i in range(states - 2)]
    sinks = ["t", "fail"] if reach_goal else ["fail"]
    grain = RANDOM_PROBABILITY_GRAIN

    spec: Spec = {}
    for i, s in enumerate(inner):
        spec[s] = {}
        for k in range(int(rng.integers(1, actions + 1))):
            count = 2 if rng.random() < density else 1
            successors: List[str] = []
            for _ in range(count):
                if rng.random() < 0.2:
                    successors.append(inner[int(rng.integers(0, i + 1))])
                else:
                    forward = inner[i + 1 :] + sinks
                    successors.append(forward[int(rng.integers(0, len(forward)))])
            if count == 2 and successors[0] != successors[1]:
                share = int(rng.integers(1, grain))
                dist = {successors[0]: f"{share}/{grain}", successors[1]: f"{grain - share}/{grain}"}
            else:
                dist = {successors[0]: "1"}
            spec[s][f"a{k}"] = {succ: str(Fraction(text)) for succ, text in dist.items()}
    spec["t"] = {STAY_ACTION: {"t": "1"}}
    spec["fail"] = {STAY_ACTION: {"fail": "1"}}
    return _from_spec(inner + ["t", "fail"], "s0", spec)


def random_strategy(m: Mdp, seed: int = 0, stochastic: bool = False) -> StrategyTable:
    """Seeded random memoryless strategy of m."""
    rng = np.random.default_rng(seed)
    if not stochastic:
        return StrategyTable.deterministic(
            {s: m.enabled(s)[int(rng.integers(0, len(m.enabled(s))))] for s in m.states}
        )
    rows = {}
    for s in m.states:
        weights = rng.integers(1, 5, size=len(m.enabled(s)))
        total = int(weights.sum())
        rows[s] = {a: int(w) / total for a, w in zip(m.enabled(s), weights)}
    return StrategyTable.stochastic(rows)


def generate(name: str, **params: Any) -> Tuple[Mdp, str]:
    """
    Build a bundled example.

    Returns:
        (model, default target)

    Raises:
        InvalidQueryError: Unknown example or invalid parameters
    """
    if name not in EXAMPLE_MODELS:
        raise InvalidQueryError(f"unknown example '{name}'", {"known": list(EXAMPLE_MODELS)})
    params = {k: v for k, v in params.items() if v is not None}
    if name == "loan":
        return loan_model(), EXAMPLE_MODELS[name]["target"]
    if name == "nonmono":
        return nonmono_model(), EXAMPLE_MODELS[name]["target"]
    if name == "gridworld":
        return gridworld_model(**params), gridworld_target(**params)
    return random_model(**params), EXAMPLE_MODELS[name]["target"]
