"""
MDP data model: Mdp, StrategyTable, MarkovChain, PathSpec and reports.

All types are immutable pydantic models. Identifiers are strings; services
assign dense indices in input order.
"""

from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from mdpattr.constants.numerics import DISTRIBUTION_TOLERANCE
from mdpattr.errors import InvalidModelError, InvalidPathError, InvalidStrategyError


class Mdp(BaseModel):
    """
    Finite Markov decision process.

    transitions maps state -> action -> successor -> probability. Action names
    are unique per state only; the pair (state, action) is the key. `exact`
    optionally carries the same probabilities as "p/q" text for the exact
    oracle.

    Construction does not check well-formedness; use
    `services.mdp_core.validate` (report) or `ensure_valid` (raises).
    """

    model_config = ConfigDict(frozen=True)

    states: Tuple[str, ...]
    actions: Tuple[str, ...]
    initial: str
    transitions: Dict[str, Dict[str, Dict[str, float]]]
    labels: Dict[str, Tuple[str, ...]] = Field(default_factory=dict)
    exact: Dict[str, Dict[str, Dict[str, str]]] = Field(default_factory=dict)

    _index: Any = PrivateAttr(default=None)

    def enabled(self, state: str) -> List[str]:
        """Enabled actions of a state, in input order."""
        return list(self.transitions.get(state, {}))

    def distribution(self, state: str, action: str) -> Dict[str, float]:
        return self.transitions[state][action]

    def probability(self, state: str, action: str, successor: str) -> float:
        return self.transitions.get(state, {}).get(action, {}).get(successor, 0.0)

    def has_state(self, state: str) -> bool:
        return state in self.transitions or state in set(self.states)


class Violation(BaseModel):
    """One broken well-formedness rule, with coordinates."""

    kind: str
    message: str
    state: Optional[str] = None
    action: Optional[str] = None


class ValidationReport(BaseModel):
    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


class StrategyTable(BaseModel):
    """
    Memoryless strategy: state -> action -> probability.

    Deterministic rows hold exactly one action with probability 1. Memory is
    expressed by applying a strategy to a product MDP.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["deterministic", "stochastic"]
    choices: Dict[str, Dict[str, float]]

    @model_validator(mode="after")
    def check_rows(self) -> "StrategyTable":
        for state, row in self.choices.items():
            if not row:
                raise InvalidStrategyError(f"strategy row for '{state}' is empty", {"state": state})
            if any(p < 0 for p in row.values()):
                raise InvalidStrategyError(f"negative probability in row '{state}'", {"state": state})
            total = sum(row.values())
            if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
                raise InvalidStrategyError(
                    f"strategy row for '{state}' sums to {total}", {"state": state}
                )
            if self.kind == "deterministic" and len(row) != 1:
                raise InvalidStrategyError(
                    f"deterministic row for '{state}' has {len(row)} actions", {"state": state}
                )
        return self

    @classmethod
    def deterministic(cls, mapping: Mapping[str, str]) -> "StrategyTable":
        return cls(kind="deterministic", choices={s: {a: 1.0} for s, a in mapping.items()})

    @classmethod
    def stochastic(cls, mapping: Mapping[str, Mapping[str, float]]) -> "StrategyTable":
        return cls(
            kind="stochastic",
            choices={s: {a: p for a, p in row.items() if p > 0} or dict(row) for s, row in mapping.items()},
        )

    def distribution(self, state: str) -> Dict[str, float]:
        return self.choices[state]

    def action(self, state: str) -> str:
        """The chosen action at a state of a deterministic strategy."""
        row = self.choices[state]
        if len(row) != 1:
            raise InvalidStrategyError(f"row for '{state}' is not deterministic", {"state": state})
        return next(iter(row))

    def as_mapping(self) -> Dict[str, str]:
        return {state: self.action(state) for state in self.choices}


class MarkovChain(BaseModel):
    """Finite Markov chain with sparse rows (state -> successor -> probability)."""

    model_config = ConfigDict(frozen=True)

    states: Tuple[str, ...]
    initial: str
    matrix: Dict[str, Dict[str, float]]

    _dense: Any = PrivateAttr(default=None)

    @model_validator(mode="after")
    def check_rows(self) -> "MarkovChain":
        known = set(self.states)
        if self.initial not in known:
            raise InvalidModelError(f"chain initial '{self.initial}' is not a state")
        for state in self.states:
            row = self.matrix.get(state)
            if not row:
                raise InvalidModelError(f"chain row for '{state}' is missing", {"state": state})
            total = sum(row.values())
            if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
                raise InvalidModelError(f"chain row for '{state}' sums to {total}", {"state": state})
            unknown = [s for s in row if s not in known]
            if unknown:
                raise InvalidModelError(f"chain row for '{state}' leads to unknown {unknown}")
        return self


class PathSpec(BaseModel):
    """
    Simple path s0, a0, s1, ..., sn given as alternating states and actions.

    Validity against a concrete model (enabled actions, positive steps,
    starting at the initial state) is checked by `mdp_core.check_path`.
    """

    model_config = ConfigDict(frozen=True)

    items: Tuple[str, ...]

    @model_validator(mode="after")
    def check_shape(self) -> "PathSpec":
        if len(self.items) % 2 != 1:
            raise InvalidPathError(
                "a path alternates states and actions and ends in a state", {"path": list(self.items)}
            )
        states = self.states
        if len(set(states)) != len(states):
            raise InvalidPathError("path is not simple (a state repeats)", {"path": list(self.items)})
        return self

    @classmethod
    def parse(cls, text: str) -> "PathSpec":
        """Parse "s0,a0,s1,...". Whitespace around items is ignored."""
        items = tuple(part.strip() for part in text.split(","))
        if any(not part for part in items):
            raise InvalidPathError(f"empty item in path '{text}'")
        return cls(items=items)

    @property
    def states(self) -> Tuple[str, ...]:
        return self.items[0::2]

    @property
    def actions(self) -> Tuple[str, ...]:
        return self.items[1::2]

    @property
    def last(self) -> str:
        return self.items[-1]

    def steps(self) -> List[Tuple[str, str, str]]:
        """(s_i, a_i, s_{i+1}) triples."""
        states, actions = self.states, self.actions
        return [(states[i], actions[i], states[i + 1]) for i in range(len(actions))]

    def __str__(self) -> str:
        return ",".join(self.items)


class ReachResult(BaseModel):
    """Maximal reachability: p* from the initial state plus the per-state optimum."""

    p_star: float
    values: Dict[str, float]
