"""
Optimization models: the solver-neutral encoding IR, encoding configuration,
and exact-search results.
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from mdpattr.config import settings
from mdpattr.errors import EncodingError
from mdpattr.models.mdp import StrategyTable

Domain = Literal["continuous", "binary", "integer"]
Comparator = Literal["<=", "=", ">="]


class Variable(BaseModel):
    name: str
    domain: Domain = "continuous"
    lower: float = 0.0
    upper: float = 1.0


class QuadraticTerm(BaseModel):
    """coefficient * first * second"""

    coefficient: float
    first: str
    second: str


class Constraint(BaseModel):
    """linear + quadratic <cmp> rhs; family names the constraint group."""

    name: str
    family: str
    linear: Dict[str, float] = Field(default_factory=dict)
    quadratic: List[QuadraticTerm] = Field(default_factory=list)
    comparator: Comparator
    rhs: float = 0.0


class FractionalPair(BaseModel):
    numerator: Dict[str, float]
    denominator: Dict[str, float]


class Objective(BaseModel):
    """
    One objective of an ordered hierarchy. When `fractional` is set, the
    objective is numerator/denominator and linear/quadratic are unused.
    """

    name: str
    sense: Literal["min", "max"]
    linear: Dict[str, float] = Field(default_factory=dict)
    quadratic: List[QuadraticTerm] = Field(default_factory=list)
    fractional: Optional[FractionalPair] = None


class OptModel(BaseModel):
    """Variables, constraints and hierarchical objectives (first is primary)."""

    name: str
    variables: List[Variable]
    constraints: List[Constraint]
    objectives: List[Objective]
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_references(self) -> "OptModel":
        declared = set()
        for var in self.variables:
            if var.name in declared:
                raise EncodingError(f"variable '{var.name}' declared twice")
            if not (abs(var.lower) < float("inf") and abs(var.upper) < float("inf")):
                raise EncodingError(f"variable '{var.name}' has an infinite bound")
            declared.add(var.name)

        def check(names, owner):
            missing = [n for n in names if n not in declared]
            if missing:
                raise EncodingError(f"{owner} references undeclared {missing[:3]}")

        for con in self.constraints:
            check(con.linear, con.name)
            check([n for q in con.quadratic for n in (q.first, q.second)], con.name)
        for obj in self.objectives:
            check(obj.linear, obj.name)
            check([n for q in obj.quadratic for n in (q.first, q.second)], obj.name)
            if obj.fractional:
                check(obj.fractional.numerator, obj.name)
                check(obj.fractional.denominator, obj.name)
        return self

    def variable(self, name: str) -> Variable:
        for var in self.variables:
            if var.name == name:
                return var
        raise KeyError(name)

    def constraints_in(self, family: str) -> List[Constraint]:
        return [c for c in self.constraints if c.family == family]

    @property
    def is_linear(self) -> bool:
        return not any(c.quadratic for c in self.constraints) and not any(
            o.quadratic or o.fractional for o in self.objectives
        )


class EncodingConfig(BaseModel):
    """Encoding parameters; epsilon and big_m default from settings."""

    epsilon: float = Field(default_factory=lambda: settings.EPSILON, gt=0, le=1)
    big_m: float = Field(default_factory=lambda: settings.BIG_M, ge=1)
    include_redundant_zero_constraint: bool = True
    restrict_to_reachable: bool = True
    qp_star_form: Literal["fixed", "hierarchical"] = "fixed"
    # Base states to treat as terminal instead of detected absorbing ones
    terminal_states: Optional[List[str]] = None


class SearchNode(BaseModel):
    """Partial assignment (product state index -> choice id) of the exact search."""

    model_config = ConfigDict(frozen=True)

    assignment: Dict[int, int] = Field(default_factory=dict)
    depth: int = 0
    bound: Optional[float] = None


SolveStatus = Literal["optimal", "undefined", "infeasibleClass", "budget"]


class SolveResult(BaseModel):
    """Outcome of one exact optimization."""

    value: Optional[float] = None
    witness: Optional[StrategyTable] = None
    status: SolveStatus
    numerator: Optional[float] = None
    denominator: Optional[float] = None
    nodes_explored: int = 0
    pruned: int = 0
    wall_time: float = 0.0


class DiscrepancyReport(BaseModel):
    """Comparison of an external solver's solution with exact evaluation."""

    model_kind: str
    sense: Literal["min", "max"]
    external_objective: Optional[float]
    recomputed: Optional[float]
    exact_optimum: Optional[float]
    external_vs_recomputed: Optional[float]
    external_vs_optimum: Optional[float]
    flagged: bool
    decode_error: Optional[str] = None
    witness: Optional[StrategyTable] = None
