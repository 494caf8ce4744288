"""
Importance queries and intervals.
"""

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from mdpattr.errors import InvalidQueryError
from mdpattr.models.mdp import PathSpec, StrategyTable

StrategyClass = Literal["all", "reachOptimal"]
Sense = Literal["both", "min", "max"]

_BOUND_SLACK = 1e-9


class ImportanceQuery(BaseModel):
    """A bound query for a state or a path subject."""

    target: str = Field(..., min_length=1)
    state: Optional[str] = None
    path: Optional[PathSpec] = None
    strategy_class: StrategyClass = "all"
    sense: Sense = "both"
    normalized: bool = True
    epsilon: Optional[float] = Field(default=None, gt=0, le=1)

    @model_validator(mode="after")
    def check_subject(self) -> "ImportanceQuery":
        if (self.state is None) == (self.path is None):
            raise InvalidQueryError("give exactly one of a state or a path subject")
        return self

    @property
    def subject_text(self) -> str:
        return self.state if self.state is not None else str(self.path)


class ImportanceInterval(BaseModel):
    """
    Lower/upper bounds of an importance query with witness strategies.

    A bound is None when its sense was not requested. Witnesses live on the
    product MDP unless witness_space says "base" (shortcut answers).
    """

    lower: Optional[float] = None
    upper: Optional[float] = None
    lower_witness: Optional[StrategyTable] = None
    upper_witness: Optional[StrategyTable] = None
    normalized: bool = True
    strategy_class: Literal["all", "reachOptimal", "pathFollowing"] = "all"
    path_following: bool = False
    witness_space: Literal["base", "product"] = "product"
    lower_exact: Optional[str] = None
    upper_exact: Optional[str] = None
    status: str = "optimal"
    pivot: Optional[str] = None
    label: str = "deterministic-class"

    @model_validator(mode="after")
    def check_bounds(self) -> "ImportanceInterval":
        for value in (self.lower, self.upper):
            if value is not None and not (-_BOUND_SLACK <= value <= 1 + _BOUND_SLACK):
                raise ValueError(f"bound {value} outside [0, 1]")
        if self.lower is not None and self.upper is not None and self.lower > self.upper + _BOUND_SLACK:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")
        return self
