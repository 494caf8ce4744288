from fractions import Fraction
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mdpattr.errors import InvalidModelError, InvalidQueryError
from mdpattr.models.importance import ImportanceQuery
from mdpattr.models.mdp import Mdp, PathSpec
from mdpattr.utils.conversions import ProbabilityFormat


# ============================================================================
# MODEL FILE
# ============================================================================


class TransitionRow(BaseModel):
    """One (from, action, to, prob) entry of a model file."""

    model_config = ConfigDict(populate_by_name=True)

    from_: str = Field(..., alias="from", min_length=1)
    action: str = Field(..., min_length=1)
    to: str = Field(..., min_length=1)
    prob: Union[float, str] = Field(..., description='Probability as a number or a "p/q" string')


class ModelFile(BaseModel):
    """
    On-disk JSON form of an MDP (version 1).

    Action names are unique per state only. Probabilities given as "p/q"
    strings or decimals are kept exactly for the rational oracle.
    """

    version: int = Field(default=1, ge=1, le=1)
    states: List[str] = Field(..., min_length=1)
    actions: List[str] = Field(default_factory=list)
    initial: str = Field(..., min_length=1)
    transitions: List[TransitionRow] = Field(default_factory=list)
    labels: Dict[str, List[str]] = Field(default_factory=dict)
    target: Optional[str] = None

    def to_mdp(self) -> Mdp:
        """
        Decode into a validated Mdp.

        Raises:
            InvalidModelError: Unparseable probability, duplicate entry or any
                well-formedness violation
        """
        from mdpattr.services.mdp_core import validate

        transitions: Dict[str, Dict[str, Dict[str, float]]] = {}
        exact: Dict[str, Dict[str, Dict[str, str]]] = {}
        for n, row in enumerate(self.transitions):
            try:
                value, fraction = ProbabilityFormat.parse(row.prob)
            except ValueError as e:
                raise InvalidModelError(str(e), {"row": n, "from": row.from_, "action": row.action}) from e
            dist = transitions.setdefault(row.from_, {}).setdefault(row.action, {})
            if row.to in dist:
                raise InvalidModelError(
                    f"duplicate transition {row.from_} --{row.action}--> {row.to}",
                    {"row": n, "from": row.from_, "action": row.action, "to": row.to},
                )
            dist[row.to] = value
            exact.setdefault(row.from_, {}).setdefault(row.action, {})[row.to] = ProbabilityFormat.exact_text(fraction)

        actions = list(self.actions)
        for rows in transitions.values():
            actions.extend(a for a in rows if a not in actions)

        try:
            m = Mdp(
                states=tuple(self.states),
                actions=tuple(actions),
                initial=self.initial,
                transitions=transitions,
                labels={s: tuple(ls) for s, ls in self.labels.items()},
                exact=exact,
            )
        except ValidationError as e:
            raise InvalidModelError("model does not decode", {"errors": e.errors(include_url=False)}) from e

        report = validate(m)
        if not report.ok:
            first = report.violations[0]
            raise InvalidModelError(
                first.message,
                {"violations": [v.model_dump(exclude_none=True) for v in report.violations]},
            )
        unknown = [s for s in self.labels if s not in set(self.states)]
        if unknown:
            raise InvalidModelError(f"labels name unknown states {unknown}", {"states": unknown})
        if self.target is not None and self.target not in set(self.states):
            raise InvalidModelError(f"target '{self.target}' is not a state", {"target": self.target})
        return m

    @classmethod
    def from_mdp(cls, m: Mdp, target: Optional[str] = None) -> "ModelFile":
        """
        Encode an Mdp. A probability is written as a number when the number
        denotes its exact value, otherwise as its "p/q" text.
        """
        rows = []
        for s in m.states:
            for a, dist in m.transitions.get(s, {}).items():
                for succ, p in dist.items():
                    text = m.exact.get(s, {}).get(a, {}).get(succ)
                    prob: Union[float, str] = p
                    if text is not None and Fraction(text) != Fraction(repr(p)):
                        prob = text
                    rows.append(TransitionRow(from_=s, action=a, to=succ, prob=prob))
        return cls(
            states=list(m.states),
            actions=list(m.actions),
            initial=m.initial,
            transitions=rows,
            labels={s: list(ls) for s, ls in m.labels.items()},
            target=target,
        )


# ============================================================================
# API REQUEST BODIES
# ============================================================================


class ImportanceRequest(BaseModel):
    """
    Importance bound query.

    Exactly one of state or path is required; target defaults to the
    model's own target.
    """

    model: ModelFile
    target: Optional[str] = Field(default=None, description="Target state (default: model target)")
    state: Optional[str] = Field(default=None, description="Subject state")
    path: Optional[str] = Field(default=None, description='Subject path "s0,a0,s1,..."')
    strategy_class: Literal["all", "reachOptimal"] = "all"
    sense: Literal["both", "min", "max"] = "both"
    absolute: bool = Field(default=False, description="Bound the unnormalized event probability")
    epsilon: Optional[float] = Field(default=None, gt=0, le=1)

    @model_validator(mode="after")
    def check_subject(self):
        if (self.state is None) == (self.path is None):
            raise ValueError("Exactly one of state or path required")
        return self

    def to_query(self) -> ImportanceQuery:
        target = resolve_target(self.model, self.target)
        path = PathSpec.parse(self.path) if self.path is not None else None
        return ImportanceQuery(
            target=target,
            state=self.state,
            path=path,
            strategy_class=self.strategy_class,
            sense=self.sense,
            normalized=not self.absolute,
            epsilon=self.epsilon,
        )


class BatchRequest(BaseModel):
    """Bounds for every state of a model."""

    model: ModelFile
    target: Optional[str] = None
    strategy_class: Literal["all", "reachOptimal"] = "all"
    epsilon: Optional[float] = Field(default=None, gt=0, le=1)


class ExportRequest(BaseModel):
    """Build one optimization encoding and return it as LP text."""

    model: ModelFile
    encoding: Literal["qp", "qpstar", "lpstar"] = "lpstar"
    state: str = Field(..., min_length=1, description="Pivot state")
    target: Optional[str] = None
    sense: Literal["min", "max"] = "max"
    pin_reach: bool = Field(default=False, description="Pin the QP denominator to p* so it serializes")
    qp_star_form: Literal["fixed", "hierarchical"] = "fixed"
    include_redundant_zero_constraint: bool = True
    epsilon: Optional[float] = Field(default=None, gt=0, le=1)


def resolve_target(model: ModelFile, target: Optional[str]) -> str:
    """Explicit target, else the model's own; an error when neither is set."""
    resolved = target or model.target
    if not resolved:
        raise InvalidQueryError("no target given and the model names none")
    return resolved
