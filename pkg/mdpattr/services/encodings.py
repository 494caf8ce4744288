"""
Encodings Service

Builds the three optimization encodings of importance on a memory product
as solver-neutral OptModels:

- QP: continuous strategy variables, quadratic Bellman rows, fractional
  objective numerator / denominator over all strategies reaching t
- QP*: QP restricted to reachability-optimal strategies; denominator pinned
  to p* (fixed form) or obtained by a first objective (hierarchical form)
- LP*: binary strategy variables; Bellman and ordering rows linearized with
  big-M

Variable names:
    p[<state>,<action>]   strategy weight of a product choice
    r[<state>,T|B]        probability of reaching (t, T) or (t, B)
    ord[<state>]          progress weight of the state ordering

Target copies are made absorbing first, as in the exact search.
"""

from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from mdpattr.constants.numerics import DISTRIBUTION_TOLERANCE, SOLUTION_TOLERANCE
from mdpattr.errors import (
    EncodingError,
    ImportanceUndefinedError,
    InvalidQueryError,
    InvalidStrategyError,
    SolutionFormatError,
)
from mdpattr.middleware.logging_config import get_logger
from mdpattr.models.mdp import StrategyTable
from mdpattr.models.optimization import (
    Constraint,
    EncodingConfig,
    FractionalPair,
    Objective,
    OptModel,
    QuadraticTerm,
    Variable,
)
from mdpattr.models.product import BYPASSED, MODES, VISITED, ProductMdp
from mdpattr.services.mdp_core import check_state, reach_probabilities, reach_set
from mdpattr.services.preprocess import absorbing_copy, product_state_of

logger = get_logger(__name__)

MODEL_KINDS = ("qp", "qpstar", "lpstar")


def strategy_var(state: str, action: str) -> str:
    return f"p[{state},{action}]"


def reach_var(state: str, mode: str) -> str:
    return f"r[{state},{mode}]"


def order_var(state: str) -> str:
    return f"ord[{state}]"


def _add(linear: Dict[str, float], name: str, coefficient: float) -> None:
    value = linear.get(name, 0.0) + coefficient
    if value == 0:
        linear.pop(name, None)
    else:
        linear[name] = value


class _Context:
    """Shared structure of every encoding of one (product, target) pair."""

    def __init__(
        self,
        p: ProductMdp,
        t: str,
        cfg: EncodingConfig,
        forced: Optional[Mapping[str, str]] = None,
        numerator_state: Optional[str] = None,
        coefficient: float = 1.0,
    ):
        check_state(p.base, t)
        if t == p.base.initial:
            raise InvalidQueryError("target equals the initial state; importance is 1 by definition", {"target": t})
        self.product = p
        self.target = t
        self.cfg = cfg
        self.goal = {VISITED: product_state_of(p, t, VISITED), BYPASSED: product_state_of(p, t, BYPASSED)}
        self.goals = [g for g in self.goal.values() if g is not None]
        self.model = absorbing_copy(p.product, self.goals)
        self.states = list(self.model.states)
        self.initial = self.model.initial
        self.forced = dict(forced or {})
        for name, action in self.forced.items():
            if name not in self.model.transitions or action not in self.model.transitions[name]:
                raise EncodingError(f"forced action '{action}' is not enabled in '{name}'")
        self.numerator_state = numerator_state or self.initial
        self.coefficient = coefficient
        self.terminal = self._terminals()
        self.terminal_set = frozenset(self.terminal)

        self.reaching: Dict[str, frozenset] = {}
        for mode, goal in self.goal.items():
            if goal is None:
                self.reaching[mode] = frozenset()
            elif cfg.restrict_to_reachable:
                self.reaching[mode] = reach_set(self.model, goal)
            else:
                self.reaching[mode] = frozenset(self.states)

    def _terminals(self) -> List[str]:
        base = self.product.base
        if self.cfg.terminal_states is not None:
            for s in self.cfg.terminal_states:
                check_state(base, s)
            terminal_base = set(self.cfg.terminal_states)
        else:
            terminal_base = set()
            for s in base.states:
                enabled = base.transitions[s]
                if len(enabled) == 1:
                    dist = next(iter(enabled.values()))
                    if dist.get(s, 0.0) >= 1 - DISTRIBUTION_TOLERANCE:
                        terminal_base.add(s)
        goals = set(self.goals)
        return [name for name in self.states if name in goals or self.product.base_of(name) in terminal_base]

    def is_terminal(self, state: str) -> bool:
        return state in self.terminal_set

    def decision_states(self) -> List[str]:
        return [s for s in self.states if s not in self.goals]

    def open_states(self) -> List[str]:
        return [s for s in self.states if not self.is_terminal(s)]

    def reach_fixed_zero(self, state: str, mode: str) -> bool:
        if state == self.goal[mode]:
            return False
        if state in self.goals:
            return state not in self.reaching[mode]
        return state not in self.reaching[mode] or self.is_terminal(state)

    # ------------------------------------------------------------------
    # variables

    def strategy_variables(self, domain: str) -> List[Variable]:
        out = []
        for s in self.decision_states():
            for a in self.model.enabled(s):
                lower, upper = 0.0, 1.0
                if s in self.forced:
                    lower = upper = 1.0 if a == self.forced[s] else 0.0
                out.append(Variable(name=strategy_var(s, a), domain=domain, lower=lower, upper=upper))
        return out

    def reach_variables(self) -> List[Variable]:
        out = []
        for s in self.states:
            for mode in (VISITED, BYPASSED):
                upper = 0.0 if self.reach_fixed_zero(s, mode) else 1.0
                out.append(Variable(name=reach_var(s, mode), lower=0.0, upper=upper))
        return out

    def order_variables(self) -> List[Variable]:
        big_m = self.cfg.big_m
        return [Variable(name=order_var(s), lower=-big_m, upper=big_m) for s in self.states]

    # ------------------------------------------------------------------
    # constraint families

    def strategy_sum(self) -> List[Constraint]:
        return [
            Constraint(
                name=f"strategy_sum[{s}]",
                family="strategy_sum",
                linear={strategy_var(s, a): 1.0 for a in self.model.enabled(s)},
                comparator="=",
                rhs=1.0,
            )
            for s in self.decision_states()
        ]

    def target_defaults(self) -> List[Constraint]:
        out = []
        for mode, goal in self.goal.items():
            if goal is not None:
                out.append(
                    Constraint(
                        name=f"target_default[{goal},{mode}]",
                        family="target_default",
                        linear={reach_var(goal, mode): 1.0},
                        comparator="=",
                        rhs=1.0,
                    )
                )
        if self.cfg.include_redundant_zero_constraint:
            for mode, goal in self.goal.items():
                if goal is None:
                    continue
                other = BYPASSED if mode == VISITED else VISITED
                out.append(
                    Constraint(
                        name=f"target_cross_zero[{goal},{other}]",
                        family="target_cross_zero",
                        linear={reach_var(goal, other): 1.0},
                        comparator="=",
                        rhs=0.0,
                    )
                )
        return out

    def denominator(self) -> Dict[str, float]:
        return {reach_var(self.initial, VISITED): 1.0, reach_var(self.initial, BYPASSED): 1.0}

    def min_reach(self) -> Constraint:
        return Constraint(
            name="min_reach", family="min_reach", linear=self.denominator(), comparator=">=", rhs=self.cfg.epsilon
        )

    def reach_optimal(self, p_star: float) -> Constraint:
        return Constraint(
            name="reach_optimal", family="reach_optimal", linear=self.denominator(), comparator="=", rhs=p_star
        )

    def _bellman_rows(self, mode: str) -> List[str]:
        return [s for s in self.open_states() if not self.reach_fixed_zero(s, mode)]

    def bellman(self) -> List[Constraint]:
        out = []
        for mode in (VISITED, BYPASSED):
            for s in self._bellman_rows(mode):
                terms = []
                for a, dist in self.model.transitions[s].items():
                    for succ, prob in dist.items():
                        if not self.reach_fixed_zero(succ, mode):
                            terms.append(
                                QuadraticTerm(coefficient=-prob, first=strategy_var(s, a), second=reach_var(succ, mode))
                            )
                out.append(
                    Constraint(
                        name=f"bellman[{s},{mode}]",
                        family="bellman",
                        linear={reach_var(s, mode): 1.0},
                        quadratic=terms,
                        comparator="=",
                        rhs=0.0,
                    )
                )
        return out

    def bellman_discrete(self) -> List[Constraint]:
        out = []
        for mode in (VISITED, BYPASSED):
            for s in self._bellman_rows(mode):
                for a, dist in self.model.transitions[s].items():
                    linear: Dict[str, float] = {}
                    _add(linear, reach_var(s, mode), 1.0)
                    for succ, prob in dist.items():
                        if not self.reach_fixed_zero(succ, mode):
                            _add(linear, reach_var(succ, mode), -prob)
                    _add(linear, strategy_var(s, a), 1.0)
                    out.append(
                        Constraint(
                            name=f"bellman_discrete[{s},{a},{mode}]",
                            family="bellman_discrete",
                            linear=linear,
                            comparator="<=",
                            rhs=1.0,
                        )
                    )
        return out

    def action_lower_bounds(self) -> List[Constraint]:
        out = []
        for s in self.open_states():
            for a, dist in self.model.transitions[s].items():
                linear: Dict[str, float] = {}
                for mode in (VISITED, BYPASSED):
                    _add(linear, reach_var(s, mode), 1.0)
                    for succ, prob in dist.items():
                        _add(linear, reach_var(succ, mode), -prob)
                if not linear:
                    continue
                out.append(
                    Constraint(
                        name=f"action_lower_bound[{s},{a}]",
                        family="action_lower_bound",
                        linear=linear,
                        comparator=">=",
                        rhs=0.0,
                    )
                )
        return out

    def ordering(self) -> List[Constraint]:
        out = []
        for s in self.open_states():
            terms = [
                QuadraticTerm(coefficient=-prob, first=strategy_var(s, a), second=order_var(succ))
                for a, dist in self.model.transitions[s].items()
                for succ, prob in dist.items()
            ]
            out.append(
                Constraint(
                    name=f"ordering[{s}]",
                    family="ordering",
                    linear={order_var(s): 1.0},
                    quadratic=terms,
                    comparator="<=",
                    rhs=-1.0,
                )
            )
        return out

    def ordering_discrete(self) -> List[Constraint]:
        big_m = self.cfg.big_m
        out = []
        for s in self.open_states():
            for a, dist in self.model.transitions[s].items():
                linear: Dict[str, float] = {}
                _add(linear, order_var(s), 1.0)
                for succ, prob in dist.items():
                    _add(linear, order_var(succ), -prob)
                _add(linear, strategy_var(s, a), big_m)
                out.append(
                    Constraint(
                        name=f"ordering_discrete[{s},{a}]",
                        family="ordering_discrete",
                        linear=linear,
                        comparator="<=",
                        rhs=big_m - 1.0,
                    )
                )
        return out

    # ------------------------------------------------------------------

    def numerator(self, sign: float = 1.0) -> Dict[str, float]:
        return {reach_var(self.numerator_state, VISITED): sign * self.coefficient}

    def metadata(self, kind: str, sense: str, **extra: Any) -> Dict[str, Any]:
        strategy_vars = {
            strategy_var(s, a): [s, a] for s in self.decision_states() for a in self.model.enabled(s)
        }
        reach_vars = {reach_var(s, mode): [s, mode] for s in self.states for mode in (VISITED, BYPASSED)}
        data: Dict[str, Any] = {
            "kind": kind,
            "sense": sense,
            "negated": False,
            "pivot": self.product.pivot,
            "target": self.target,
            "p_star": None,
            "denominator_pin": None,
            "config": self.cfg.model_dump(),
            "forced": dict(self.forced),
            "numerator_state": self.numerator_state,
            "coefficient": self.coefficient,
            "terminal": list(self.terminal),
            "goals": {mode: goal for mode, goal in self.goal.items() if goal is not None},
            "strategy_vars": strategy_vars,
            "reach_vars": reach_vars,
            "objective_variable": reach_var(self.numerator_state, VISITED),
        }
        data.update(extra)
        return data


def _check_sense(sense: str) -> None:
    if sense not in ("min", "max"):
        raise InvalidQueryError(f"sense must be 'min' or 'max', not '{sense}'", {"sense": sense})


def _check_p_star(p_star: float) -> None:
    if p_star <= 0:
        raise ImportanceUndefinedError("target unreachable (p* = 0); refusing to encode", {"p_star": p_star})


def build_qp(
    p: ProductMdp,
    t: str,
    sense: str,
    cfg: Optional[EncodingConfig] = None,
    *,
    forced: Optional[Mapping[str, str]] = None,
    numerator_state: Optional[str] = None,
    coefficient: float = 1.0,
    normalized: bool = True,
) -> OptModel:
    """
    Quadratic encoding over all strategies reaching t with probability >= epsilon.

    The objective is fractional (numerator / denominator) and is always
    minimized; maximization negates the numerator (metadata "negated").
    """
    _check_sense(sense)
    cfg = cfg or EncodingConfig()
    ctx = _Context(p, t, cfg, forced, numerator_state, coefficient)
    sign = -1.0 if sense == "max" else 1.0
    if normalized:
        objective = Objective(
            name="importance",
            sense="min",
            fractional=FractionalPair(numerator=ctx.numerator(sign), denominator=ctx.denominator()),
        )
    else:
        objective = Objective(name="importance", sense="min", linear=ctx.numerator(sign))
    model = OptModel(
        name="qp",
        variables=ctx.strategy_variables("continuous") + ctx.reach_variables() + ctx.order_variables(),
        constraints=(
            ctx.strategy_sum()
            + ctx.target_defaults()
            + [ctx.min_reach()]
            + ctx.bellman()
            + ctx.ordering()
        ),
        objectives=[objective],
        metadata=ctx.metadata("qp", sense, negated=sense == "max", normalized=normalized),
    )
    logger.debug("Built encoding", kind="qp", variables=len(model.variables), constraints=len(model.constraints))
    return model


def pin_denominator(model: OptModel, p_star: float) -> OptModel:
    """
    Rewrite a QP so it serializes: the denominator becomes the constant p*
    (reach-optimal strategies) and the objective its linear numerator.
    """
    _check_p_star(p_star)
    if model.metadata.get("kind") != "qp":
        raise EncodingError("only QP models carry a denominator to pin", {"kind": model.metadata.get("kind")})
    constraints = []
    for con in model.constraints:
        if con.family == "min_reach":
            con = Constraint(
                name="reach_optimal", family="reach_optimal", linear=dict(con.linear), comparator="=", rhs=p_star
            )
        constraints.append(con)
    objectives = []
    for obj in model.objectives:
        if obj.fractional is not None:
            obj = Objective(name=obj.name, sense=obj.sense, linear=dict(obj.fractional.numerator))
        objectives.append(obj)
    metadata = dict(model.metadata, p_star=p_star, denominator_pin=p_star)
    return OptModel(
        name=model.name, variables=model.variables, constraints=constraints, objectives=objectives, metadata=metadata
    )


def build_qp_star(
    p: ProductMdp,
    t: str,
    p_star: float,
    sense: str,
    cfg: Optional[EncodingConfig] = None,
    *,
    forced: Optional[Mapping[str, str]] = None,
    numerator_state: Optional[str] = None,
    coefficient: float = 1.0,
) -> OptModel:
    """
    QP restricted to reachability-optimal strategies.

    The ordering rows are replaced by action-wise lower bounds on the total
    reach value. cfg.qp_star_form selects a pinned denominator ("fixed") or
    a first objective minimizing the sum of reach values ("hierarchical").
    The objectives are linear in both forms.

    Raises:
        ImportanceUndefinedError: p_star is 0
    """
    _check_sense(sense)
    _check_p_star(p_star)
    cfg = cfg or EncodingConfig()
    ctx = _Context(p, t, cfg, forced, numerator_state, coefficient)
    reach_vars = ctx.reach_variables()
    objectives = [Objective(name="importance_numerator", sense=sense, linear=ctx.numerator())]
    if cfg.qp_star_form == "hierarchical":
        total = {v.name: 1.0 for v in reach_vars if v.upper > 0}
        objectives.insert(0, Objective(name="reach_sum", sense="min", linear=total))
        denominator_rows = [ctx.min_reach()]
    else:
        denominator_rows = [ctx.reach_optimal(p_star)]
    model = OptModel(
        name="qpstar",
        variables=ctx.strategy_variables("continuous") + reach_vars,
        constraints=(
            ctx.strategy_sum()
            + ctx.target_defaults()
            + denominator_rows
            + ctx.bellman()
            + ctx.action_lower_bounds()
        ),
        objectives=objectives,
        metadata=ctx.metadata("qpstar", sense, p_star=p_star, denominator_pin=p_star, form=cfg.qp_star_form),
    )
    logger.debug("Built encoding", kind="qpstar", variables=len(model.variables), constraints=len(model.constraints))
    return model


def build_lp_star(
    p: ProductMdp,
    t: str,
    p_star: float,
    sense: str,
    cfg: Optional[EncodingConfig] = None,
    *,
    forced: Optional[Mapping[str, str]] = None,
    numerator_state: Optional[str] = None,
    coefficient: float = 1.0,
) -> OptModel:
    """
    Mixed-integer linear encoding over deterministic reach-optimal strategies.

    Strategy variables are binary; Bellman and ordering rows only bind for
    the chosen action (big-M). No quadratic terms.

    Raises:
        ImportanceUndefinedError: p_star is 0
    """
    _check_sense(sense)
    _check_p_star(p_star)
    cfg = cfg or EncodingConfig()
    ctx = _Context(p, t, cfg, forced, numerator_state, coefficient)
    model = OptModel(
        name="lpstar",
        variables=ctx.strategy_variables("binary") + ctx.reach_variables() + ctx.order_variables(),
        constraints=(
            ctx.strategy_sum()
            + ctx.target_defaults()
            + [ctx.reach_optimal(p_star)]
            + ctx.action_lower_bounds()
            + ctx.bellman_discrete()
            + ctx.ordering_discrete()
        ),
        objectives=[Objective(name="importance_numerator", sense=sense, linear=ctx.numerator())],
        metadata=ctx.metadata("lpstar", sense, p_star=p_star, denominator_pin=p_star),
    )
    logger.debug("Built encoding", kind="lpstar", variables=len(model.variables), constraints=len(model.constraints))
    return model


def build_model(
    kind: str,
    p: ProductMdp,
    t: str,
    sense: str,
    cfg: Optional[EncodingConfig] = None,
    p_star: Optional[float] = None,
    pin: bool = False,
) -> OptModel:
    """Build an encoding by kind; p_star is required for qpstar/lpstar and for pinning."""
    if kind not in MODEL_KINDS:
        raise EncodingError(f"unknown encoding '{kind}'", {"kind": kind, "known": list(MODEL_KINDS)})
    if kind == "qp":
        model = build_qp(p, t, sense, cfg)
        if pin:
            if p_star is None:
                raise EncodingError("pinning the QP denominator needs p*")
            model = pin_denominator(model, p_star)
        return model
    if p_star is None:
        raise EncodingError(f"{kind} needs p*", {"kind": kind})
    builder = build_qp_star if kind == "qpstar" else build_lp_star
    return builder(p, t, p_star, sense, cfg)


def rebuild_from_metadata(
    p: ProductMdp, t: str, metadata: Mapping[str, Any], cfg: Optional[EncodingConfig] = None
) -> OptModel:
    """
    Rebuild the model a metadata document was written for.

    Raises:
        SolutionFormatError: The rebuilt model declares other strategy variables
    """
    cfg = cfg or EncodingConfig(**metadata.get("config", {}))
    kind = metadata.get("kind")
    sense = metadata.get("sense")
    options = dict(
        forced=metadata.get("forced") or None,
        numerator_state=metadata.get("numerator_state"),
        coefficient=metadata.get("coefficient", 1.0),
    )
    if kind == "qp":
        model = build_qp(p, t, sense, cfg, normalized=metadata.get("normalized", True), **options)
        if metadata.get("denominator_pin") is not None:
            model = pin_denominator(model, metadata["denominator_pin"])
    elif kind in ("qpstar", "lpstar"):
        builder = build_qp_star if kind == "qpstar" else build_lp_star
        model = builder(p, t, metadata["p_star"], sense, cfg, **options)
    else:
        raise SolutionFormatError(f"metadata names unknown model kind '{kind}'")
    if set(model.metadata["strategy_vars"]) != set(metadata.get("strategy_vars", {})):
        raise SolutionFormatError("metadata strategy variables do not match the model")
    return model


# ============================================================================
# ASSIGNMENTS
# ============================================================================


def strategy_from_solution(model: OptModel, assignment: Mapping[str, float], p: ProductMdp) -> StrategyTable:
    """
    Decode strategy variable values into a product strategy.

    Variables fixed by their bounds may be missing from the assignment. Goal
    copies get their first enabled action. Rows with every value within
    1e-6 of 0 or 1 give a deterministic table.

    Raises:
        SolutionFormatError: A free strategy variable has no value
        InvalidStrategyError: Value outside [0, 1] or row not summing to 1 (1e-6)
    """
    rows: Dict[str, Dict[str, float]] = {}
    for name, (state, action) in model.metadata["strategy_vars"].items():
        if name in assignment:
            value = float(assignment[name])
        else:
            var = model.variable(name)
            if var.lower != var.upper:
                raise SolutionFormatError(f"solution has no value for '{name}'", {"variable": name})
            value = var.lower
        if value < -SOLUTION_TOLERANCE or value > 1 + SOLUTION_TOLERANCE:
            raise InvalidStrategyError(f"'{name}' = {value} is not a probability", {"variable": name})
        rows.setdefault(state, {})[action] = min(1.0, max(0.0, value))

    deterministic = True
    for state, row in rows.items():
        total = sum(row.values())
        if abs(total - 1.0) > SOLUTION_TOLERANCE:
            raise InvalidStrategyError(f"strategy row '{state}' sums to {total}", {"state": state})
        if any(SOLUTION_TOLERANCE < v < 1 - SOLUTION_TOLERANCE for v in row.values()):
            deterministic = False

    for goal in model.metadata["goals"].values():
        rows[goal] = {p.product.enabled(goal)[0]: 1.0}

    if deterministic:
        return StrategyTable.deterministic({s: max(row, key=row.get) for s, row in rows.items()})
    return StrategyTable.stochastic(
        {s: {a: v / sum(row.values()) for a, v in row.items() if v > SOLUTION_TOLERANCE} for s, row in rows.items()}
    )


def assignment_from_strategy(model: OptModel, sigma: StrategyTable, p: ProductMdp) -> Dict[str, float]:
    """
    Assignment induced by a product strategy: strategy weights, exact reach
    values and ordering weights (minus the expected steps to a terminal
    state; -bigM where no terminal is reached almost surely).
    """
    meta = model.metadata
    goals = meta["goals"]
    absorbing = absorbing_copy(p.product, goals.values())
    states = list(absorbing.states)
    position = {s: i for i, s in enumerate(states)}
    n = len(states)

    values: Dict[str, float] = {name: 0.0 for name in meta["strategy_vars"]}
    P = np.zeros((n, n))
    goal_set = set(goals.values())
    for s in states:
        i = position[s]
        if s in goal_set:
            P[i, i] = 1.0
            continue
        enabled = absorbing.transitions[s]
        row = sigma.choices.get(s) or ({next(iter(enabled)): 1.0} if len(enabled) == 1 else None)
        if row is None:
            raise InvalidStrategyError(f"strategy has no row for '{s}'", {"state": s})
        for a, weight in row.items():
            if a not in enabled:
                raise InvalidStrategyError(f"action '{a}' is not enabled in '{s}'", {"state": s, "action": a})
            values[strategy_var(s, a)] = weight
            for succ, prob in enabled[a].items():
                P[i, position[succ]] += weight * prob

    for mode in MODES:
        goal = goals.get(mode)
        mask = np.zeros(n, dtype=bool)
        if goal is not None:
            mask[position[goal]] = True
        x = reach_probabilities(P, mask)
        for s in states:
            values[reach_var(s, mode)] = float(x[position[s]])

    if any(v.name.startswith("ord[") for v in model.variables):
        terminal = np.zeros(n, dtype=bool)
        terminal[[position[s] for s in meta["terminal"]]] = True
        sure = reach_probabilities(P, terminal) >= 1 - 1e-12
        open_ = np.flatnonzero(sure & ~terminal)
        steps = np.zeros(n)
        if open_.size:
            system = np.eye(open_.size) - P[np.ix_(open_, open_)]
            steps[open_] = np.linalg.solve(system, np.ones(open_.size))
        big_m = meta["config"]["big_m"]
        for s in states:
            i = position[s]
            values[order_var(s)] = -float(steps[i]) if sure[i] else -big_m
    return values


def _term_value(assignment: Mapping[str, float], linear, quadratic) -> float:
    total = sum(c * assignment.get(name, 0.0) for name, c in linear.items())
    total += sum(q.coefficient * assignment.get(q.first, 0.0) * assignment.get(q.second, 0.0) for q in quadratic)
    return total


def objective_value(model: OptModel, assignment: Mapping[str, float], index: int = -1) -> float:
    """Value of one objective (default: the last, i.e. the importance one)."""
    obj = model.objectives[index]
    if obj.fractional is not None:
        den = _term_value(assignment, obj.fractional.denominator, [])
        num = _term_value(assignment, obj.fractional.numerator, [])
        if den == 0:
            raise ImportanceUndefinedError("objective denominator is 0 for this assignment")
        return num / den
    return _term_value(assignment, obj.linear, obj.quadratic)


def violated_constraints(model: OptModel, assignment: Mapping[str, float], tol: float = SOLUTION_TOLERANCE) -> List[str]:
    """Names of constraints and variable bounds an assignment breaks."""
    broken = []
    for var in model.variables:
        value = assignment.get(var.name, 0.0)
        if value < var.lower - tol or value > var.upper + tol:
            broken.append(var.name)
    for con in model.constraints:
        lhs = _term_value(assignment, con.linear, con.quadratic)
        if (
            (con.comparator == "=" and abs(lhs - con.rhs) > tol)
            or (con.comparator == "<=" and lhs > con.rhs + tol)
            or (con.comparator == ">=" and lhs < con.rhs - tol)
        ):
            broken.append(con.name)
    return broken
