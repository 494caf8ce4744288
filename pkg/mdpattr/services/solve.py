"""
Exact Solve Service

Optimizes importance exactly over deterministic memoryless strategies of a
memory product by branch-and-bound:

- Objective per strategy: N / D where N = coefficient * Pr(reach (t, VISITED)
  from the numerator state) and D = Pr(reach either target copy) from the
  initial state; absolute objectives use N alone.
- Bounds relax unassigned states to their best/worst action by optimal
  reachability. N/(N + B) is increasing in N and decreasing in B (B = reach
  of (t, BYPASSED)), so optimizing the two separately is admissible.
- Leaves are evaluated by one linear solve per target copy.

Also: the reach-optimal action filter, product-strategy evaluation and the
cross-check of external solver solutions.
"""

import time
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from mdpattr.config import settings
from mdpattr.constants.numerics import (
    EXTERNAL_AGREEMENT_TOLERANCE,
    IMPROVEMENT_TOLERANCE,
    LOCAL_OPTIMALITY_TOLERANCE,
    REACH_OPTIMAL_TOLERANCE,
    TIE_TOLERANCE,
)
from mdpattr.errors import InvalidStrategyError, SolutionFormatError
from mdpattr.middleware.logging_config import get_logger
from mdpattr.models.mdp import Mdp, ReachResult, StrategyTable
from mdpattr.models.optimization import DiscrepancyReport, EncodingConfig, SearchNode, SolveResult
from mdpattr.models.product import BYPASSED, VISITED, ProductMdp
from mdpattr.services.mdp_core import (
    chain_reach_prob,
    check_state,
    index_of,
    induce_chain,
    max_reach_prob,
    optimal_reach,
    reach_probabilities,
)
from mdpattr.services.preprocess import absorbing_copy, product_state_of

logger = get_logger(__name__)


class _BudgetExhausted(Exception):
    pass


def filter_reach_optimal_actions(
    m: Mdp, t: str, reach: Optional[ReachResult] = None
) -> Dict[str, List[str]]:
    """
    Actions whose Bellman backup attains the maximal reachability value.

    Args:
        m: Model
        t: Target state
        reach: Precomputed max_reach_prob(m, t), if available

    Returns:
        state -> locally optimal actions, in enabled order. Local optimality
        is necessary for membership in the reach-optimal class, not
        sufficient; callers re-check Pr(reach t) against p*.
    """
    check_state(m, t)
    reach = reach or max_reach_prob(m, t)
    values = reach.values
    keep: Dict[str, List[str]] = {}
    for s in m.states:
        best = values[s]
        keep[s] = [
            a
            for a, dist in m.transitions[s].items()
            if abs(sum(p * values[succ] for succ, p in dist.items()) - best) <= LOCAL_OPTIMALITY_TOLERANCE
        ] or list(m.transitions[s])
    return keep


class SearchProblem:
    """
    One exact optimization over deterministic strategies of a product.

    Args:
        p: Memory product
        t: Base target state
        sense: "min" or "max"
        strategy_class: "all" (Pr(reach t) >= epsilon) or "reachOptimal"
        cfg: Encoding configuration (epsilon)
        forced: Product state -> action that every strategy must take
        numerator_state: Product state the numerator is measured from
            (default: product initial)
        coefficient: Factor applied to the numerator (path prefix probability)
        normalized: Optimize N / D (True) or N alone (False)
    """

    def __init__(
        self,
        p: ProductMdp,
        t: str,
        sense: str,
        strategy_class: str = "all",
        cfg: Optional[EncodingConfig] = None,
        forced: Optional[Mapping[str, str]] = None,
        numerator_state: Optional[str] = None,
        coefficient: float = 1.0,
        normalized: bool = True,
    ):
        check_state(p.base, t)
        self.product = p
        self.target = t
        self.sense = sense
        self.maximize = sense == "max"
        self.strategy_class = strategy_class
        self.cfg = cfg or EncodingConfig()
        self.normalized = normalized
        self.coefficient = coefficient

        top = product_state_of(p, t, VISITED)
        bottom = product_state_of(p, t, BYPASSED)
        self.goal_states = [s for s in (top, bottom) if s is not None]
        self.model = absorbing_copy(p.product, self.goal_states)
        idx = index_of(self.model)
        self.idx = idx
        self.top = idx.mask([top])
        self.bottom = idx.mask([bottom] if bottom else [])
        self.any_goal = self.top | self.bottom
        self.initial = idx.initial
        self.numerator = idx.position[numerator_state] if numerator_state else idx.initial
        self.state_split = numerator_state is None and coefficient == 1.0

        allowed = [list(ids) for ids in idx.state_choices]
        self.forced_ids = set()
        for name, action in (forced or {}).items():
            i = idx.position[name]
            if name not in self.goal_states:
                allowed[i] = [idx.choice(i, action)]
                self.forced_ids.add(i)

        self.p_star: Optional[float] = None
        if strategy_class == "reachOptimal":
            reach = max_reach_prob(p.base, t)
            self.p_star = reach.p_star
            keep = filter_reach_optimal_actions(p.base, t, reach)
            for i, name in enumerate(idx.states):
                if name in self.goal_states:
                    continue
                allowed[i] = [c for c in allowed[i] if idx.choice_action[c] in keep[p.base_of(name)]]
        self.allowed = allowed
        self.class_empty = any(not ids for ids in allowed) or (self.p_star is not None and self.p_star <= 0)

        if not self.class_empty:
            self.relevant = self._forward(allowed)
            self.decisions = self._branching_order()
        else:
            self.relevant = np.zeros(idx.n, dtype=bool)
            self.decisions = []

    # ------------------------------------------------------------------
    # structure

    def _forward(self, allowed: Sequence[Sequence[int]]) -> np.ndarray:
        idx = self.idx
        seen = np.zeros(idx.n, dtype=bool)
        seen[self.initial] = True
        seen[self.numerator] = True
        frontier = [self.initial, self.numerator]
        while frontier:
            i = frontier.pop()
            for c in allowed[i]:
                for j in np.flatnonzero(idx.support[c]):
                    if not seen[j]:
                        seen[j] = True
                        frontier.append(int(j))
        return seen

    def _branching_order(self) -> List[int]:
        """Decision states by descending visit probability under the uniform strategy."""
        idx = self.idx
        choices = [i for i in range(idx.n) if self.relevant[i] and len(self.allowed[i]) > 1]
        if not choices:
            return []
        uniform = np.vstack([idx.matrix[self.allowed[i]].mean(axis=0) for i in range(idx.n)])
        weight = {}
        for i in choices:
            goal = np.zeros(idx.n, dtype=bool)
            goal[i] = True
            visit = reach_probabilities(uniform, goal)
            weight[i] = max(visit[self.initial], visit[self.numerator])
        return sorted(choices, key=lambda i: (-weight[i], i))

    def node_allowed(self, assignment: Mapping[int, int]) -> List[List[int]]:
        return [[assignment[i]] if i in assignment else self.allowed[i] for i in range(self.idx.n)]

    # ------------------------------------------------------------------
    # evaluation

    def feasible(self, reach: float) -> bool:
        if self.strategy_class == "reachOptimal":
            return reach >= self.p_star - REACH_OPTIMAL_TOLERANCE
        return reach >= self.cfg.epsilon - IMPROVEMENT_TOLERANCE

    def objective(self, numerator: float, bypass: float, reach: float) -> float:
        if not self.normalized:
            return numerator
        if reach <= 0:
            return 0.0
        return min(1.0, max(0.0, numerator / reach))

    def evaluate(self, policy: Sequence[int]) -> Tuple[float, float, float]:
        """(numerator, bypass, reach) of a complete deterministic policy."""
        P = self.idx.policy_matrix(policy)
        top = reach_probabilities(P, self.top)
        bottom = reach_probabilities(P, self.bottom) if self.bottom.any() else np.zeros(self.idx.n)
        numerator = self.coefficient * float(top[self.numerator])
        bypass = float(bottom[self.initial])
        return numerator, bypass, float(top[self.initial]) + bypass

    def _extreme(self, goal: np.ndarray, maximize: bool, allowed, at: int) -> float:
        if not goal.any():
            return 0.0
        values, _ = optimal_reach(self.idx, goal, maximize=maximize, allowed=allowed)
        return float(values[at])

    def bound(self, assignment: Mapping[int, int]) -> Tuple[float, bool]:
        """
        Optimistic objective over all completions of a partial assignment.

        Returns:
            (bound, feasible) where feasible is False when no completion can
            pass the class filter
        """
        allowed = self.node_allowed(assignment)
        reach_hi = self._extreme(self.any_goal, True, allowed, self.initial)
        if not self.feasible(reach_hi):
            return (0.0 if self.maximize else 1.0), False
        if self.maximize:
            num = self.coefficient * self._extreme(self.top, True, allowed, self.numerator)
            if not self.normalized:
                return num, True
            if num <= 0:
                return 0.0, True
            bypass = self._extreme(self.bottom, False, allowed, self.initial)
            return min(1.0, num / (num + bypass)), True
        num = self.coefficient * self._extreme(self.top, False, allowed, self.numerator)
        if not self.normalized:
            return num, True
        if self.state_split:
            bypass = self._extreme(self.bottom, True, allowed, self.initial)
            if num + bypass <= 0:
                return 1.0, True
            return num / (num + bypass), True
        return min(1.0, num / reach_hi), True

    # ------------------------------------------------------------------
    # heuristics

    def _restrict(self, goal: np.ndarray, maximize: bool) -> Optional[List[List[int]]]:
        if not goal.any():
            return None
        values, _ = optimal_reach(self.idx, goal, maximize=maximize, allowed=self.allowed)
        q = self.idx.matrix @ values
        restricted = []
        for i, ids in enumerate(self.allowed):
            keep = [c for c in ids if abs(q[c] - values[i]) <= LOCAL_OPTIMALITY_TOLERANCE]
            restricted.append(keep or list(ids))
        return restricted

    def heuristic_policies(self) -> List[np.ndarray]:
        """Candidate strategies tried before the search, in a fixed order."""
        idx = self.idx
        out = [optimal_reach(idx, self.any_goal, True, self.allowed)[1]]
        for first_max in (self.maximize, not self.maximize):
            out.append(optimal_reach(idx, self.top, first_max, self.allowed)[1])
            restricted = self._restrict(self.top, first_max)
            if restricted is not None and self.bottom.any():
                out.append(optimal_reach(idx, self.bottom, not first_max, restricted)[1])
            if restricted is not None:
                out.append(optimal_reach(idx, self.any_goal, True, restricted)[1])
        return out

    def complete(self, assignment: Mapping[int, int], fallback: Optional[Sequence[int]] = None) -> np.ndarray:
        policy = np.array([ids[0] for ids in self.allowed], dtype=int)
        if fallback is not None:
            for i in range(self.idx.n):
                if fallback[i] in self.allowed[i]:
                    policy[i] = fallback[i]
        for i, c in assignment.items():
            policy[i] = c
        return policy

    def canonical(self, policy: Sequence[int]) -> np.ndarray:
        """
        States not reachable under the policy take their first enabled
        action (forced states keep theirs). The objective is unchanged.
        """
        idx = self.idx
        policy = np.array(policy, dtype=int)
        seen = np.zeros(idx.n, dtype=bool)
        stack = [self.initial, self.numerator]
        seen[stack] = True
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(idx.support[policy[i]]):
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        for i in range(idx.n):
            if not seen[i]:
                policy[i] = self.allowed[i][0] if i in self.forced_ids else idx.state_choices[i][0]
        return policy

    def choice_states(self) -> List[int]:
        """States in model order whose action is not fixed, i.e. the positions that order witnesses."""
        goals = {self.idx.position[g] for g in self.goal_states}
        return [
            i
            for i, ids in enumerate(self.idx.state_choices)
            if len(ids) > 1 and i not in goals and i not in self.forced_ids
        ]

    def witness(self, policy: Sequence[int]) -> StrategyTable:
        """Product strategy in the product's own action names."""
        idx = self.idx
        product = self.product.product
        mapping = {}
        for i, name in enumerate(idx.states):
            if name in self.goal_states:
                mapping[name] = product.enabled(name)[0]
            else:
                mapping[name] = idx.choice_action[policy[i]]
        return StrategyTable.deterministic(mapping)

    def policy_of(self, sigma: StrategyTable) -> np.ndarray:
        """Choice ids of a deterministic product strategy."""
        idx = self.idx
        policy = np.zeros(idx.n, dtype=int)
        for i, name in enumerate(idx.states):
            if name in self.goal_states:
                policy[i] = idx.state_choices[i][0]
            else:
                policy[i] = idx.choice(i, sigma.action(name))
        return policy


def optimistic_bound(node: SearchNode, problem: SearchProblem) -> float:
    """
    Admissible bound on the objective of every completion of node.

    For a fully assigned node this equals the exact objective.
    """
    return problem.bound(node.assignment)[0]


def solve_exact(
    p: ProductMdp,
    t: str,
    sense: str,
    strategy_class: str = "all",
    cfg: Optional[EncodingConfig] = None,
    *,
    forced: Optional[Mapping[str, str]] = None,
    numerator_state: Optional[str] = None,
    coefficient: float = 1.0,
    normalized: bool = True,
    prune: bool = True,
    node_limit: Optional[int] = None,
    time_limit: Optional[float] = None,
) -> SolveResult:
    """
    Optimal importance over deterministic memoryless product strategies.

    Args:
        p: Memory product (pivot = subject state, or s_n for paths)
        t: Base target state
        sense: "min" or "max"
        strategy_class: "all" or "reachOptimal"
        cfg: Encoding configuration (epsilon)
        forced: Product actions fixed in every strategy (path prefixes)
        numerator_state: Product state to measure the numerator from
        coefficient: Numerator scale (path prefix probability)
        normalized: Divide by Pr(reach t)
        prune: Use bounds to cut subtrees (disable to explore exhaustively)
        node_limit: Search node budget (default from settings)
        time_limit: Wall-clock budget in seconds (default from settings)

    Returns:
        SolveResult. status is "undefined" when no strategy passes the class
        filter, "budget" when the search was cut short (the value is then
        the best found, not a proven optimum, or None if none was found).
        The witness is the lexicographically smallest optimal strategy.
    """
    started = time.perf_counter()
    problem = SearchProblem(
        p,
        t,
        sense,
        strategy_class,
        cfg,
        forced=forced,
        numerator_state=numerator_state,
        coefficient=coefficient,
        normalized=normalized,
    )
    node_limit = node_limit or settings.SEARCH_NODE_LIMIT
    time_limit = time_limit or settings.SEARCH_TIME_LIMIT_S
    log = logger.bind(pivot=p.pivot, target=t, sense=sense, strategy_class=strategy_class)

    if problem.class_empty:
        log.info("Search skipped", status="undefined", reason="empty strategy class")
        return SolveResult(status="undefined", wall_time=time.perf_counter() - started)

    root_bound, root_feasible = problem.bound({})
    if not root_feasible:
        status = "undefined" if strategy_class == "all" else "infeasibleClass"
        log.info("Search skipped", status=status, reason="target not reachable within class")
        return SolveResult(status=status, wall_time=time.perf_counter() - started)

    better = (lambda a, b: a > b + IMPROVEMENT_TOLERANCE) if problem.maximize else (
        lambda a, b: a < b - IMPROVEMENT_TOLERANCE
    )
    state = {"value": None, "policy": None, "terms": None, "nodes": 0, "pruned": 0}

    def offer(policy: np.ndarray) -> None:
        numerator, bypass, reach = problem.evaluate(policy)
        if not problem.feasible(reach):
            return
        value = problem.objective(numerator, bypass, reach)
        if state["value"] is None or better(value, state["value"]):
            state.update(value=value, policy=policy, terms=(numerator, reach))

    for candidate in problem.heuristic_policies():
        offer(problem.complete({}, candidate))

    def promising(bound: float) -> bool:
        if not prune or state["value"] is None:
            return True
        return better(bound, state["value"])

    order = problem.decisions

    def search(assignment: Dict[int, int], depth: int) -> None:
        state["nodes"] += 1
        if state["nodes"] > node_limit or time.perf_counter() - started > time_limit:
            raise _BudgetExhausted()
        if depth == len(order):
            offer(problem.complete(assignment, state["policy"]))
            return
        i = order[depth]
        children = []
        for rank, c in enumerate(problem.allowed[i]):
            child = dict(assignment)
            child[i] = c
            bound, feasible = problem.bound(child)
            if prune and (not feasible or not promising(bound)):
                state["pruned"] += 1
                continue
            children.append((-bound if problem.maximize else bound, rank, child, bound))
        children.sort(key=lambda item: (item[0], item[1]))
        for _, _, child, bound in children:
            if not promising(bound):
                state["pruned"] += 1
                continue
            search(child, depth + 1)

    def reaches(value: float, target: float, slack: float) -> bool:
        return value >= target - slack if problem.maximize else value <= target + slack

    def find(assignment: Dict[int, int], target: float, fallback: np.ndarray):
        """First completion of assignment whose objective ties with target, or None."""
        state["nodes"] += 1
        if state["nodes"] > node_limit or time.perf_counter() - started > time_limit:
            raise _BudgetExhausted()
        free = [i for i in order if i not in assignment]
        if not free:
            policy = problem.complete(assignment, fallback)
            numerator, bypass, reach = problem.evaluate(policy)
            if not problem.feasible(reach):
                return None
            value = problem.objective(numerator, bypass, reach)
            return (policy, value, (numerator, reach)) if reaches(value, target, TIE_TOLERANCE) else None
        i = free[0]
        children = []
        for rank, c in enumerate(problem.allowed[i]):
            child = dict(assignment)
            child[i] = c
            bound, feasible = problem.bound(child)
            if feasible and reaches(bound, target, LOCAL_OPTIMALITY_TOLERANCE):
                children.append((-bound if problem.maximize else bound, rank, child))
        children.sort(key=lambda item: (item[0], item[1]))
        for _, _, child in children:
            hit = find(child, target, fallback)
            if hit is not None:
                return hit
        return None

    def lexicographic_witness() -> None:
        """
        Among the optimal strategies, move to the lexicographically smallest
        (states in model order, actions in enabled order): fix one state at a
        time to the first action that still admits an optimal completion.
        """
        target = state["value"]
        best = problem.canonical(state["policy"])
        state["policy"] = best
        fixed: Dict[int, int] = {}
        for i in problem.choice_states():
            for c in problem.idx.state_choices[i]:
                if c == best[i]:
                    break
                trial = dict(fixed)
                trial[i] = c
                bound, feasible = problem.bound(trial)
                if not feasible or not reaches(bound, target, LOCAL_OPTIMALITY_TOLERANCE):
                    continue
                hit = find(trial, target, best)
                if hit is not None:
                    policy, value, terms = hit
                    best = problem.canonical(policy)
                    for j, cj in trial.items():
                        best[j] = cj
                    state.update(value=value, policy=best, terms=terms)
                    break
            fixed[i] = int(best[i])

    status = "optimal"
    if not prune or state["value"] is None or better(root_bound, state["value"]):
        try:
            search({}, 0)
        except _BudgetExhausted:
            status = "budget"

    if status == "optimal" and state["value"] is not None:
        try:
            lexicographic_witness()
        except _BudgetExhausted:
            log.warning("Budget exhausted while ordering tied witnesses", nodes=state["nodes"])

    elapsed = time.perf_counter() - started
    if state["value"] is None:
        if status != "budget":
            status = "undefined" if strategy_class == "all" else "infeasibleClass"
        log.info("Search finished", status=status, nodes=state["nodes"], pruned=state["pruned"], elapsed_s=elapsed)
        return SolveResult(status=status, nodes_explored=state["nodes"], pruned=state["pruned"], wall_time=elapsed)

    policy = problem.canonical(state["policy"])
    numerator, reach = state["terms"]
    log.info(
        "Search finished",
        status=status,
        value=state["value"],
        nodes=state["nodes"],
        pruned=state["pruned"],
        decisions=len(order),
        elapsed_s=round(elapsed, 6),
    )
    return SolveResult(
        value=state["value"],
        witness=problem.witness(policy),
        status=status,
        numerator=numerator,
        denominator=reach,
        nodes_explored=state["nodes"],
        pruned=state["pruned"],
        wall_time=elapsed,
    )


def evaluate_product_strategy(
    p: ProductMdp,
    t: str,
    sigma: StrategyTable,
    numerator_state: Optional[str] = None,
    coefficient: float = 1.0,
) -> Tuple[float, float]:
    """
    (numerator, Pr(reach t)) of a possibly stochastic product strategy.

    The numerator is coefficient * Pr(reach (t, VISITED) before (t, BYPASSED))
    measured from numerator_state (default: the product initial state).
    """
    top = product_state_of(p, t, VISITED)
    bottom = product_state_of(p, t, BYPASSED)
    chain = induce_chain(p.product, sigma)
    avoid = {bottom} if bottom else set()
    start = numerator_state or p.product.initial
    numerator = coefficient * chain_reach_prob(chain, start, {top}, avoid)
    reach = chain_reach_prob(chain, p.product.initial, {top} | avoid)
    return numerator, reach


def cross_check_external(
    p: ProductMdp,
    t: str,
    model_kind: str,
    solution_text: str,
    metadata: Mapping,
    cfg: Optional[EncodingConfig] = None,
) -> DiscrepancyReport:
    """
    Compare an external solver's solution of an exported model with exact
    evaluation.

    Args:
        p: Product the model was built from
        t: Base target
        model_kind: qp | qpstar | lpstar
        solution_text: Flat "name value" solution file contents
        metadata: Companion metadata written at export
        cfg: Encoding configuration (default: the one recorded in metadata)

    Returns:
        DiscrepancyReport; differences above 4e-4 are flagged. A strategy that
        cannot be decoded is reported (flagged), not raised.

    Raises:
        SolutionFormatError: Malformed solution file or metadata mismatch
    """
    from mdpattr.services.encodings import rebuild_from_metadata, strategy_from_solution
    from mdpattr.services.lp_format import parse_solution

    if metadata.get("kind") != model_kind:
        raise SolutionFormatError(
            f"metadata describes a '{metadata.get('kind')}' model, not '{model_kind}'", {"kind": model_kind}
        )
    if metadata.get("pivot") != p.pivot or metadata.get("target") != t:
        raise SolutionFormatError(
            "metadata was written for another pivot/target",
            {"pivot": metadata.get("pivot"), "target": metadata.get("target")},
        )
    cfg = cfg or EncodingConfig(**metadata.get("config", {}))
    model = rebuild_from_metadata(p, t, metadata, cfg)
    values, reported = parse_solution(solution_text)
    names = metadata["lp_names"]
    assignment = {names.get(name, name): value for name, value in values.items()}

    sense = metadata["sense"]
    denominator = metadata.get("denominator_pin")
    objective_var = metadata["objective_variable"]
    if reported is not None:
        external_numerator = abs(reported)
    elif objective_var in assignment:
        external_numerator = assignment[objective_var]
    else:
        raise SolutionFormatError(f"solution has no objective value nor '{objective_var}'")
    external = external_numerator / denominator if denominator else None

    strategy_class = "reachOptimal" if denominator else "all"
    optimum = solve_exact(p, t, sense, strategy_class, cfg).value

    try:
        witness = strategy_from_solution(model, assignment, p)
    except (InvalidStrategyError, SolutionFormatError) as e:
        logger.warning("External solution not decodable", error=e.message)
        return DiscrepancyReport(
            model_kind=model_kind,
            sense=sense,
            external_objective=external,
            recomputed=None,
            exact_optimum=optimum,
            external_vs_recomputed=None,
            external_vs_optimum=None if external is None or optimum is None else abs(external - optimum),
            flagged=True,
            decode_error=e.message,
        )

    numerator, reach = evaluate_product_strategy(p, t, witness)
    recomputed = numerator / reach if reach > 0 else None
    diff_recomputed = None if external is None or recomputed is None else abs(external - recomputed)
    diff_optimum = None if external is None or optimum is None else abs(external - optimum)
    flagged = any(d is not None and d > EXTERNAL_AGREEMENT_TOLERANCE for d in (diff_recomputed, diff_optimum))
    logger.info(
        "External solution checked",
        kind=model_kind,
        external=external,
        recomputed=recomputed,
        optimum=optimum,
        flagged=flagged,
    )
    return DiscrepancyReport(
        model_kind=model_kind,
        sense=sense,
        external_objective=external,
        recomputed=recomputed,
        exact_optimum=optimum,
        external_vs_recomputed=diff_recomputed,
        external_vs_optimum=diff_optimum,
        flagged=flagged,
        witness=witness,
    )
