"""
MDP Core Service

Well-formedness checks, graph reachability and probability computation on
induced Markov chains.

Also hosts the dense index of an Mdp and the array routines the exact solver
runs in its inner loop:
- reach_probabilities: absorbing-chain solve restricted to the states that
  can reach the goal (everything else is 0 or 1 by construction)
- optimal_reach: qualitative precomputation, value iteration, then one
  policy-evaluation solve for exactness
"""

from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from mdpattr.constants.numerics import (
    DISTRIBUTION_TOLERANCE,
    LOCAL_OPTIMALITY_TOLERANCE,
    VALUE_ITERATION_MAX_STEPS,
    VALUE_ITERATION_TOLERANCE,
)
from mdpattr.errors import (
    InternalSolverError,
    InvalidModelError,
    InvalidPathError,
    InvalidQueryError,
    InvalidStrategyError,
    UnknownStateError,
)
from mdpattr.middleware.logging_config import get_logger
from mdpattr.models.mdp import (
    MarkovChain,
    Mdp,
    PathSpec,
    ReachResult,
    StrategyTable,
    ValidationReport,
    Violation,
)

logger = get_logger(__name__)


# ============================================================================
# VALIDATION
# ============================================================================


def validate(m: Mdp) -> ValidationReport:
    """
    Check every well-formedness rule of an Mdp.

    Args:
        m: Model to check

    Returns:
        Report listing each violation with its state/action coordinates;
        empty iff the model is well formed. Never raises.
    """
    violations: List[Violation] = []
    known = set(m.states)
    declared_actions = set(m.actions)

    if not m.states:
        violations.append(Violation(kind="empty state set", message="the model has no states"))
    if len(known) != len(m.states):
        seen = set()
        for s in m.states:
            if s in seen:
                violations.append(Violation(kind="duplicate state", message=f"state '{s}' listed twice", state=s))
            seen.add(s)
    if m.initial not in known:
        violations.append(
            Violation(kind="unknown initial", message=f"initial state '{m.initial}' is not a state", state=m.initial)
        )

    for s in m.transitions:
        if s not in known:
            violations.append(
                Violation(kind="unknown state", message=f"transitions given for unknown state '{s}'", state=s)
            )

    for s in m.states:
        enabled = m.transitions.get(s, {})
        if not enabled:
            violations.append(Violation(kind="no enabled action", message=f"state '{s}' has no enabled action", state=s))
            continue
        for a, dist in enabled.items():
            if a not in declared_actions:
                violations.append(
                    Violation(kind="unknown action", message=f"action '{a}' is not declared", state=s, action=a)
                )
            if not dist:
                violations.append(
                    Violation(kind="empty distribution", message=f"'{s}'/'{a}' has no successors", state=s, action=a)
                )
                continue
            for succ, p in dist.items():
                if succ not in known:
                    violations.append(
                        Violation(
                            kind="unknown state",
                            message=f"'{s}'/'{a}' leads to unknown state '{succ}'",
                            state=s,
                            action=a,
                        )
                    )
                if not (0.0 < p <= 1.0):
                    violations.append(
                        Violation(
                            kind="probability range",
                            message=f"'{s}'/'{a}' -> '{succ}' has probability {p} outside (0, 1]",
                            state=s,
                            action=a,
                        )
                    )
            total = sum(dist.values())
            if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
                violations.append(
                    Violation(
                        kind="distribution sum",
                        message=f"distribution of '{s}'/'{a}' sums to {total}",
                        state=s,
                        action=a,
                    )
                )

    for s in m.labels:
        if s not in known:
            violations.append(Violation(kind="unknown state", message=f"labels given for unknown state '{s}'", state=s))

    return ValidationReport(violations=violations)


def ensure_valid(m: Mdp) -> None:
    """Raise InvalidModelError carrying the full report if m is malformed."""
    report = validate(m)
    if not report.ok:
        first = report.violations[0]
        raise InvalidModelError(
            f"invalid model: {first.message}"
            + (f" (+{len(report.violations) - 1} more)" if len(report.violations) > 1 else ""),
            [v.model_dump(exclude_none=True) for v in report.violations],
        )


def check_state(m: Mdp, state: str) -> None:
    if state not in index_of(m).position:
        raise UnknownStateError(f"unknown state '{state}'", {"state": state})


# ============================================================================
# DENSE INDEX
# ============================================================================


class MdpIndex:
    """
    Dense view of a well-formed Mdp.

    Every (state, action) pair is a "choice" with an integer id; choices are
    numbered state by state in input order. matrix[c] is the successor
    distribution of choice c.
    """

    def __init__(self, m: Mdp):
        self.states: List[str] = list(m.states)
        self.position: Dict[str, int] = {s: i for i, s in enumerate(self.states)}
        n = len(self.states)

        rows: List[np.ndarray] = []
        choice_state: List[int] = []
        self.choice_action: List[str] = []
        self.state_choices: List[List[int]] = []
        for i, s in enumerate(self.states):
            ids = []
            for a, dist in m.transitions[s].items():
                row = np.zeros(n)
                for succ, p in dist.items():
                    row[self.position[succ]] += p
                ids.append(len(rows))
                rows.append(row)
                choice_state.append(i)
                self.choice_action.append(a)
            self.state_choices.append(ids)

        self.matrix = np.vstack(rows) if rows else np.zeros((0, n))
        self.support = self.matrix > 0
        self.choice_state = np.array(choice_state, dtype=int)
        self.initial = self.position[m.initial]

    @property
    def n(self) -> int:
        return len(self.states)

    def choice(self, state: int, action: str) -> int:
        for c in self.state_choices[state]:
            if self.choice_action[c] == action:
                return c
        raise InvalidStrategyError(
            f"action '{action}' is not enabled in state '{self.states[state]}'",
            {"state": self.states[state], "action": action},
        )

    def mask(self, states: Iterable[str]) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        for s in states:
            out[self.position[s]] = True
        return out

    def policy_matrix(self, policy: Sequence[int]) -> np.ndarray:
        """Transition matrix of the chain induced by one choice id per state."""
        return self.matrix[np.asarray(policy, dtype=int)]


def index_of(m: Mdp) -> MdpIndex:
    """Dense index of m, validated and built once per model instance."""
    if m._index is None:
        ensure_valid(m)
        m._index = MdpIndex(m)
    return m._index


# ============================================================================
# GRAPH REACHABILITY
# ============================================================================


def transition_graph(m: Mdp) -> nx.DiGraph:
    """Directed graph with an edge s -> s' whenever some action moves s to s'."""
    graph = nx.DiGraph()
    graph.add_nodes_from(m.states)
    for s, enabled in m.transitions.items():
        for dist in enabled.values():
            graph.add_edges_from((s, succ) for succ, p in dist.items() if p > 0)
    return graph


def reach_set(m: Mdp, t: str) -> FrozenSet[str]:
    """
    Reach(t): states from which t is reachable with positive probability
    under some strategy (t included).

    Raises:
        UnknownStateError: If t is not a state
    """
    check_state(m, t)
    return frozenset(nx.ancestors(transition_graph(m), t) | {t})


def reachable_from(m: Mdp, source: str) -> FrozenSet[str]:
    """Forward closure of source (source included)."""
    check_state(m, source)
    return frozenset(nx.descendants(transition_graph(m), source) | {source})


# ============================================================================
# STRATEGIES AND CHAINS
# ============================================================================


def complete_strategy(m: Mdp, sigma: StrategyTable) -> Dict[str, Dict[str, float]]:
    """
    Check sigma against m and fill in states with a single enabled action.

    Returns:
        Full table state -> action -> probability

    Raises:
        InvalidStrategyError: Unknown state, disabled action, or a missing
            row for a state with a choice
    """
    idx = index_of(m)
    rows: Dict[str, Dict[str, float]] = {}
    for s in sigma.choices:
        if s not in idx.position:
            raise InvalidStrategyError(f"strategy names unknown state '{s}'", {"state": s})
    for s in m.states:
        enabled = m.transitions[s]
        row = sigma.choices.get(s)
        if row is None:
            if len(enabled) != 1:
                raise InvalidStrategyError(f"strategy has no choice for state '{s}'", {"state": s})
            row = {next(iter(enabled)): 1.0}
        for a, p in row.items():
            if a not in enabled and p > 0:
                raise InvalidStrategyError(
                    f"strategy picks action '{a}' not enabled in '{s}'", {"state": s, "action": a}
                )
        rows[s] = {a: p for a, p in row.items() if p > 0}
    return rows


def strategy_policy(m: Mdp, sigma: StrategyTable) -> np.ndarray:
    """Choice ids of a deterministic strategy, one per state."""
    idx = index_of(m)
    rows = complete_strategy(m, sigma)
    return np.array(
        [idx.choice(i, next(iter(rows[s]))) if len(rows[s]) == 1 else -1 for i, s in enumerate(idx.states)],
        dtype=int,
    )


def strategy_matrix(m: Mdp, sigma: StrategyTable) -> np.ndarray:
    """Dense induced transition matrix."""
    idx = index_of(m)
    rows = complete_strategy(m, sigma)
    out = np.zeros((idx.n, idx.n))
    for i, s in enumerate(idx.states):
        for a, p in rows[s].items():
            out[i] += p * idx.matrix[idx.choice(i, a)]
    return out


def induce_chain(m: Mdp, sigma: StrategyTable) -> MarkovChain:
    """
    Markov chain induced by a memoryless strategy:
    P(s, s') = sum over a of sigma(s, a) * delta(s, a, s').

    Raises:
        InvalidStrategyError: If sigma picks a disabled action or misses a state
    """
    rows = complete_strategy(m, sigma)
    matrix: Dict[str, Dict[str, float]] = {}
    for s in m.states:
        row: Dict[str, float] = {}
        for a, weight in rows[s].items():
            for succ, p in m.transitions[s][a].items():
                row[succ] = row.get(succ, 0.0) + weight * p
        matrix[s] = row
    return MarkovChain(states=m.states, initial=m.initial, matrix=matrix)


def _chain_arrays(c: MarkovChain) -> Tuple[Dict[str, int], np.ndarray]:
    if c._dense is None:
        position = {s: i for i, s in enumerate(c.states)}
        dense = np.zeros((len(c.states), len(c.states)))
        for s, row in c.matrix.items():
            for succ, p in row.items():
                dense[position[s], position[succ]] += p
        c._dense = (position, dense)
    return c._dense


def _backward_closure(support: np.ndarray, goal: np.ndarray, through: np.ndarray) -> np.ndarray:
    """States reaching goal along edges leaving states in `through` (goal included)."""
    reached = goal.copy()
    while True:
        grown = reached | (through & support[:, reached].any(axis=1))
        if np.array_equal(grown, reached):
            return reached
        reached = grown


def reach_probabilities(P: np.ndarray, goal: np.ndarray, avoid: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Probability of reaching goal before avoid, from every state of a chain.

    Only states that can reach goal without entering avoid enter the linear
    system; all others are 0, goal states are 1.
    """
    n = P.shape[0]
    avoid = np.zeros(n, dtype=bool) if avoid is None else avoid
    relevant = _backward_closure(P > 0, goal, ~avoid & ~goal)
    x = np.zeros(n)
    x[goal] = 1.0
    unknown = np.flatnonzero(relevant & ~goal)
    if unknown.size:
        system = np.eye(unknown.size) - P[np.ix_(unknown, unknown)]
        rhs = P[np.ix_(unknown, np.flatnonzero(goal))].sum(axis=1)
        try:
            solution = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as e:
            raise InternalSolverError("singular reachability system after pruning", {"reason": str(e)}) from e
        x[unknown] = np.clip(solution, 0.0, 1.0)
    return x


def chain_reach_prob(c: MarkovChain, frm: str, goal: Iterable[str], avoid: Iterable[str] = ()) -> float:
    """
    Probability of reaching goal from `frm` without entering avoid first.

    Args:
        c: Markov chain
        frm: Start state
        goal: Goal states
        avoid: States that stop the run unsuccessfully

    Returns:
        Probability in [0, 1]

    Raises:
        UnknownStateError: Unknown identifier
        InvalidQueryError: goal and avoid overlap
    """
    position, dense = _chain_arrays(c)
    goal, avoid = set(goal), set(avoid)
    for s in {frm} | goal | avoid:
        if s not in position:
            raise UnknownStateError(f"unknown state '{s}'", {"state": s})
    if goal & avoid:
        raise InvalidQueryError("goal and avoid sets overlap", {"states": sorted(goal & avoid)})
    if frm in goal:
        return 1.0
    if frm in avoid:
        return 0.0
    goal_mask = np.zeros(len(position), dtype=bool)
    avoid_mask = np.zeros(len(position), dtype=bool)
    goal_mask[[position[s] for s in goal]] = True
    avoid_mask[[position[s] for s in avoid]] = True
    return float(reach_probabilities(dense, goal_mask, avoid_mask)[position[frm]])


def event_prob_s_before_t(c: MarkovChain, s: str, t: str) -> float:
    """
    Pr(eventually t, visiting s before t) = Pr(reach s avoiding t) * Pr(reach t from s).

    For s = t this is Pr(reach t); for s = initial the first factor is 1.
    """
    if s == t:
        return chain_reach_prob(c, c.initial, {t})
    return chain_reach_prob(c, c.initial, {s}, {t}) * chain_reach_prob(c, s, {t})


# ============================================================================
# OPTIMAL REACHABILITY
# ============================================================================


def _flatten(idx: MdpIndex, allowed: Optional[Sequence[Sequence[int]]]) -> Tuple[np.ndarray, np.ndarray]:
    lists = idx.state_choices if allowed is None else allowed
    flat: List[int] = []
    starts: List[int] = []
    for i, ids in enumerate(lists):
        if not ids:
            raise InternalSolverError(f"no allowed action in state '{idx.states[i]}'")
        starts.append(len(flat))
        flat.extend(ids)
    return np.array(flat, dtype=int), np.array(starts, dtype=int)


def optimal_reach(
    idx: MdpIndex,
    goal: np.ndarray,
    maximize: bool = True,
    allowed: Optional[Sequence[Sequence[int]]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Optimal probability of reaching goal from every state, with an optimal
    deterministic policy.

    Args:
        idx: Dense model
        goal: Boolean goal mask
        maximize: Max (True) or min (False) over strategies
        allowed: Optional per-state lists of admissible choice ids

    Returns:
        (values, policy): values from an exact evaluation of the returned
        policy; policy[i] is a choice id of state i
    """
    flat, starts = _flatten(idx, allowed)
    owner = idx.choice_state[flat]
    support = idx.support[flat]
    matrix = idx.matrix[flat]

    def any_choice(mask_c: np.ndarray) -> np.ndarray:
        return np.logical_or.reduceat(mask_c, starts)

    def all_choices(mask_c: np.ndarray) -> np.ndarray:
        return np.logical_and.reduceat(mask_c, starts)

    if maximize:
        # States that reach goal under some strategy
        exists = goal.copy()
        while True:
            grown = exists | any_choice(support[:, exists].any(axis=1))
            if np.array_equal(grown, exists):
                break
            exists = grown
        zero = ~exists

        # States that reach goal almost surely under some strategy
        keep = exists.copy()
        while True:
            reached = goal.copy()
            while True:
                stays = ~support[:, ~keep].any(axis=1)
                hits = support[:, reached].any(axis=1)
                grown = reached | (keep & any_choice(stays & hits))
                if np.array_equal(grown, reached):
                    break
                reached = grown
            if np.array_equal(reached, keep):
                break
            keep = reached
        one = keep | goal
    else:
        # States that reach goal with positive probability under every strategy
        forced = goal.copy()
        while True:
            grown = forced | all_choices(support[:, forced].any(axis=1))
            if np.array_equal(grown, forced):
                break
            forced = grown
        zero = ~forced
        one = goal.copy()

    x = np.zeros(idx.n)
    x[one] = 1.0
    free = ~(zero | one)
    reduce = np.maximum.reduceat if maximize else np.minimum.reduceat
    steps = 0
    if free.any():
        for steps in range(1, VALUE_ITERATION_MAX_STEPS + 1):
            updated = np.where(free, reduce(matrix @ x, starts), x)
            delta = float(np.max(np.abs(updated - x)))
            x = updated
            if delta < VALUE_ITERATION_TOLERANCE:
                break
        else:
            logger.warning("Value iteration hit step limit", steps=steps, residual=delta)

    q = matrix @ x
    ends = np.append(starts[1:], flat.size)
    policy = np.array([flat[starts[i]] for i in range(idx.n)], dtype=int)

    if maximize:
        optimal = q >= x[owner] - LOCAL_OPTIMALITY_TOLERANCE
        # Attractor over optimal choices so end components do not trap the policy
        done = goal.copy()
        while True:
            progress = optimal & support[:, done].any(axis=1) & ~done[owner]
            newly = np.zeros(idx.n, dtype=bool)
            for pos in np.flatnonzero(progress):
                state = owner[pos]
                if not newly[state]:
                    policy[state] = flat[pos]
                    newly[state] = True
            if not newly.any():
                break
            done |= newly
    else:
        for i in range(idx.n):
            segment = q[starts[i] : ends[i]]
            best = np.flatnonzero(segment <= segment.min() + LOCAL_OPTIMALITY_TOLERANCE)[0]
            policy[i] = flat[starts[i] + best]

    values = reach_probabilities(idx.policy_matrix(policy), goal)
    logger.debug("Optimal reachability", maximize=maximize, steps=steps, states=idx.n)
    return values, policy


def max_reach_prob(m: Mdp, t: str) -> ReachResult:
    """
    Maximal probability of reaching t, from the initial state and per state.

    Args:
        m: Model
        t: Target state

    Returns:
        ReachResult with p* and the optimal value of every state
    """
    check_state(m, t)
    idx = index_of(m)
    values, _ = optimal_reach(idx, idx.mask([t]), maximize=True)
    return ReachResult(
        p_star=float(values[idx.initial]),
        values={s: float(values[i]) for i, s in enumerate(idx.states)},
    )


# ============================================================================
# PATHS
# ============================================================================


def check_path(m: Mdp, tau: PathSpec) -> None:
    """
    Check a path against a model: starts at the initial state, every action
    enabled, every step has positive probability.

    Raises:
        UnknownStateError / InvalidPathError
    """
    for s in tau.states:
        check_state(m, s)
    if tau.states[0] != m.initial:
        raise InvalidPathError(
            f"path starts at '{tau.states[0]}', not at the initial state '{m.initial}'", {"path": str(tau)}
        )
    for s, a, succ in tau.steps():
        if a not in m.transitions[s]:
            raise InvalidPathError(f"action '{a}' is not enabled in '{s}'", {"state": s, "action": a})
        if m.probability(s, a, succ) <= 0:
            raise InvalidPathError(
                f"step '{s}' -{a}-> '{succ}' has probability 0", {"state": s, "action": a, "successor": succ}
            )


def path_probability(m: Mdp, tau: PathSpec, sigma: Optional[Mapping[str, Mapping[str, float]]] = None) -> float:
    """Product of step probabilities along tau, weighted by sigma's action choices if given."""
    prob = 1.0
    for s, a, succ in tau.steps():
        weight = 1.0 if sigma is None else sigma[s].get(a, 0.0)
        prob *= weight * m.probability(s, a, succ)
    return prob
