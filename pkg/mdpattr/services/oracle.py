"""
Oracle Service

Brute-force ground truth for small models: enumerates every deterministic
memoryless strategy and evaluates it with exact rational arithmetic.

Probabilities come from the model's exact "p/q" texts where present;
otherwise the float is converted exactly (0.1 means 1/10 only if given as
text or as the literal 0.1).
"""

import itertools
from fractions import Fraction
from math import lcm, prod
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, model_validator

from mdpattr.config import settings
from mdpattr.constants.numerics import IMPROVEMENT_TOLERANCE, REACH_OPTIMAL_TOLERANCE
from mdpattr.errors import (
    BudgetExceededError,
    ImportanceUndefinedError,
    InternalSolverError,
    InvalidModelError,
    InvalidQueryError,
    UnknownStateError,
)
from mdpattr.models.importance import ImportanceInterval
from mdpattr.models.mdp import Mdp, PathSpec, StrategyTable
from mdpattr.models.optimization import EncodingConfig
from mdpattr.models.product import BYPASSED, VISITED
from mdpattr.services.mdp_core import check_path, check_state, complete_strategy, index_of, reachable_from
from mdpattr.services.preprocess import (
    absorbing_copy,
    fix_path_prefix,
    forced_product_actions,
    memory_product,
    product_state_of,
)


class RationalChain(BaseModel):
    """Markov chain with exact rational rows."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    states: Tuple[str, ...]
    initial: str
    rows: Dict[str, Dict[str, Fraction]]

    @model_validator(mode="after")
    def check_rows(self) -> "RationalChain":
        for s in self.states:
            total = sum(self.rows.get(s, {}).values(), Fraction(0))
            if total != 1:
                raise InvalidModelError(f"rational row for '{s}' sums to {total}", {"state": s})
        return self


def rational_probability(m: Mdp, state: str, action: str, successor: str) -> Fraction:
    """Exact transition probability."""
    text = m.exact.get(state, {}).get(action, {}).get(successor)
    if text is not None:
        return Fraction(text)
    return Fraction(repr(m.probability(state, action, successor)))


def _rows_for(m: Mdp, choice: Mapping[str, Mapping[str, Fraction]]) -> Dict[str, Dict[str, Fraction]]:
    rows: Dict[str, Dict[str, Fraction]] = {}
    for s in m.states:
        row: Dict[str, Fraction] = {}
        for a, weight in choice[s].items():
            for succ in m.transitions[s][a]:
                row[succ] = row.get(succ, Fraction(0)) + weight * rational_probability(m, s, a, succ)
        rows[s] = {succ: p for succ, p in row.items() if p != 0}
    return rows


def rational_chain(m: Mdp, sigma: StrategyTable) -> RationalChain:
    """Induced chain of a strategy, in exact arithmetic."""
    rows = complete_strategy(m, sigma)
    choice = {s: {a: Fraction(repr(w)) for a, w in row.items()} for s, row in rows.items()}
    return RationalChain(states=m.states, initial=m.initial, rows=_rows_for(m, choice))


def _solve_fraction_free(matrix: List[List[int]], rhs: List[int]) -> List[Fraction]:
    """Bareiss elimination on an integer system, then exact back-substitution."""
    n = len(matrix)
    a = [row[:] + [b] for row, b in zip(matrix, rhs)]
    previous = 1
    for k in range(n):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                raise InternalSolverError("singular rational reachability system")
            a[k], a[swap] = a[swap], a[k]
        for i in range(k + 1, n):
            for j in range(k + 1, n + 1):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // previous
            a[i][k] = 0
        previous = a[k][k]
    x = [Fraction(0)] * n
    for i in reversed(range(n)):
        acc = Fraction(a[i][n]) - sum((a[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        x[i] = acc / a[i][i]
    return x


def rational_chain_solve(c: RationalChain, frm: str, goal: Iterable[str], avoid: Iterable[str] = ()) -> Fraction:
    """
    Exact probability of reaching goal from `frm` without entering avoid.

    Raises:
        UnknownStateError: Unknown identifier
        InvalidQueryError: goal and avoid overlap
    """
    goal, avoid = set(goal), set(avoid)
    known = set(c.states)
    for s in {frm} | goal | avoid:
        if s not in known:
            raise UnknownStateError(f"unknown state '{s}'", {"state": s})
    if goal & avoid:
        raise InvalidQueryError("goal and avoid sets overlap", {"states": sorted(goal & avoid)})
    if frm in goal:
        return Fraction(1)
    if frm in avoid:
        return Fraction(0)

    # States that reach goal without passing avoid
    relevant = set(goal)
    changed = True
    while changed:
        changed = False
        for s in c.states:
            if s in relevant or s in avoid:
                continue
            if any(succ in relevant for succ in c.rows[s]):
                relevant.add(s)
                changed = True
    if frm not in relevant:
        return Fraction(0)

    unknown = [s for s in c.states if s in relevant and s not in goal]
    position = {s: i for i, s in enumerate(unknown)}
    matrix: List[List[int]] = []
    rhs: List[int] = []
    for s in unknown:
        row = [Fraction(0)] * len(unknown)
        row[position[s]] += 1
        b = Fraction(0)
        for succ, p in c.rows[s].items():
            if succ in goal:
                b += p
            elif succ in position:
                row[position[succ]] -= p
        scale = 1
        for value in row + [b]:
            scale = lcm(scale, value.denominator)
        matrix.append([int(value * scale) for value in row])
        rhs.append(int(b * scale))
    return _solve_fraction_free(matrix, rhs)[position[frm]]


# ============================================================================
# ENUMERATION
# ============================================================================


def enumerate_deterministic(
    m: Mdp,
    allowed: Optional[Mapping[str, Sequence[str]]] = None,
    branch_states: Optional[Iterable[str]] = None,
) -> Iterator[StrategyTable]:
    """
    Every deterministic memoryless strategy, once, in lexicographic order
    (states in model order, actions in enabled order).

    Args:
        m: Model
        allowed: Per-state admissible actions (default: all enabled)
        branch_states: Only these states branch; the others take their first
            admissible action

    Raises:
        BudgetExceededError: More strategies than settings.ENUMERATION_LIMIT
    """
    index_of(m)
    branching = set(m.states if branch_states is None else branch_states)
    options: List[List[str]] = []
    for s in m.states:
        actions = list(allowed[s]) if allowed is not None and s in allowed else m.enabled(s)
        options.append(actions if s in branching else actions[:1])
    count = prod(len(o) for o in options)
    if count > settings.ENUMERATION_LIMIT:
        raise BudgetExceededError(
            f"{count} deterministic strategies exceed the enumeration limit",
            {"strategies": count, "limit": settings.ENUMERATION_LIMIT},
        )
    for combination in itertools.product(*options):
        yield StrategyTable.deterministic(dict(zip(m.states, combination)))


def _max_reach_exact(m: Mdp, t: str) -> Fraction:
    """p* by enumeration over the base model with t absorbing."""
    model = absorbing_copy(m, [t])
    live = reachable_from(model, model.initial)
    best = Fraction(0)
    for sigma in enumerate_deterministic(model, branch_states=live):
        best = max(best, rational_chain_solve(rational_chain(model, sigma), model.initial, {t}))
    return best


def brute_force_bounds(
    m: Mdp,
    subject: Union[str, PathSpec],
    t: str,
    strategy_class: str = "all",
    epsilon: Optional[float] = None,
    normalized: bool = True,
) -> ImportanceInterval:
    """
    Exact min/max importance by exhaustive enumeration of deterministic
    strategies on the memory product.

    State subjects use the product with the subject as pivot (the target as
    pivot for the initial state); path subjects force the path's actions and
    scale the numerator by the exact prefix probability.

    Raises:
        ImportanceUndefinedError: No enumerated strategy passes the class filter
        BudgetExceededError: Too many strategies
    """
    check_state(m, t)
    epsilon = EncodingConfig().epsilon if epsilon is None else epsilon
    is_path = isinstance(subject, PathSpec)
    if is_path:
        check_path(m, subject)
    else:
        check_state(m, subject)

    p_star = _max_reach_exact(m, t)
    if p_star == 0 or (strategy_class == "all" and float(p_star) < epsilon):
        raise ImportanceUndefinedError(
            f"importance undefined for target '{t}'", {"target": t, "p_star": float(p_star)}
        )

    klass = "pathFollowing" if is_path and strategy_class == "all" else strategy_class
    if t == m.initial or (not is_path and subject == m.initial and normalized) or (
        is_path and len(subject.items) == 1
    ):
        one = Fraction(1)
        return ImportanceInterval(
            lower=1.0,
            upper=1.0,
            normalized=normalized,
            strategy_class=klass,
            path_following=is_path,
            witness_space="base",
            lower_exact=str(one),
            upper_exact=str(one),
        )

    coefficient = Fraction(1)
    forced: Dict[str, str] = {}
    if is_path:
        base_forced, _ = fix_path_prefix(m, subject, t)
        pivot = subject.last
        for s, a, succ in subject.steps():
            coefficient *= rational_probability(m, s, a, succ)
    else:
        pivot = t if subject == m.initial else subject
    p = memory_product(m, pivot)
    if is_path:
        forced = forced_product_actions(p, base_forced)

    top = product_state_of(p, t, VISITED)
    bottom = product_state_of(p, t, BYPASSED)
    goals = [g for g in (top, bottom) if g is not None]
    model = absorbing_copy(p.product, goals)
    numerator_state = p.state(pivot, VISITED) if is_path else model.initial
    allowed = {s: [a] for s, a in forced.items() if s not in goals}
    live = reachable_from(model, model.initial)

    best: Dict[str, Optional[Tuple[Fraction, StrategyTable]]] = {"min": None, "max": None}
    for sigma in enumerate_deterministic(model, allowed=allowed, branch_states=live):
        chain = rational_chain(model, sigma)
        reach_top = rational_chain_solve(chain, model.initial, {top})
        reach_bottom = rational_chain_solve(chain, model.initial, {bottom}) if bottom else Fraction(0)
        reach = reach_top + reach_bottom
        if strategy_class == "reachOptimal":
            if abs(float(reach - p_star)) > REACH_OPTIMAL_TOLERANCE:
                continue
        elif float(reach) < epsilon - IMPROVEMENT_TOLERANCE:
            continue
        numerator = coefficient * (
            reach_top if numerator_state == model.initial else rational_chain_solve(chain, numerator_state, {top})
        )
        value = numerator / reach if normalized else numerator
        if best["min"] is None or value < best["min"][0]:
            best["min"] = (value, sigma)
        if best["max"] is None or value > best["max"][0]:
            best["max"] = (value, sigma)

    if best["min"] is None:
        raise ImportanceUndefinedError(
            f"importance undefined: no strategy in class '{strategy_class}' reaches '{t}'",
            {"target": t, "strategy_class": strategy_class},
        )

    def witness(sigma: StrategyTable) -> StrategyTable:
        choices = sigma.as_mapping()
        for goal in goals:
            choices[goal] = p.product.enabled(goal)[0]
        return StrategyTable.deterministic(choices)

    low, high = best["min"], best["max"]
    return ImportanceInterval(
        lower=float(low[0]),
        upper=float(high[0]),
        lower_witness=witness(low[1]),
        upper_witness=witness(high[1]),
        normalized=normalized,
        strategy_class=klass,
        path_following=is_path,
        witness_space="product",
        lower_exact=str(low[0]),
        upper_exact=str(high[0]),
        pivot=pivot,
    )
