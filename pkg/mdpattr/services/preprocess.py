"""
Preprocessing Service

Memory-bit product for a pivot state, and path-prefix constraints.

In the product every state carries a mode: BYPASSED until the run enters the
pivot, VISITED from then on. Reaching (t, VISITED) therefore means "t reached
after visiting the pivot", and (t, BYPASSED) means "t reached without it".
"""

from typing import Dict, Mapping, Optional, Tuple

from mdpattr.constants.examples import STAY_ACTION
from mdpattr.errors import ImportanceUndefinedError, InvalidPathError, InvalidQueryError
from mdpattr.models.mdp import Mdp, PathSpec, StrategyTable
from mdpattr.models.product import BYPASSED, MODES, VISITED, PrefixConstraint, ProductMdp, product_state_name
from mdpattr.services.mdp_core import check_path, check_state, index_of, reach_set


def memory_product(m: Mdp, pivot: str, prune: bool = True) -> ProductMdp:
    """
    Build the product of m with one "pivot visited" bit.

    Args:
        m: Base model
        pivot: Pivot state (must differ from the initial state)
        prune: Drop the unreachable (pivot, BYPASSED) copy

    Returns:
        ProductMdp with 2|S| states (2|S| - 1 when pruned), initial (s0, BYPASSED)

    Raises:
        UnknownStateError: Unknown pivot
        InvalidQueryError: pivot is the initial state
    """
    index_of(m)
    check_state(m, pivot)
    if pivot == m.initial:
        raise InvalidQueryError(
            "pivot equals the initial state; its importance is 1 by definition", {"pivot": pivot}
        )

    def target(succ: str, mode: str) -> str:
        return product_state_name(succ, VISITED if succ == pivot else mode)

    states = []
    back_map: Dict[str, Tuple[str, str]] = {}
    for s in m.states:
        for mode in MODES:
            if prune and s == pivot and mode == BYPASSED:
                continue
            name = product_state_name(s, mode)
            states.append(name)
            back_map[name] = (s, mode)

    transitions: Dict[str, Dict[str, Dict[str, float]]] = {}
    exact: Dict[str, Dict[str, Dict[str, str]]] = {}
    for name, (s, mode) in back_map.items():
        transitions[name] = {}
        for a, dist in m.transitions[s].items():
            row: Dict[str, float] = {}
            for succ, p in dist.items():
                key = target(succ, mode)
                row[key] = row.get(key, 0.0) + p
            transitions[name][a] = row
            if s in m.exact and a in m.exact[s]:
                exact.setdefault(name, {})[a] = {target(succ, mode): text for succ, text in m.exact[s][a].items()}

    product = Mdp(
        states=tuple(states),
        actions=m.actions,
        initial=product_state_name(m.initial, BYPASSED),
        transitions=transitions,
        labels={name: m.labels[s] for name, (s, _) in back_map.items() if s in m.labels},
        exact=exact,
    )
    return ProductMdp(base=m, pivot=pivot, product=product, back_map=back_map, pruned=prune)


def lift_strategy(p: ProductMdp, sigma: StrategyTable) -> StrategyTable:
    """Product strategy that plays the base strategy and ignores the mode."""
    choices = {name: dict(sigma.choices[s]) for name, (s, _) in p.back_map.items() if s in sigma.choices}
    return StrategyTable(kind=sigma.kind, choices=choices)


def memory_table(p: ProductMdp, sigma: StrategyTable) -> Dict[str, Dict[str, Dict[str, float]]]:
    """
    Read a product strategy as a base strategy with two memory modes.

    Returns:
        {"not_visited": {state: row}, "visited": {state: row}}
    """
    tables: Dict[str, Dict[str, Dict[str, float]]] = {"not_visited": {}, "visited": {}}
    for name, row in sigma.choices.items():
        s, mode = p.back_map[name]
        tables["visited" if mode == VISITED else "not_visited"][s] = dict(row)
    return tables


def fix_path_prefix(m: Mdp, tau: PathSpec, t: str) -> Tuple[Dict[str, str], PrefixConstraint]:
    """
    Forced action choices along tau and the probability of observing it.

    Args:
        m: Base model
        tau: Path starting at the initial state
        t: Target state

    Returns:
        (forced actions s_i -> a_i for i < n, prefix constraint)

    Raises:
        InvalidPathError: tau is malformed for m or visits t
        ImportanceUndefinedError: the last state cannot reach t
    """
    check_state(m, t)
    check_path(m, tau)
    if t in tau.states:
        raise InvalidPathError(f"path visits the target '{t}'", {"path": str(tau), "target": t})
    if tau.last not in reach_set(m, t):
        raise ImportanceUndefinedError(
            f"path importance undefined: '{tau.last}' cannot reach '{t}'", {"path": str(tau), "target": t}
        )
    forced = {s: a for s, a, _ in tau.steps()}
    prob = 1.0
    for s, a, succ in tau.steps():
        prob *= m.probability(s, a, succ)
    return forced, PrefixConstraint(path=tau, prefix_probability=prob)


def forced_product_actions(p: ProductMdp, forced: Mapping[str, str]) -> Dict[str, str]:
    """Extend forced base actions to both memory copies of each state."""
    out: Dict[str, str] = {}
    for name, (s, _) in p.back_map.items():
        if s in forced:
            out[name] = forced[s]
    return out


def product_state_of(p: ProductMdp, base_state: str, mode: str) -> Optional[str]:
    """Product state name, or None when that copy was pruned."""
    name = product_state_name(base_state, mode)
    return name if name in p.back_map else None


def absorbing_copy(m: Mdp, states) -> Mdp:
    """
    Copy of m in which the given states only loop to themselves.

    Events of interest end at the first visit of the target, so the search
    works on this copy; behaviour after the target never matters.
    """
    states = set(states)
    transitions = {
        s: ({STAY_ACTION: {s: 1.0}} if s in states else enabled) for s, enabled in m.transitions.items()
    }
    exact = {s: rows for s, rows in m.exact.items() if s not in states}
    for s in states:
        exact[s] = {STAY_ACTION: {s: "1"}}
    actions = m.actions if STAY_ACTION in m.actions else m.actions + (STAY_ACTION,)
    return Mdp(
        states=m.states, actions=actions, initial=m.initial, transitions=transitions, labels=m.labels, exact=exact
    )
