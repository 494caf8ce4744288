"""
Importance Service

Importance of a state or a path for reaching a target:

- under a fixed strategy (probability of the event divided by Pr(reach t))
- as lower/upper bounds over a strategy class, by exact search on the
  memory product

Default values: the initial state and the target always have importance 1.
"""

from typing import Dict, Optional, Tuple

from mdpattr.errors import BudgetExceededError, ImportanceUndefinedError, InvalidPathError
from mdpattr.middleware.logging_config import get_logger
from mdpattr.models.importance import ImportanceInterval, ImportanceQuery
from mdpattr.models.mdp import Mdp, PathSpec, StrategyTable
from mdpattr.models.optimization import EncodingConfig, SolveResult
from mdpattr.models.product import VISITED
from mdpattr.services.mdp_core import (
    chain_reach_prob,
    check_path,
    check_state,
    complete_strategy,
    event_prob_s_before_t,
    index_of,
    induce_chain,
    max_reach_prob,
    optimal_reach,
    path_probability,
    reach_set,
    reachable_from,
)
from mdpattr.services.preprocess import fix_path_prefix, forced_product_actions, memory_product
from mdpattr.services.solve import filter_reach_optimal_actions, solve_exact

logger = get_logger(__name__)


# ============================================================================
# UNDER A FIXED STRATEGY
# ============================================================================


def _reach_under(m: Mdp, sigma: StrategyTable, t: str):
    chain = induce_chain(m, sigma)
    reach = chain_reach_prob(chain, m.initial, {t})
    if reach <= 0:
        raise ImportanceUndefinedError(
            f"importance undefined: the strategy never reaches '{t}'", {"target": t}
        )
    return chain, reach


def state_importance_under(m: Mdp, sigma: StrategyTable, state: str, t: str) -> float:
    """
    Importance of a state under a strategy.

    Args:
        m: Model
        sigma: Memoryless strategy of m
        state: Subject state
        t: Target state

    Returns:
        Pr(reach t, visiting state before t) / Pr(reach t), in [0, 1]

    Raises:
        ImportanceUndefinedError: sigma reaches t with probability 0
    """
    check_state(m, state)
    check_state(m, t)
    chain, reach = _reach_under(m, sigma, t)
    return min(1.0, max(0.0, event_prob_s_before_t(chain, state, t) / reach))


def path_importance_under(m: Mdp, sigma: StrategyTable, tau: PathSpec, t: str) -> float:
    """
    Importance of a path under a strategy: probability of following tau as a
    prefix and then reaching t, divided by Pr(reach t).

    Raises:
        InvalidPathError: tau is malformed or visits t
        ImportanceUndefinedError: sigma never reaches t, or tau ends outside Reach(t)
    """
    check_state(m, t)
    check_path(m, tau)
    if t in tau.states:
        raise InvalidPathError(f"path visits the target '{t}'", {"path": str(tau), "target": t})
    if tau.last not in reach_set(m, t):
        raise ImportanceUndefinedError(
            f"path importance undefined: '{tau.last}' cannot reach '{t}'", {"path": str(tau), "target": t}
        )
    chain, reach = _reach_under(m, sigma, t)
    prefix = path_probability(m, tau, complete_strategy(m, sigma))
    if prefix <= 0:
        return 0.0
    return min(1.0, max(0.0, prefix * chain_reach_prob(chain, tau.last, {t}) / reach))


# ============================================================================
# BOUNDS
# ============================================================================


def _config(q: ImportanceQuery, cfg: Optional[EncodingConfig]) -> EncodingConfig:
    cfg = cfg or EncodingConfig()
    if q.epsilon is not None:
        cfg = cfg.model_copy(update={"epsilon": q.epsilon})
    return cfg


def _require_defined(m: Mdp, t: str, strategy_class: str, cfg: EncodingConfig) -> float:
    p_star = max_reach_prob(m, t).p_star
    threshold = cfg.epsilon if strategy_class == "all" else 0.0
    if p_star <= 0 or p_star < threshold:
        raise ImportanceUndefinedError(
            f"importance undefined for target '{t}': no admissible strategy reaches it",
            {"target": t, "p_star": p_star, "epsilon": cfg.epsilon},
        )
    return p_star


def _base_witness(m: Mdp, t: str) -> StrategyTable:
    """Deterministic strategy maximizing Pr(reach t)."""
    idx = index_of(m)
    _, policy = optimal_reach(idx, idx.mask([t]), maximize=True)
    return StrategyTable.deterministic({s: idx.choice_action[policy[i]] for i, s in enumerate(idx.states)})


def _senses(sense: str) -> Tuple[str, ...]:
    return ("min", "max") if sense == "both" else (sense,)


def _constant_interval(q: ImportanceQuery, value: float, witness: StrategyTable, **extra) -> ImportanceInterval:
    wants = _senses(q.sense)
    return ImportanceInterval(
        lower=value if "min" in wants else None,
        upper=value if "max" in wants else None,
        lower_witness=witness if "min" in wants else None,
        upper_witness=witness if "max" in wants else None,
        normalized=q.normalized,
        strategy_class=extra.pop("strategy_class", q.strategy_class),
        witness_space="base",
        lower_exact=str(int(value)) if "min" in wants and value in (0.0, 1.0) else None,
        upper_exact=str(int(value)) if "max" in wants and value in (0.0, 1.0) else None,
        **extra,
    )


def _run(q: ImportanceQuery, solve_one, **extra) -> ImportanceInterval:
    results: Dict[str, SolveResult] = {}
    for sense in _senses(q.sense):
        result = solve_one(sense)
        if result.status in ("undefined", "infeasibleClass"):
            raise ImportanceUndefinedError(
                f"importance undefined: no strategy in class '{q.strategy_class}' reaches '{q.target}'",
                {"target": q.target, "subject": q.subject_text, "status": result.status},
            )
        results[sense] = result
    status = "budget" if any(r.status == "budget" for r in results.values()) else "optimal"
    low, high = results.get("min"), results.get("max")
    return ImportanceInterval(
        lower=low.value if low else None,
        upper=high.value if high else None,
        lower_witness=low.witness if low else None,
        upper_witness=high.witness if high else None,
        normalized=q.normalized,
        strategy_class=extra.pop("strategy_class", q.strategy_class),
        witness_space="product",
        status=status,
        **extra,
    )


def state_importance_bounds(m: Mdp, q: ImportanceQuery, cfg: Optional[EncodingConfig] = None) -> ImportanceInterval:
    """
    Lower/upper importance of a state over a strategy class.

    Args:
        m: Model
        q: Query with a state subject
        cfg: Encoding configuration (epsilon)

    Returns:
        ImportanceInterval with witnesses. Searched over deterministic
        memoryless strategies of the memory product.

    Raises:
        ImportanceUndefinedError: no strategy of the class reaches the target
    """
    state, t = q.state, q.target
    check_state(m, state)
    check_state(m, t)
    cfg = _config(q, cfg)
    _require_defined(m, t, q.strategy_class, cfg)

    if state in (m.initial, t) and (q.normalized or t == m.initial):
        return _constant_interval(q, 1.0, _base_witness(m, t))
    if state not in reach_set(m, t) or state not in reachable_from(m, m.initial):
        return _constant_interval(q, 0.0, _base_witness(m, t))

    # Absolute importance of s0 or t is Pr(reach t): the pivot-t product measures it
    pivot = t if state == m.initial else state
    product = memory_product(m, pivot)
    log = logger.bind(state=state, target=t, strategy_class=q.strategy_class, normalized=q.normalized)
    log.debug("Bounding state importance", product_states=len(product.product.states))
    return _run(
        q, lambda sense: solve_exact(product, t, sense, q.strategy_class, cfg, normalized=q.normalized),
        pivot=pivot,
    )


def path_importance_bounds(m: Mdp, q: ImportanceQuery, cfg: Optional[EncodingConfig] = None) -> ImportanceInterval:
    """
    Lower/upper importance of a path over strategies that follow it.

    The path's actions are forced at every path state in both memory modes;
    the numerator is prefix probability * Pr(reach (t, VISITED) from the
    last path state).

    Raises:
        InvalidPathError: malformed path, or the path visits t
        ImportanceUndefinedError: the path ends outside Reach(t), or no
            path-following strategy of the class reaches t
    """
    tau, t = q.path, q.target
    check_state(m, t)
    cfg = _config(q, cfg)
    klass = "pathFollowing" if q.strategy_class == "all" else "reachOptimal"

    if len(tau.items) == 1:
        check_path(m, tau)
        if t == tau.last:
            raise InvalidPathError(f"path visits the target '{t}'", {"path": str(tau), "target": t})
        _require_defined(m, t, q.strategy_class, cfg)
        return _constant_interval(q, 1.0, _base_witness(m, t), strategy_class=klass, path_following=True)

    forced, prefix = fix_path_prefix(m, tau, t)
    _require_defined(m, t, q.strategy_class, cfg)
    if q.strategy_class == "reachOptimal":
        keep = filter_reach_optimal_actions(m, t)
        if any(a not in keep[s] for s, a in forced.items()):
            raise ImportanceUndefinedError(
                "importance undefined: the path takes an action no reach-optimal strategy takes",
                {"path": str(tau), "target": t},
            )

    product = memory_product(m, tau.last)
    forced_product = forced_product_actions(product, forced)
    numerator_state = product.state(tau.last, VISITED)
    return _run(
        q,
        lambda sense: solve_exact(
            product,
            t,
            sense,
            q.strategy_class,
            cfg,
            forced=forced_product,
            numerator_state=numerator_state,
            coefficient=prefix.prefix_probability,
            normalized=q.normalized,
        ),
        strategy_class=klass,
        path_following=True,
        pivot=tau.last,
    )


def absolute_importance_bounds(
    m: Mdp,
    state: str,
    t: str,
    strategy_class: str = "all",
    cfg: Optional[EncodingConfig] = None,
) -> ImportanceInterval:
    """Bounds of Pr(reach t, visiting state before t) without normalization."""
    q = ImportanceQuery(target=t, state=state, strategy_class=strategy_class, normalized=False)
    return state_importance_bounds(m, q, cfg)


def importance_bounds(m: Mdp, q: ImportanceQuery, cfg: Optional[EncodingConfig] = None) -> ImportanceInterval:
    """Dispatch a query to the state or path bound computation."""
    if q.path is not None:
        return path_importance_bounds(m, q, cfg)
    return state_importance_bounds(m, q, cfg)


def require_complete(interval: ImportanceInterval) -> ImportanceInterval:
    """Raise BudgetExceededError when an interval came from a truncated search."""
    if interval.status == "budget":
        raise BudgetExceededError(
            "search budget exhausted; bounds are the best found, not proven optimal",
            {"lower": interval.lower, "upper": interval.upper},
        )
    return interval
