"""
Tests for the memory product and path-prefix preprocessing.
"""

import numpy as np
import pytest

from mdpattr.errors import ImportanceUndefinedError, InvalidPathError, InvalidQueryError, UnknownStateError
from mdpattr.models.mdp import PathSpec, StrategyTable
from mdpattr.models.product import BYPASSED, VISITED
from mdpattr.services.generators import random_strategy
from mdpattr.services.mdp_core import chain_reach_prob, event_prob_s_before_t, induce_chain, validate
from mdpattr.services.preprocess import (
    absorbing_copy,
    fix_path_prefix,
    forced_product_actions,
    lift_strategy,
    memory_product,
    memory_table,
    product_state_of,
)


class TestMemoryProduct:
    """Tests for the pivot-visited product."""

    def test_state_count_pruned(self, nonmono_mdp):
        """2|S| - 1 states when (pivot, BYPASSED) is dropped."""
        p = memory_product(nonmono_mdp, "s1")
        assert p.product.states == (
            "s0.B", "s0.T", "s1.T", "s2.B", "s2.T", "sink.B", "sink.T", "s_t.B", "s_t.T",
        )

    def test_state_count_unpruned(self, nonmono_mdp, loan_mdp):
        """2|S| states without pruning."""
        assert len(memory_product(nonmono_mdp, "s1", prune=False).product.states) == 10
        assert len(memory_product(loan_mdp, "Consultation", prune=False).product.states) == 20
        assert len(memory_product(loan_mdp, "Consultation").product.states) == 19

    def test_entering_pivot_sets_the_bit(self, nonmono_mdp):
        """Moves into the pivot land in VISITED mode."""
        p = memory_product(nonmono_mdp, "s1")
        assert p.product.initial == "s0.B"
        assert p.product.transitions["s0.B"]["a"] == pytest.approx({"s1.T": 0.1, "s2.B": 0.9})
        assert p.product.transitions["s2.B"]["b"] == {"s1.T": 1.0}
        assert p.product.transitions["s2.T"]["a"] == {"s_t.T": 1.0}

    def test_product_is_valid(self, loan_mdp):
        """The product is itself a well-formed MDP with exact probabilities."""
        p = memory_product(loan_mdp, "Consultation")
        assert validate(p.product).ok
        assert p.product.exact["s0.B"]["Apply"] == {"Application.B": "19/20", "Error.B": "1/20"}

    def test_back_map(self, nonmono_mdp):
        """Every product state maps back to its base state and mode."""
        p = memory_product(nonmono_mdp, "s1")
        assert p.base_of("s2.T") == "s2"
        assert p.mode_of("s2.T") == VISITED
        assert product_state_of(p, "s1", BYPASSED) is None
        assert product_state_of(p, "s1", VISITED) == "s1.T"

    def test_pivot_equal_to_initial(self, nonmono_mdp):
        """The initial state cannot be a pivot."""
        with pytest.raises(InvalidQueryError):
            memory_product(nonmono_mdp, "s0")

    def test_unknown_pivot(self, nonmono_mdp):
        """Unknown pivots raise UnknownStateError."""
        with pytest.raises(UnknownStateError):
            memory_product(nonmono_mdp, "s9")

    def test_lifted_strategy_preserves_reach(self, loan_mdp):
        """A lifted base strategy reaches the target copies with the base probability."""
        sigma = StrategyTable.deterministic(
            {"s0": "Apply", "Error": "Consult", "Consultation": "Apply", "Rework": "Submit"}
        )
        p = memory_product(loan_mdp, "Consultation")
        base = chain_reach_prob(induce_chain(loan_mdp, sigma), "s0", {"Granted"})
        lifted = chain_reach_prob(induce_chain(p.product, lift_strategy(p, sigma)), "s0.B", {"Granted.T", "Granted.B"})
        assert lifted == pytest.approx(base)

    @pytest.mark.parametrize("seed", range(20))
    def test_visited_copy_measures_the_event(self, random_mdp_factory, seed):
        """Reaching (t, VISITED) under a lifted strategy is Pr(visit s before t, reach t)."""
        m = random_mdp_factory(seed, states=7, actions=2)
        rng = np.random.default_rng(seed)
        others = [s for s in m.states if s != m.initial]
        for draw in range(10):
            sigma = random_strategy(m, seed=100 * seed + draw)
            pivot = others[int(rng.integers(0, len(others)))]
            p = memory_product(m, pivot)
            event = event_prob_s_before_t(induce_chain(m, sigma), pivot, "t")
            visited = chain_reach_prob(
                induce_chain(p.product, lift_strategy(p, sigma)), p.product.initial, {product_state_of(p, "t", VISITED)}
            )
            assert visited == pytest.approx(event, abs=1e-9)

    def test_memory_table(self, nonmono_mdp):
        """A product strategy reads back as two mode tables."""
        p = memory_product(nonmono_mdp, "s1")
        sigma = StrategyTable.deterministic({"s2.B": "a", "s2.T": "b"})
        tables = memory_table(p, sigma)
        assert tables["not_visited"]["s2"] == {"a": 1.0}
        assert tables["visited"]["s2"] == {"b": 1.0}


class TestPathPrefix:
    """Tests for forced path prefixes."""

    def test_forced_actions_and_probability(self, loan_mdp):
        """Forced actions along the path and the prefix probability."""
        forced, prefix = fix_path_prefix(loan_mdp, PathSpec.parse("s0,Apply,Error"), "Granted")
        assert forced == {"s0": "Apply"}
        assert prefix.prefix_probability == pytest.approx(0.05)

    def test_forced_in_both_modes(self, loan_mdp):
        """Forced base actions apply to both memory copies."""
        p = memory_product(loan_mdp, "Error")
        assert forced_product_actions(p, {"s0": "Apply"}) == {"s0.B": "Apply", "s0.T": "Apply"}

    def test_path_through_target(self, loan_mdp):
        """Paths may not visit the target."""
        with pytest.raises(InvalidPathError):
            fix_path_prefix(
                loan_mdp,
                PathSpec.parse("s0,Consult,Consultation,Apply,Application+,Provider,Granted"),
                "Granted",
            )

    def test_path_ending_outside_reach(self, loan_mdp):
        """A path ending where the target is unreachable has undefined importance."""
        with pytest.raises(ImportanceUndefinedError):
            fix_path_prefix(loan_mdp, PathSpec.parse("s0,Consult,Consultation,Angry,Angry"), "Granted")


class TestAbsorbingCopy:
    """Tests for making states absorbing."""

    def test_goal_only_stays(self, loan_mdp):
        """Made-absorbing states offer a single stay loop."""
        m = absorbing_copy(loan_mdp, ["Consultation"])
        assert m.transitions["Consultation"] == {"stay": {"Consultation": 1.0}}
        assert m.exact["Consultation"] == {"stay": {"Consultation": "1"}}
        assert validate(m).ok
