"""
Tests for the MDP core: validation, reachability, induced chains and paths.
"""

import pytest

from mdpattr.errors import (
    InvalidModelError,
    InvalidPathError,
    InvalidQueryError,
    InvalidStrategyError,
    UnknownStateError,
)
from mdpattr.models.mdp import Mdp, PathSpec, StrategyTable
from mdpattr.models.requests import ModelFile, TransitionRow
from mdpattr.services.generators import random_strategy
from mdpattr.services.mdp_core import (
    chain_reach_prob,
    check_path,
    complete_strategy,
    ensure_valid,
    event_prob_s_before_t,
    induce_chain,
    max_reach_prob,
    path_probability,
    reach_set,
    reachable_from,
    validate,
)
from mdpattr.services.oracle import enumerate_deterministic


def _broken_model() -> Mdp:
    return Mdp(
        states=("a", "b", "c"),
        actions=("go",),
        initial="a",
        transitions={
            "a": {"go": {"b": 0.5, "c": 0.4}},
            "b": {"go": {"zzz": 1.0}},
        },
    )


class TestValidation:
    """Tests for well-formedness checks."""

    def test_bundled_models_are_valid(self, loan_mdp, nonmono_mdp, gridworld_mdp):
        """Every bundled example should pass validation."""
        for m in (loan_mdp, nonmono_mdp, gridworld_mdp):
            assert validate(m).ok

    def test_reports_every_violation(self):
        """A report should list the sum, unknown-successor and no-action violations."""
        kinds = {v.kind for v in validate(_broken_model()).violations}
        assert "distribution sum" in kinds
        assert "unknown state" in kinds
        assert "no enabled action" in kinds

    def test_violation_coordinates(self):
        """Violations should carry the offending state and action."""
        report = validate(_broken_model())
        sums = [v for v in report.violations if v.kind == "distribution sum"]
        assert sums[0].state == "a"
        assert sums[0].action == "go"

    def test_unknown_initial(self):
        """An initial state outside the state set is a violation."""
        m = Mdp(states=("a",), actions=("go",), initial="x", transitions={"a": {"go": {"a": 1.0}}})
        assert any(v.kind == "unknown initial" for v in validate(m).violations)

    def test_ensure_valid_raises_with_all_violations(self):
        """ensure_valid should raise InvalidModelError carrying the list of violations."""
        with pytest.raises(InvalidModelError) as exc:
            ensure_valid(_broken_model())
        assert len(exc.value.details) >= 3
        assert exc.value.exit_code == 1


class TestModelFile:
    """Tests for the JSON model file."""

    def test_round_trip_keeps_exact_probabilities(self, loan_mdp):
        """Encoding and decoding should keep the exact 19/20 probability."""
        document = ModelFile.model_validate_json(ModelFile.from_mdp(loan_mdp, "Granted").model_dump_json(by_alias=True))
        m = document.to_mdp()
        assert m.exact["s0"]["Apply"]["Application"] == "19/20"
        assert m.transitions["s0"]["Apply"]["Error"] == pytest.approx(0.05)
        assert document.target == "Granted"

    def test_fraction_strings(self):
        """Probabilities may be given as "p/q" strings."""
        document = ModelFile(
            states=["a", "b"],
            initial="a",
            transitions=[
                TransitionRow(from_="a", action="go", to="a", prob="1/3"),
                TransitionRow(from_="a", action="go", to="b", prob="2/3"),
                TransitionRow(from_="b", action="stay", to="b", prob=1),
            ],
        )
        m = document.to_mdp()
        assert m.transitions["a"]["go"]["a"] == pytest.approx(1 / 3)
        assert m.actions == ("go", "stay")

    def test_unparseable_probability(self):
        """A probability that is not a number is an invalid model."""
        document = ModelFile(
            states=["a"],
            initial="a",
            transitions=[TransitionRow(from_="a", action="go", to="a", prob="often")],
        )
        with pytest.raises(InvalidModelError):
            document.to_mdp()

    def test_duplicate_transition(self):
        """The same (from, action, to) twice is rejected."""
        row = TransitionRow(from_="a", action="go", to="a", prob=1)
        with pytest.raises(InvalidModelError) as exc:
            ModelFile(states=["a"], initial="a", transitions=[row, row]).to_mdp()
        assert "duplicate" in exc.value.message

    def test_violations_in_details(self):
        """Well-formedness violations are reported under details.violations."""
        document = ModelFile(
            states=["a", "b"],
            initial="a",
            transitions=[TransitionRow(from_="a", action="go", to="b", prob=0.5)],
        )
        with pytest.raises(InvalidModelError) as exc:
            document.to_mdp()
        kinds = {v["kind"] for v in exc.value.details["violations"]}
        assert {"distribution sum", "no enabled action"} <= kinds

    def test_unknown_target(self, loan_mdp):
        """A target that is not a state is rejected."""
        document = ModelFile.from_mdp(loan_mdp, "Nowhere")
        with pytest.raises(InvalidModelError):
            document.to_mdp()


class TestReachability:
    """Tests for graph reachability and optimal reachability."""

    def test_reach_set_loan(self, loan_mdp):
        """Angry and Rejected cannot reach Granted; everything else can."""
        assert reach_set(loan_mdp, "Granted") == frozenset(
            {"s0", "Application", "Error", "Consultation", "Application+", "Rework", "Resubmit", "Granted"}
        )

    def test_reach_set_nonmono(self, nonmono_mdp):
        """The sink is the only state outside Reach(s_t)."""
        assert reach_set(nonmono_mdp, "s_t") == frozenset({"s0", "s1", "s2", "s_t"})

    def test_reachable_from(self, loan_mdp):
        """Forward closure of Angry is Angry and Rejected."""
        assert reachable_from(loan_mdp, "Angry") == frozenset({"Angry", "Rejected"})

    def test_unknown_target(self, loan_mdp):
        """Unknown states raise UnknownStateError."""
        with pytest.raises(UnknownStateError):
            reach_set(loan_mdp, "Moon")

    def test_max_reach_loan(self, loan_mdp):
        """The loan journey reaches Granted with probability at most 0.98."""
        result = max_reach_prob(loan_mdp, "Granted")
        assert result.p_star == pytest.approx(0.98, abs=1e-10)
        assert result.values["Resubmit"] == pytest.approx(0.8, abs=1e-10)
        assert result.values["Angry"] == 0.0
        assert result.values["Granted"] == 1.0

    def test_max_reach_nonmono(self, nonmono_mdp):
        """Going straight from s2 gives p* = 0.91."""
        assert max_reach_prob(nonmono_mdp, "s_t").p_star == pytest.approx(0.91, abs=1e-10)


class TestStrategiesAndChains:
    """Tests for strategy completion and induced chains."""

    def test_single_action_states_are_filled_in(self, nonmono_mdp, nonmono_sigma0):
        """States with one enabled action need no strategy row."""
        rows = complete_strategy(nonmono_mdp, nonmono_sigma0)
        assert rows["s0"] == {"a": 1.0}
        assert rows["sink"] == {"stay": 1.0}

    def test_missing_choice(self, loan_mdp):
        """A state with a real choice must have a row."""
        with pytest.raises(InvalidStrategyError):
            complete_strategy(loan_mdp, StrategyTable.deterministic({"s0": "Apply"}))

    def test_disabled_action(self, nonmono_mdp):
        """Choosing an action that is not enabled is rejected."""
        with pytest.raises(InvalidStrategyError):
            induce_chain(nonmono_mdp, StrategyTable.deterministic({"s2": "fly"}))

    def test_row_must_sum_to_one(self):
        """Strategy rows are probability distributions."""
        with pytest.raises(InvalidStrategyError):
            StrategyTable.stochastic({"s2": {"a": 0.5, "b": 0.4}})

    def test_induced_chain_reach(self, nonmono_mdp, nonmono_sigma0, nonmono_sigma1):
        """Reach probabilities of the two nonmono strategies."""
        direct = induce_chain(nonmono_mdp, nonmono_sigma0)
        detour = induce_chain(nonmono_mdp, nonmono_sigma1)
        assert chain_reach_prob(direct, "s0", {"s_t"}) == pytest.approx(0.91)
        assert chain_reach_prob(detour, "s0", {"s_t"}) == pytest.approx(0.1)
        assert chain_reach_prob(detour, "s2", {"s_t"}) == pytest.approx(0.1)

    def test_stochastic_strategy_mixes_rows(self, nonmono_mdp):
        """A half/half strategy in s2 averages the two successors."""
        sigma = StrategyTable.stochastic({"s2": {"a": 0.5, "b": 0.5}})
        chain = induce_chain(nonmono_mdp, sigma)
        assert chain.matrix["s2"] == pytest.approx({"s_t": 0.5, "s1": 0.5})

    def test_event_probability(self, nonmono_mdp, nonmono_sigma0):
        """Pr(visit s1 before s_t, then reach s_t) = 0.1 * 0.1."""
        chain = induce_chain(nonmono_mdp, nonmono_sigma0)
        assert event_prob_s_before_t(chain, "s1", "s_t") == pytest.approx(0.01)
        assert event_prob_s_before_t(chain, "s0", "s_t") == pytest.approx(0.91)

    def test_avoid_set(self, nonmono_mdp, nonmono_sigma0):
        """Reaching s_t while avoiding s2 only goes through s1."""
        chain = induce_chain(nonmono_mdp, nonmono_sigma0)
        assert chain_reach_prob(chain, "s0", {"s_t"}, {"s2"}) == pytest.approx(0.01)

    def test_goal_and_avoid_overlap(self, nonmono_mdp, nonmono_sigma0):
        """Overlapping goal and avoid sets are an invalid query."""
        chain = induce_chain(nonmono_mdp, nonmono_sigma0)
        with pytest.raises(InvalidQueryError):
            chain_reach_prob(chain, "s0", {"s_t"}, {"s_t"})


class TestPaths:
    """Tests for path parsing and checks."""

    def test_parse(self):
        """Whitespace around items is ignored."""
        tau = PathSpec.parse("s0, Apply ,Application")
        assert tau.states == ("s0", "Application")
        assert tau.actions == ("Apply",)
        assert str(tau) == "s0,Apply,Application"

    def test_even_length_rejected(self):
        """A path must end in a state."""
        with pytest.raises(InvalidPathError):
            PathSpec.parse("s0,Apply")

    def test_repeated_state_rejected(self):
        """Paths are simple."""
        with pytest.raises(InvalidPathError):
            PathSpec.parse("s0,a,s1,b,s0")

    def test_must_start_at_initial(self, loan_mdp):
        """Paths start at the initial state."""
        with pytest.raises(InvalidPathError):
            check_path(loan_mdp, PathSpec.parse("Application,Provider,Consultation"))

    def test_zero_probability_step(self, loan_mdp):
        """Every step must have positive probability."""
        with pytest.raises(InvalidPathError):
            check_path(loan_mdp, PathSpec.parse("s0,Consult,Application"))

    def test_disabled_action(self, loan_mdp):
        """Every action must be enabled."""
        with pytest.raises(InvalidPathError):
            check_path(loan_mdp, PathSpec.parse("s0,Fly,Application"))

    def test_path_probability(self, loan_mdp):
        """The prefix s0 -Apply-> Application has probability 0.95."""
        tau = PathSpec.parse("s0,Apply,Application,Provider,Application+")
        check_path(loan_mdp, tau)
        assert path_probability(loan_mdp, tau) == pytest.approx(0.475)


class TestRandomModelProperties:
    """Reachability properties on seeded random models."""

    @pytest.mark.parametrize("seed", range(30))
    def test_max_reach_matches_enumeration(self, random_mdp_factory, seed):
        """p* and the per-state optimum equal the best deterministic strategy."""
        m = random_mdp_factory(seed, states=6, actions=2)
        result = max_reach_prob(m, "t")
        chains = [induce_chain(m, sigma) for sigma in enumerate_deterministic(m)]
        for s in m.states:
            best = max(chain_reach_prob(c, s, {"t"}) for c in chains)
            assert result.values[s] == pytest.approx(best, abs=1e-9)
        assert result.p_star == pytest.approx(result.values[m.initial], abs=1e-12)

    @pytest.mark.parametrize("seed", range(30))
    def test_reach_set_is_positive_optimum(self, random_mdp_factory, seed):
        """Reach(t) holds exactly the states with positive maximal reach probability."""
        m = random_mdp_factory(seed, states=7, actions=3)
        values = max_reach_prob(m, "t").values
        assert reach_set(m, "t") == frozenset(s for s, v in values.items() if v > 0)

    @pytest.mark.parametrize("seed", range(30))
    def test_chain_reach_monotone_in_goal(self, random_mdp_factory, seed):
        """Adding goal states never lowers the reach probability."""
        m = random_mdp_factory(seed, states=7, actions=2)
        c = induce_chain(m, random_strategy(m, seed=seed, stochastic=True))
        goal = {"t"}
        previous = chain_reach_prob(c, m.initial, goal)
        for s in m.states:
            goal = goal | {s}
            current = chain_reach_prob(c, m.initial, goal)
            assert current >= previous - 1e-12
            previous = current

    @pytest.mark.parametrize("seed", range(30))
    def test_event_below_reach(self, random_mdp_factory, seed):
        """Visiting s before t and reaching t is no likelier than reaching t."""
        m = random_mdp_factory(seed, states=7, actions=2)
        c = induce_chain(m, random_strategy(m, seed=seed))
        reach = chain_reach_prob(c, m.initial, {"t"})
        for s in m.states:
            event = event_prob_s_before_t(c, s, "t")
            assert -1e-12 <= event <= reach + 1e-12
