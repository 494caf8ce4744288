"""
Tests for the optimization encodings, LP serialization and solution cross-checks.
"""

import pytest

from mdpattr.errors import EncodingError, ImportanceUndefinedError, SolutionFormatError
from mdpattr.models.optimization import EncodingConfig, OptModel, Objective, Variable
from mdpattr.services.encodings import (
    assignment_from_strategy,
    build_lp_star,
    build_model,
    build_qp,
    build_qp_star,
    objective_value,
    pin_denominator,
    reach_var,
    strategy_from_solution,
    strategy_var,
    violated_constraints,
)
from mdpattr.services.lp_format import parse_metadata, parse_solution, serialize_lp, serialize_metadata, write_solution
from mdpattr.services.mdp_core import max_reach_prob
from mdpattr.services.preprocess import memory_product
from mdpattr.services.solve import cross_check_external, solve_exact

LOAN_P_STAR = 0.98


@pytest.fixture
def nonmono_product(nonmono_mdp):
    return memory_product(nonmono_mdp, "s1")


@pytest.fixture
def loan_product(loan_mdp):
    return memory_product(loan_mdp, "Consultation")


class TestQuadraticEncoding:
    """Tests for the QP over all strategies."""

    def test_counts(self, nonmono_product):
        """9 strategy, 18 reach and 9 ordering variables; 24 rows."""
        model = build_qp(nonmono_product, "s_t", "min")
        names = [v.name for v in model.variables]
        assert len(names) == 36
        assert sum(n.startswith("p[") for n in names) == 9
        assert sum(n.startswith("r[") for n in names) == 18
        assert sum(n.startswith("ord[") for n in names) == 9
        assert len(model.constraints) == 24
        counts = {
            family: len(model.constraints_in(family))
            for family in ("strategy_sum", "target_default", "target_cross_zero", "min_reach", "bellman", "ordering")
        }
        assert counts == {
            "strategy_sum": 7,
            "target_default": 2,
            "target_cross_zero": 2,
            "min_reach": 1,
            "bellman": 7,
            "ordering": 5,
        }

    def test_without_redundant_rows(self, nonmono_product):
        """The zero rows of the other target copy are optional."""
        cfg = EncodingConfig(include_redundant_zero_constraint=False)
        model = build_qp(nonmono_product, "s_t", "min", cfg)
        assert model.constraints_in("target_cross_zero") == []
        assert len(model.constraints) == 22

    def test_fractional_objective(self, nonmono_product):
        """The objective is numerator / (r[s0,T] + r[s0,B]), minimized."""
        model = build_qp(nonmono_product, "s_t", "min")
        objective = model.objectives[0]
        assert objective.sense == "min"
        assert objective.fractional.numerator == {reach_var("s0.B", "T"): 1.0}
        assert objective.fractional.denominator == {reach_var("s0.B", "T"): 1.0, reach_var("s0.B", "B"): 1.0}
        assert not model.is_linear

    def test_max_is_negated(self, nonmono_product):
        """Maximization negates the numerator and records it."""
        model = build_qp(nonmono_product, "s_t", "max")
        assert model.objectives[0].fractional.numerator == {reach_var("s0.B", "T"): -1.0}
        assert model.metadata["negated"] is True

    def test_min_reach_uses_epsilon(self, nonmono_product):
        """Admissible strategies reach the target with at least epsilon."""
        model = build_qp(nonmono_product, "s_t", "min", EncodingConfig(epsilon=0.01))
        (row,) = model.constraints_in("min_reach")
        assert row.comparator == ">="
        assert row.rhs == 0.01

    def test_fractional_objective_does_not_serialize(self, nonmono_product):
        """The fractional QP needs its denominator pinned before LP output."""
        with pytest.raises(EncodingError):
            serialize_lp(build_qp(nonmono_product, "s_t", "min"))

    def test_pinned_denominator(self, nonmono_product):
        """Pinning turns the denominator into an equality with p*."""
        model = pin_denominator(build_qp(nonmono_product, "s_t", "max"), 0.91)
        assert model.constraints_in("min_reach") == []
        (row,) = model.constraints_in("reach_optimal")
        assert (row.comparator, row.rhs) == ("=", 0.91)
        assert model.metadata["denominator_pin"] == 0.91
        text = serialize_lp(model)
        assert text.startswith("\\ qp\nMinimize\n")

    def test_pin_needs_positive_p_star(self, nonmono_product):
        """p* = 0 means the target is unreachable."""
        with pytest.raises(ImportanceUndefinedError):
            pin_denominator(build_qp(nonmono_product, "s_t", "min"), 0.0)


class TestReachOptimalEncodings:
    """Tests for QP* and LP*."""

    def test_qp_star_fixed(self, loan_product):
        """QP* pins the denominator and bounds every action; no ordering."""
        model = build_qp_star(loan_product, "Granted", LOAN_P_STAR, "max")
        assert len(model.constraints_in("reach_optimal")) == 1
        assert model.constraints_in("ordering") == []
        assert model.constraints_in("action_lower_bound")
        assert not any(v.name.startswith("ord[") for v in model.variables)
        assert [o.name for o in model.objectives] == ["importance_numerator"]

    def test_qp_star_hierarchical(self, loan_product):
        """The hierarchical form minimizes total reach before the importance objective."""
        cfg = EncodingConfig(qp_star_form="hierarchical")
        model = build_qp_star(loan_product, "Granted", LOAN_P_STAR, "max", cfg)
        assert [o.name for o in model.objectives] == ["reach_sum", "importance_numerator"]
        assert model.constraints_in("min_reach")
        text = serialize_lp(model)
        assert "\\ objective 2 of 2 (max) importance_numerator" in text

    def test_lp_star_is_linear(self, loan_product):
        """LP* uses binary strategy variables and only linear rows."""
        model = build_lp_star(loan_product, "Granted", LOAN_P_STAR, "max")
        assert model.is_linear
        strategy_vars = [v for v in model.variables if v.name.startswith("p[")]
        assert strategy_vars and all(v.domain == "binary" for v in strategy_vars)
        assert model.constraints_in("bellman_discrete")
        assert model.constraints_in("ordering_discrete")

    def test_lp_text(self, loan_product):
        """LP text has the expected sections and sanitized names."""
        text = serialize_lp(build_lp_star(loan_product, "Granted", LOAN_P_STAR, "max"))
        for section in ("Maximize", "Subject To", "Bounds", "Binaries", "End"):
            assert f"\n{section}\n" in text or text.endswith(f"{section}\n")
        assert "p_s0_B_Apply_" in text
        assert "[" not in text.split("Subject To")[1]

    def test_big_m_in_ordering_rows(self, loan_product):
        """Ordering rows carry big-M for the chosen action."""
        model = build_lp_star(loan_product, "Granted", LOAN_P_STAR, "max", EncodingConfig(big_m=1e4))
        row = model.constraints_in("ordering_discrete")[0]
        assert row.rhs == 1e4 - 1
        assert 1e4 in row.linear.values()

    def test_byte_stable(self, loan_mdp):
        """Building and serializing twice gives identical bytes."""
        first = serialize_lp(build_lp_star(memory_product(loan_mdp, "Consultation"), "Granted", LOAN_P_STAR, "max"))
        second = serialize_lp(build_lp_star(memory_product(loan_mdp, "Consultation"), "Granted", LOAN_P_STAR, "max"))
        assert first == second

    def test_needs_p_star(self, loan_product):
        """qpstar and lpstar need p*."""
        with pytest.raises(EncodingError):
            build_model("lpstar", loan_product, "Granted", "max")
        with pytest.raises(EncodingError):
            build_model("milp", loan_product, "Granted", "max", p_star=LOAN_P_STAR)

    def test_witness_assignment_is_feasible(self, loan_mdp, loan_product):
        """The exact reach-optimal witness satisfies every LP* row with its objective value."""
        cfg = EncodingConfig(big_m=1e4)
        p_star = max_reach_prob(loan_mdp, "Granted").p_star
        model = build_lp_star(loan_product, "Granted", p_star, "max", cfg)
        result = solve_exact(loan_product, "Granted", "max", "reachOptimal", cfg)
        assignment = assignment_from_strategy(model, result.witness, loan_product)
        assert violated_constraints(model, assignment) == []
        assert objective_value(model, assignment) == pytest.approx(result.numerator, abs=1e-9)
        decoded = strategy_from_solution(model, assignment, loan_product)
        assert decoded.action("s0.B") == result.witness.action("s0.B")


class TestLpNames:
    """Tests for LP name handling."""

    def test_colliding_names(self):
        """Names that sanitize to the same LP name are rejected."""
        model = OptModel(
            name="clash",
            variables=[Variable(name="v-1"), Variable(name="v_1")],
            constraints=[],
            objectives=[Objective(name="o", sense="min", linear={"v-1": 1.0})],
        )
        with pytest.raises(EncodingError):
            serialize_lp(model)

    def test_metadata_maps_names_back(self, loan_product):
        """Metadata maps every LP name to its model variable."""
        model = build_lp_star(loan_product, "Granted", LOAN_P_STAR, "max")
        metadata = parse_metadata(serialize_metadata(model))
        assert metadata["lp_names"]["p_s0_B_Apply_"] == strategy_var("s0.B", "Apply")
        assert metadata["pivot"] == "Consultation"
        assert metadata["target"] == "Granted"
        assert metadata["kind"] == "lpstar"


class TestSolutionFiles:
    """Tests for reading solution files."""

    def test_parse(self):
        """Comments are skipped and the objective line is picked up."""
        values, objective = parse_solution("# solver output\nobjective 0.5\nx 1\ny 0.25\n")
        assert values == {"x": 1.0, "y": 0.25}
        assert objective == 0.5

    def test_objective_value_variant(self):
        """'Objective value: v' is accepted too."""
        _, objective = parse_solution("Objective value: 0.75\nx 1\n")
        assert objective == 0.75

    def test_malformed_line(self):
        """Lines must be 'name value'."""
        with pytest.raises(SolutionFormatError):
            parse_solution("x 1 2\n")

    def test_duplicate_variable(self):
        """A variable may be given once."""
        with pytest.raises(SolutionFormatError):
            parse_solution("x 1\nx 0\n")

    def test_empty(self):
        """A solution needs at least one value."""
        with pytest.raises(SolutionFormatError):
            parse_solution("# nothing\n")

    def test_bad_metadata(self):
        """Metadata must be JSON with the required keys."""
        with pytest.raises(SolutionFormatError):
            parse_metadata("not json")
        with pytest.raises(SolutionFormatError):
            parse_metadata('{"kind": "lpstar"}')


class TestCrossCheck:
    """Tests for checking external solutions against exact evaluation."""

    def _exported(self, loan_mdp, loan_product):
        cfg = EncodingConfig(big_m=1e4)
        p_star = max_reach_prob(loan_mdp, "Granted").p_star
        model = build_lp_star(loan_product, "Granted", p_star, "max", cfg)
        result = solve_exact(loan_product, "Granted", "max", "reachOptimal", cfg)
        assignment = assignment_from_strategy(model, result.witness, loan_product)
        metadata = parse_metadata(serialize_metadata(model))
        return model, assignment, metadata, result

    def test_agreeing_solution(self, loan_mdp, loan_product):
        """A correct solution is not flagged."""
        model, assignment, metadata, result = self._exported(loan_mdp, loan_product)
        text = write_solution(assignment, model, objective=result.numerator)
        report = cross_check_external(loan_product, "Granted", "lpstar", text, metadata)
        assert report.flagged is False
        assert report.external_objective == pytest.approx(1.0, abs=1e-9)
        assert report.recomputed == pytest.approx(1.0, abs=1e-9)
        assert report.exact_optimum == pytest.approx(1.0, abs=1e-9)

    def test_wrong_objective_is_flagged(self, loan_mdp, loan_product):
        """A reported objective far from the optimum is flagged."""
        model, assignment, metadata, _ = self._exported(loan_mdp, loan_product)
        text = write_solution(assignment, model, objective=0.49)
        report = cross_check_external(loan_product, "Granted", "lpstar", text, metadata)
        assert report.flagged is True
        assert report.external_vs_optimum == pytest.approx(0.5, abs=1e-9)

    def test_undecodable_strategy_is_reported(self, loan_mdp, loan_product):
        """A strategy row that does not sum to one is reported, not raised."""
        model, assignment, metadata, result = self._exported(loan_mdp, loan_product)
        assignment = dict(assignment)
        assignment[strategy_var("s0.B", "Apply")] = 1.0
        assignment[strategy_var("s0.B", "Consult")] = 1.0
        text = write_solution(assignment, model, objective=result.numerator)
        report = cross_check_external(loan_product, "Granted", "lpstar", text, metadata)
        assert report.flagged is True
        assert report.decode_error

    def test_kind_mismatch(self, loan_mdp, loan_product):
        """Metadata for another model kind is rejected."""
        model, assignment, metadata, _ = self._exported(loan_mdp, loan_product)
        with pytest.raises(SolutionFormatError):
            cross_check_external(loan_product, "Granted", "qpstar", write_solution(assignment, model), metadata)
