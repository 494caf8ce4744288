"""
Tests for API endpoints.
"""

import pytest
from fastapi.testclient import TestClient

from mdpattr.main import app
from mdpattr.models.requests import ModelFile
from mdpattr.services.generators import loan_model, nonmono_model, random_model


client = TestClient(app)


def model_json(m, target=None):
    return ModelFile.from_mdp(m, target).model_dump(mode="json", by_alias=True)


LOAN = model_json(loan_model(), "Granted")
NONMONO = model_json(nonmono_model(), "s_t")


class TestHealthEndpoint:
    """Tests for health check endpoint."""

    def test_health_returns_200(self):
        """Health endpoint should return 200."""
        response = client.get("/v1/health")
        assert response.status_code == 200

    def test_health_returns_healthy_status(self):
        """Health endpoint should return healthy status and the environment."""
        data = client.get("/v1/health").json()
        assert data["status"] == "healthy"
        assert data["environment"] == "test"
        assert data["version"]

    def test_request_headers(self):
        """Every response carries a request id and the API version."""
        response = client.get("/v1/health")
        assert response.headers["X-Request-ID"]
        assert response.headers["X-API-Version"]


class TestRootEndpoint:
    """Tests for root endpoint."""

    def test_root_returns_api_info(self):
        """Root endpoint should point at health and docs."""
        data = client.get("/").json()
        assert data["message"] == "MDP Importance API"
        assert data["health"] == "/v1/health"

    def test_unknown_route(self):
        """Unknown routes answer in the error envelope."""
        response = client.get("/v1/nowhere")
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "HTTP_404"

    def test_wrong_method(self):
        """Analysis endpoints only accept POST."""
        response = client.get("/v1/importance")
        assert response.status_code == 405
        assert response.json()["error"]["code"] == "HTTP_405"


class TestExamplesEndpoint:
    """Tests for the bundled examples."""

    def test_catalogue(self):
        """All four examples are listed with their targets."""
        data = client.get("/v1/examples").json()
        by_name = {e["name"]: e for e in data}
        assert set(by_name) == {"loan", "nonmono", "gridworld", "random"}
        assert by_name["loan"]["target"] == "Granted"
        assert "seed" in by_name["random"]["parameters"]

    def test_get_loan(self):
        """Examples come back as model files."""
        response = client.get("/v1/examples/loan")
        assert response.status_code == 200
        data = response.json()
        assert data["target"] == "Granted"
        assert data["transitions"][0]["from"] == "s0"
        assert ModelFile.model_validate(data).to_mdp().initial == "s0"

    def test_random_parameters(self):
        """Query parameters reach the generator; others are ignored."""
        data = client.get("/v1/examples/random", params={"seed": 3, "states": 7, "width": 9}).json()
        assert len(data["states"]) == 7

    def test_invalid_parameter(self):
        """Out-of-range query parameters fail validation."""
        response = client.get("/v1/examples/random", params={"states": 1})
        assert response.status_code == 422
        assert response.json()["error"]["code"] == "VALIDATION_ERROR"

    def test_unknown_example(self):
        """Unknown examples are 404 with the known names."""
        response = client.get("/v1/examples/casino")
        assert response.status_code == 404
        error = response.json()["error"]
        assert error["code"] == "UNKNOWN_EXAMPLE"
        assert "loan" in error["details"]["known"]


class TestValidateEndpoint:
    """Tests for model validation."""

    def test_valid_model(self):
        """A valid model has no violations."""
        response = client.post("/v1/validate", json=LOAN)
        assert response.status_code == 200
        assert response.json()["violations"] == []

    def test_violations(self):
        """Violations are returned, not raised."""
        body = {
            "states": ["a", "b"],
            "initial": "a",
            "transitions": [{"from": "a", "action": "go", "to": "b", "prob": "1/2"}],
        }
        response = client.post("/v1/validate", json=body)
        assert response.status_code == 200
        kinds = {v["kind"] for v in response.json()["violations"]}
        assert kinds == {"distribution sum", "no enabled action"}

    def test_undecodable_probability(self):
        """A probability that is no number is a decode violation."""
        body = {"states": ["a"], "initial": "a", "transitions": [{"from": "a", "action": "x", "to": "a", "prob": "half"}]}
        response = client.post("/v1/validate", json=body)
        assert response.json()["violations"][0]["kind"] == "decode"


class TestImportanceEndpoint:
    """Tests for importance queries."""

    def test_state_bounds(self):
        """Nonmono s1: [1/91, 1] over all strategies."""
        response = client.post("/v1/importance", json={"model": NONMONO, "state": "s1"})
        assert response.status_code == 200
        data = response.json()
        assert data["interval"]["lower"] == pytest.approx(1 / 91, abs=1e-9)
        assert data["interval"]["upper"] == pytest.approx(1.0, abs=1e-9)
        assert data["witnesses"]["upper"]["not_visited"]["s2"] == "b"

    def test_path_bounds(self):
        """Reach-optimal path-following strategies give 0.95 exactly."""
        body = {"model": LOAN, "path": "s0,Apply,Application", "strategy_class": "reachOptimal"}
        data = client.post("/v1/importance", json=body).json()
        assert data["interval"]["lower"] == pytest.approx(0.95, abs=1e-9)
        assert data["interval"]["upper"] == pytest.approx(0.95, abs=1e-9)

    def test_single_sense(self):
        """sense=max leaves the lower bound empty."""
        data = client.post("/v1/importance", json={"model": NONMONO, "state": "s2", "sense": "max"}).json()
        assert data["interval"]["lower"] is None
        assert data["interval"]["upper"] == pytest.approx(90 / 91, abs=1e-9)

    def test_needs_one_subject(self):
        """State and path together fail request validation."""
        response = client.post("/v1/importance", json={"model": NONMONO, "state": "s1", "path": "s0"})
        assert response.status_code == 422
        assert response.json()["error"]["code"] == "VALIDATION_ERROR"

    def test_unknown_state(self):
        """Unknown states are 404."""
        response = client.post("/v1/importance", json={"model": NONMONO, "state": "nowhere"})
        assert response.status_code == 404
        assert response.json()["error"]["code"] == "UNKNOWN_STATE"

    def test_undefined(self):
        """An unreachable target is 409."""
        body = {"model": model_json(random_model(seed=3, reach_goal=False), "t"), "state": "s1"}
        response = client.post("/v1/importance", json=body)
        assert response.status_code == 409
        assert response.json()["error"]["code"] == "IMPORTANCE_UNDEFINED"

    def test_path_through_target(self):
        """Paths may not visit the target."""
        body = {"model": LOAN, "path": "s0,Apply,Application,Provider,Application+,Provider,Granted"}
        response = client.post("/v1/importance", json=body)
        assert response.status_code == 422
        assert response.json()["error"]["code"] == "INVALID_PATH"

    def test_invalid_model(self):
        """Invalid models are rejected with their violations."""
        model = dict(NONMONO, initial="nowhere")
        response = client.post("/v1/importance", json={"model": model, "state": "s1"})
        assert response.status_code == 422
        error = response.json()["error"]
        assert error["code"] == "INVALID_MODEL"
        assert error["details"]["violations"]


class TestBatchEndpoint:
    """Tests for all-states batches."""

    def test_rows(self):
        """One row per state, sorted by name."""
        data = client.post("/v1/batch", json={"model": NONMONO}).json()
        assert data["target"] == "s_t"
        assert [r["state"] for r in data["rows"]] == ["s0", "s1", "s2", "s_t", "sink"]

    def test_undefined_rows(self):
        """Undefined rows are reported per row."""
        body = {"model": model_json(random_model(seed=3, reach_goal=False), "t")}
        data = client.post("/v1/batch", json=body).json()
        assert {r["status"] for r in data["rows"]} == {"undefined"}

    def test_unknown_target(self):
        """Targets must be states."""
        response = client.post("/v1/batch", json={"model": NONMONO, "target": "nowhere"})
        assert response.status_code == 404


class TestExportEndpoint:
    """Tests for encoding export."""

    def test_lp_star(self):
        """LP* export returns LP text and metadata."""
        body = {"model": LOAN, "state": "Consultation"}
        data = client.post("/v1/export", json=body).json()
        assert data["encoding"] == "lpstar"
        assert data["lp"].startswith("\\ lpstar\n")
        assert data["metadata"]["pivot"] == "Consultation"

    def test_qp_needs_pin(self):
        """The fractional QP cannot be exported unpinned."""
        body = {"model": LOAN, "state": "Consultation", "encoding": "qp"}
        response = client.post("/v1/export", json=body)
        assert response.status_code == 422
        assert response.json()["error"]["code"] == "ENCODING_ERROR"
        body["pin_reach"] = True
        assert client.post("/v1/export", json=body).status_code == 200
