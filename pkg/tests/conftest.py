"""
Pytest configuration and fixtures.

IMPORTANT: Environment variables must be set BEFORE importing mdpattr
because settings are loaded at import time.
"""

import os

os.environ["MDPATTR_ENVIRONMENT"] = "test"
os.environ["MDPATTR_LOG_LEVEL"] = "WARNING"
os.environ["MDPATTR_SENTRY_DSN"] = ""
# Solutions of an external solver, if any; see TestExternalSolver
EXTERNAL_SOLUTION_DIR = os.environ.pop("MDPATTR_SOLVER_SOLUTION_DIR", None)

# Now we can safely import pytest and the package
import pytest
import structlog

from mdpattr.models.mdp import StrategyTable
from mdpattr.models.requests import ModelFile
from mdpattr.services.generators import gridworld_model, loan_model, nonmono_model, random_model


@pytest.fixture
def loan_mdp():
    """Loan application journey, target Granted."""
    return loan_model()


@pytest.fixture
def nonmono_mdp():
    """Five-state model, target s_t."""
    return nonmono_model()


@pytest.fixture
def gridworld_mdp():
    """Default key/door gridworld, target c6_4_k."""
    return gridworld_model()


@pytest.fixture
def random_mdp_factory():
    """Seeded random MDP builder: random_mdp_factory(seed, states=..., ...)."""

    def build(seed: int, **params):
        return random_model(seed=seed, **params)

    return build


@pytest.fixture
def nonmono_sigma0():
    """s2 goes straight to the target."""
    return StrategyTable.deterministic({"s2": "a"})


@pytest.fixture
def nonmono_sigma1():
    """s2 detours through s1."""
    return StrategyTable.deterministic({"s2": "b"})


@pytest.fixture
def model_file(tmp_path):
    """Write an Mdp as a model file and return its path."""

    def write(m, target=None, name="model.json"):
        path = tmp_path / name
        path.write_text(ModelFile.from_mdp(m, target).model_dump_json(indent=2, by_alias=True))
        return str(path)

    return write


@pytest.fixture(autouse=True)
def reset_logging():
    """CLI commands point structlog at their own stderr; restore the defaults after each test."""
    yield
    structlog.reset_defaults()
