"""
Error Types

One exception hierarchy for the services, the CLI and the HTTP layer.
Every error renders to the standard {"error": {"code", "message", "details"}}
envelope and carries the CLI exit code and HTTP status it maps to.
"""

from typing import Any, Dict, Optional


class MdpAttrError(Exception):
    """Base class for all domain errors."""

    code = "MDPATTR_ERROR"
    exit_code = 1
    http_status = 400

    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """Render as the standard error envelope."""
        error: Dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details is not None:
            error["details"] = self.details
        return {"error": error}


class InvalidModelError(MdpAttrError):
    """Model file or Mdp violates well-formedness."""

    code = "INVALID_MODEL"
    http_status = 422


class UnknownStateError(MdpAttrError):
    code = "UNKNOWN_STATE"
    http_status = 404


class InvalidQueryError(MdpAttrError):
    """Query arguments are inconsistent (e.g. pivot equals the initial state)."""

    code = "INVALID_QUERY"
    http_status = 422


class InvalidStrategyError(MdpAttrError):
    code = "INVALID_STRATEGY"
    http_status = 422


class InvalidPathError(MdpAttrError):
    code = "INVALID_PATH"
    http_status = 422


class ImportanceUndefinedError(MdpAttrError):
    """No admissible strategy reaches the target (denominator would be 0)."""

    code = "IMPORTANCE_UNDEFINED"
    exit_code = 2
    http_status = 409


class BudgetExceededError(MdpAttrError):
    code = "BUDGET_EXCEEDED"
    exit_code = 3
    http_status = 503


class EncodingError(MdpAttrError):
    code = "ENCODING_ERROR"
    http_status = 422


class SolutionFormatError(MdpAttrError):
    code = "SOLUTION_FORMAT"
    http_status = 422


class InternalSolverError(MdpAttrError):
    """Numerical failure that indicates a bug (e.g. a singular reduced system)."""

    code = "INTERNAL_SOLVER_ERROR"
    http_status = 500
