"""
Analysis Router

Model validation, importance queries, all-states batches and encoding
export. The handlers are synchronous: the work is CPU-bound and FastAPI runs
it in its thread pool.
"""

import json

from fastapi import APIRouter

from mdpattr.errors import BudgetExceededError, InvalidModelError
from mdpattr.middleware.logging_config import get_logger
from mdpattr.models.mdp import ValidationReport, Violation
from mdpattr.models.optimization import EncodingConfig
from mdpattr.models.requests import BatchRequest, ExportRequest, ImportanceRequest, ModelFile, resolve_target
from mdpattr.models.responses import AnalysisReport, BatchResponse, ExportResponse
from mdpattr.services.reporting import analyze, batch_rows, export_encoding

router = APIRouter()
logger = get_logger(__name__)


def _config(epsilon=None, **extra) -> EncodingConfig:
    values = dict(extra)
    if epsilon is not None:
        values["epsilon"] = epsilon
    return EncodingConfig(**values)


@router.post("/validate", response_model=ValidationReport)
def validate_model(document: ModelFile) -> ValidationReport:
    """
    Check a model for well-formedness.

    Returns every violation found; an empty list means the model is valid.
    """
    try:
        document.to_mdp()
    except InvalidModelError as e:
        if isinstance(e.details, dict) and "violations" in e.details:
            return ValidationReport(violations=[Violation(**v) for v in e.details["violations"]])
        return ValidationReport(violations=[Violation(kind="decode", message=e.message)])
    return ValidationReport()


@router.post("/importance", response_model=AnalysisReport)
def importance(request: ImportanceRequest) -> AnalysisReport:
    """
    Bound the importance of a state or a path for reaching the target.

    **Errors:**
    - 404 unknown state
    - 409 importance undefined (no admissible strategy reaches the target)
    - 422 invalid model, path or query
    - 503 search budget exhausted
    """
    m = request.model.to_mdp()
    report = analyze(m, request.to_query())
    if report.status == "budget":
        logger.warning("Search budget exhausted", subject=report.query.subject)
        raise BudgetExceededError(
            "search budget exhausted; bounds are the best found, not proven optimal",
            {"report": report.model_dump(mode="json")},
        )
    return report


@router.post("/batch", response_model=BatchResponse)
def batch(request: BatchRequest) -> BatchResponse:
    """Importance bounds of every state; failures are reported per row."""
    m = request.model.to_mdp()
    t = resolve_target(request.model, request.target)
    rows = batch_rows(m, t, request.strategy_class, _config(request.epsilon))
    return BatchResponse(target=t, strategy_class=request.strategy_class, rows=rows)


@router.post("/export", response_model=ExportResponse)
def export(request: ExportRequest) -> ExportResponse:
    """Build one optimization encoding; returns the LP text and its metadata."""
    m = request.model.to_mdp()
    t = resolve_target(request.model, request.target)
    cfg = _config(
        request.epsilon,
        qp_star_form=request.qp_star_form,
        include_redundant_zero_constraint=request.include_redundant_zero_constraint,
    )
    lp, metadata = export_encoding(m, request.state, t, request.encoding, request.sense, cfg, pin=request.pin_reach)
    return ExportResponse(encoding=request.encoding, lp=lp, metadata=json.loads(metadata))
