from datetime import datetime
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field


# ============================================================================
# ANALYSIS REPORT
# ============================================================================


class QueryEcho(BaseModel):
    """The query as it was answered."""

    target: str
    subject_kind: Literal["state", "path"]
    subject: str
    strategy_class: Literal["all", "reachOptimal"]
    sense: Literal["both", "min", "max"]
    normalized: bool
    epsilon: float


class IntervalOut(BaseModel):
    lower: Optional[float] = None
    upper: Optional[float] = None
    strategy_class: Literal["all", "reachOptimal", "pathFollowing"]
    normalized: bool
    path_following: bool = False
    lower_exact: Optional[str] = None
    upper_exact: Optional[str] = None
    label: str = "deterministic-class"


class WitnessTable(BaseModel):
    """
    A witness strategy as base-model actions per memory mode.

    not_visited applies before the pivot state is entered, visited after.
    Strategies without memory repeat the same table in both modes.
    """

    pivot: Optional[str] = None
    not_visited: Dict[str, str] = Field(default_factory=dict)
    visited: Dict[str, str] = Field(default_factory=dict)


class AnalysisReport(BaseModel):
    """Result document of one importance query."""

    version: str
    query: QueryEcho
    interval: IntervalOut
    witnesses: Dict[str, WitnessTable] = Field(default_factory=dict)
    status: str = "optimal"
    encoding: str = "exact-search"
    config: Dict[str, Any] = Field(default_factory=dict)
    timings: Optional[Dict[str, float]] = None


# ============================================================================
# BATCH / EXPORT
# ============================================================================


class BatchRow(BaseModel):
    state: str
    lower: Optional[float] = None
    upper: Optional[float] = None
    status: str
    error: Optional[str] = None
    time: Optional[float] = None


class BatchResponse(BaseModel):
    target: str
    strategy_class: Literal["all", "reachOptimal"]
    rows: List[BatchRow]


class ExportResponse(BaseModel):
    """LP text plus the companion metadata needed to read a solution back."""

    encoding: Literal["qp", "qpstar", "lpstar"]
    lp: str
    metadata: Dict[str, Any]


class ExampleInfo(BaseModel):
    name: str
    description: str
    target: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    tags: List[str] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str
    version: str
    environment: str
    timestamp: datetime
