"""
Reporting Service

Turns importance results into the documents the CLI and the HTTP layer
emit: analysis reports, all-states batch tables (CSV/JSON), the textual
explanation, heatmaps (CSV and plain PPM) and exported encodings.
"""

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Tuple

from mdpattr.config import settings
from mdpattr.errors import ImportanceUndefinedError, InvalidQueryError, MdpAttrError
from mdpattr.middleware.logging_config import get_logger
from mdpattr.models.importance import ImportanceInterval, ImportanceQuery
from mdpattr.models.mdp import Mdp, StrategyTable
from mdpattr.models.optimization import DiscrepancyReport, EncodingConfig
from mdpattr.models.responses import (
    AnalysisReport,
    BatchResponse,
    BatchRow,
    IntervalOut,
    QueryEcho,
    WitnessTable,
)
from mdpattr.services.encodings import build_model
from mdpattr.services.importance import importance_bounds, state_importance_bounds
from mdpattr.services.lp_format import parse_metadata, serialize_lp, serialize_metadata
from mdpattr.services.mdp_core import check_state, max_reach_prob
from mdpattr.services.preprocess import memory_product, memory_table
from mdpattr.services.solve import cross_check_external
from mdpattr.utils.conversions import ProbabilityFormat, join_names

logger = get_logger(__name__)

CELL_LABEL_PREFIX = "cell:"


# ============================================================================
# ANALYSIS REPORT
# ============================================================================


def _most_likely(rows: Dict[str, Dict[str, float]]) -> Dict[str, str]:
    return {s: max(row, key=row.get) for s, row in rows.items()}


def _witness_table(m: Mdp, interval: ImportanceInterval, sigma: Optional[StrategyTable]) -> Optional[WitnessTable]:
    if sigma is None:
        return None
    if interval.witness_space == "base" or interval.pivot is None:
        table = sigma.as_mapping()
        return WitnessTable(not_visited=table, visited=dict(table))
    product = memory_product(m, interval.pivot)
    modes = memory_table(product, sigma)
    return WitnessTable(
        pivot=interval.pivot,
        not_visited=_most_likely(modes["not_visited"]),
        visited=_most_likely(modes["visited"]),
    )


def build_report(
    m: Mdp,
    q: ImportanceQuery,
    interval: ImportanceInterval,
    cfg: EncodingConfig,
    timings: Optional[Dict[str, float]] = None,
) -> AnalysisReport:
    """Assemble the report document of one answered query."""
    witnesses = {}
    for key, sigma in (("lower", interval.lower_witness), ("upper", interval.upper_witness)):
        table = _witness_table(m, interval, sigma)
        if table is not None:
            witnesses[key] = table
    return AnalysisReport(
        version=settings.VERSION,
        query=QueryEcho(
            target=q.target,
            subject_kind="path" if q.path is not None else "state",
            subject=q.subject_text,
            strategy_class=q.strategy_class,
            sense=q.sense,
            normalized=q.normalized,
            epsilon=q.epsilon if q.epsilon is not None else cfg.epsilon,
        ),
        interval=IntervalOut(
            lower=interval.lower,
            upper=interval.upper,
            strategy_class=interval.strategy_class,
            normalized=interval.normalized,
            path_following=interval.path_following,
            lower_exact=interval.lower_exact,
            upper_exact=interval.upper_exact,
            label=interval.label,
        ),
        witnesses=witnesses,
        status=interval.status,
        config={
            "epsilon": q.epsilon if q.epsilon is not None else cfg.epsilon,
            "big_m": cfg.big_m,
            "node_limit": settings.SEARCH_NODE_LIMIT,
            "time_limit_s": settings.SEARCH_TIME_LIMIT_S,
        },
        timings=timings,
    )


def analyze(
    m: Mdp, q: ImportanceQuery, cfg: Optional[EncodingConfig] = None, with_timings: bool = False
) -> AnalysisReport:
    """
    Answer a query and build its report.

    Raises:
        MdpAttrError: As raised by the importance service
    """
    cfg = cfg or EncodingConfig()
    started = time.perf_counter()
    interval = importance_bounds(m, q, cfg)
    elapsed = time.perf_counter() - started
    logger.info(
        "Importance computed",
        subject=q.subject_text,
        target=q.target,
        lower=interval.lower,
        upper=interval.upper,
        status=interval.status,
    )
    timings = {"total_s": round(elapsed, 6)} if with_timings else None
    return build_report(m, q, interval, cfg, timings)


# ============================================================================
# BATCH
# ============================================================================


def _batch_row(
    m: Mdp, state: str, t: str, strategy_class: str, cfg: EncodingConfig, with_timings: bool
) -> BatchRow:
    started = time.perf_counter()
    try:
        q = ImportanceQuery(target=t, state=state, strategy_class=strategy_class)
        interval = state_importance_bounds(m, q, cfg)
        row = BatchRow(state=state, lower=interval.lower, upper=interval.upper, status=interval.status)
    except ImportanceUndefinedError as e:
        row = BatchRow(state=state, status="undefined", error=e.message)
    except MdpAttrError as e:
        logger.warning("Batch row failed", state=state, code=e.code, error=e.message)
        row = BatchRow(state=state, status="error", error=e.message)
    if with_timings:
        row = row.model_copy(update={"time": round(time.perf_counter() - started, 6)})
    return row


def batch_rows(
    m: Mdp,
    t: str,
    strategy_class: str = "all",
    cfg: Optional[EncodingConfig] = None,
    jobs: Optional[int] = None,
    with_timings: bool = False,
) -> List[BatchRow]:
    """
    Bounds for every state, sorted by state name.

    Failures are recorded in their row (status "undefined" or "error"), never
    raised. Output does not depend on the number of jobs.

    Raises:
        UnknownStateError: Unknown target
    """
    check_state(m, t)
    cfg = cfg or EncodingConfig()
    jobs = max(1, jobs or settings.BATCH_JOBS)
    states = sorted(m.states)
    logger.info("Batch started", states=len(states), target=t, jobs=jobs)
    if jobs == 1:
        rows = [_batch_row(m, s, t, strategy_class, cfg, with_timings) for s in states]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda s: _batch_row(m, s, t, strategy_class, cfg, with_timings), states))
    return rows


def _cell(value: Optional[float]) -> str:
    return "" if value is None else ProbabilityFormat.to_text(value)


def batch_csv(rows: Iterable[BatchRow], with_timings: bool = False) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = ["state", "lower", "upper", "status"] + (["time"] if with_timings else [])
    writer.writerow(header)
    for row in rows:
        line = [row.state, _cell(row.lower), _cell(row.upper), row.status]
        if with_timings:
            line.append("" if row.time is None else f"{row.time:.6f}")
        writer.writerow(line)
    return buffer.getvalue()


def batch_json(rows: List[BatchRow], t: str, strategy_class: str) -> str:
    return BatchResponse(target=t, strategy_class=strategy_class, rows=rows).model_dump_json(indent=2) + "\n"


# ============================================================================
# EXPLANATION
# ============================================================================


def explain_text(m: Mdp, t: str, rows: Iterable[BatchRow], high: float = 0.95, low: float = 0.05) -> str:
    """
    Summary of the most important and the most detrimental states.

    Indispensable: lower bound >= high. Detrimental: upper bound <= low.
    The initial state and the target are left out of both lists.
    """
    rows = [r for r in rows if r.lower is not None and r.upper is not None and r.state not in (m.initial, t)]
    indispensable = sorted((r for r in rows if r.lower >= high), key=lambda r: (-r.lower, r.state))
    detrimental = sorted((r for r in rows if r.upper <= low), key=lambda r: (r.upper, r.state))

    def listing(selected: List[BatchRow]) -> List[str]:
        if not selected:
            return ["  (none)"]
        width = max(len(r.state) for r in selected)
        return [f"  {r.state.ljust(width)}  [{_cell(r.lower)}, {_cell(r.upper)}]" for r in selected]

    lines = [f"States indispensable for reaching {t} (lower bound >= {_cell(high)}):"]
    lines += listing(indispensable)
    lines.append(f"States detrimental for reaching {t} (upper bound <= {_cell(low)}):")
    lines += listing(detrimental)
    if indispensable or detrimental:
        parts = []
        if indispensable:
            parts.append(f"{join_names([r.state for r in indispensable])} should be visited")
        if detrimental:
            parts.append(f"{join_names([r.state for r in detrimental])} should be avoided")
        lines.append("Summary: " + "; ".join(parts) + ".")
    lines.append(f"Note: {m.initial} and {t} are indispensable by definition and are not listed.")
    return "\n".join(lines) + "\n"


# ============================================================================
# HEATMAP
# ============================================================================


def cell_of(m: Mdp, state: str) -> Optional[Tuple[int, int]]:
    """Grid coordinates from a "cell:x,y" label, if the state has one."""
    for label in m.labels.get(state, ()):
        if label.startswith(CELL_LABEL_PREFIX):
            x, y = label[len(CELL_LABEL_PREFIX) :].split(",")
            return int(x), int(y)
    return None


def heatmap_csv(rows: Iterable[BatchRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["state", "lower", "upper"])
    for row in rows:
        writer.writerow([row.state, _cell(row.lower), _cell(row.upper)])
    return buffer.getvalue()


def heatmap_ppm(
    m: Mdp, rows: Iterable[BatchRow], grid: Optional[Tuple[int, int]] = None, scale: int = 16
) -> str:
    """
    Plain PPM (P3) image of the grid, one scale x scale block per cell.

    A cell is colored by the largest lower bound among its states: white
    for 1 through red for 0. Cells without states are grey.

    Raises:
        InvalidQueryError: The model has no cell coordinates
    """
    best: Dict[Tuple[int, int], float] = {}
    coordinates = {s: cell_of(m, s) for s in m.states}
    if not any(coordinates.values()):
        raise InvalidQueryError("model has no 'cell:x,y' labels; an image needs grid coordinates")
    for row in rows:
        cell = coordinates.get(row.state)
        if cell is None or row.lower is None:
            continue
        best[cell] = max(best.get(cell, 0.0), row.lower)
    cells = [c for c in coordinates.values() if c is not None]
    width, height = grid or (max(x for x, _ in cells) + 1, max(y for _, y in cells) + 1)

    lines = ["P3", f"{width * scale} {height * scale}", "255"]
    for y in range(height):
        row_pixels = []
        for x in range(width):
            if (x, y) in best:
                shade = round(255 * best[(x, y)])
                pixel = f"255 {shade} {shade}"
            else:
                pixel = "128 128 128"
            row_pixels.extend([pixel] * scale)
        lines.extend([" ".join(row_pixels)] * scale)
    return "\n".join(lines) + "\n"


# ============================================================================
# EXPORT / CROSS-CHECK
# ============================================================================


def export_encoding(
    m: Mdp,
    state: str,
    t: str,
    kind: str = "lpstar",
    sense: str = "max",
    cfg: Optional[EncodingConfig] = None,
    pin: bool = False,
) -> Tuple[str, str]:
    """
    Build an encoding for the pivot `state` and render it.

    Returns:
        (LP text, metadata JSON)

    Raises:
        EncodingError: A fractional QP objective without pin, or a name collision
        ImportanceUndefinedError: t is unreachable
    """
    check_state(m, state)
    check_state(m, t)
    cfg = cfg or EncodingConfig()
    product = memory_product(m, state)
    p_star = max_reach_prob(m, t).p_star
    model = build_model(kind, product, t, sense, cfg, p_star=p_star, pin=pin)
    logger.info(
        "Encoding exported",
        kind=kind,
        pivot=state,
        target=t,
        variables=len(model.variables),
        constraints=len(model.constraints),
    )
    return serialize_lp(model), serialize_metadata(model)


def cross_check(m: Mdp, metadata_text: str, solution_text: str) -> DiscrepancyReport:
    """
    Check an external solver's solution of an exported encoding.

    Raises:
        SolutionFormatError: Malformed metadata or solution
    """
    metadata = parse_metadata(metadata_text)
    check_state(m, metadata["pivot"])
    check_state(m, metadata["target"])
    product = memory_product(m, metadata["pivot"])
    return cross_check_external(product, metadata["target"], metadata["kind"], solution_text, metadata)
