"""
Command-Line Interface

    mdpattr gen loan --out loan.json
    mdpattr importance loan.json --state Application+
    mdpattr batch loan.json --format csv --jobs 4
    mdpattr export loan.json --encoding lpstar --state Consultation --out loan_consult
    mdpattr explain loan.json
    mdpattr heatmap grid.json --out grid.csv --image grid.ppm

Exit codes: 0 success, 1 input error, 2 importance undefined, 3 search
budget exhausted. Logs go to stderr; stdout carries only results.
"""

import functools
import sys
from pathlib import Path
from typing import Optional, Tuple

import click
from pydantic import ValidationError

from mdpattr.config import settings
from mdpattr.constants.examples import EXAMPLE_MODELS, EXAMPLE_NAMES
from mdpattr.errors import BudgetExceededError, InvalidModelError, InvalidQueryError, MdpAttrError
from mdpattr.middleware.logging_config import get_logger, setup_logging
from mdpattr.models.importance import ImportanceQuery
from mdpattr.models.mdp import Mdp, PathSpec
from mdpattr.models.optimization import EncodingConfig
from mdpattr.models.requests import ModelFile, resolve_target
from mdpattr.services.generators import generate
from mdpattr.services.reporting import (
    analyze,
    batch_csv,
    batch_json,
    batch_rows,
    cross_check,
    explain_text,
    export_encoding,
    heatmap_csv,
    heatmap_ppm,
)

logger = get_logger(__name__)

CLASS_CHOICES = {"all": "all", "opt": "reachOptimal"}


def handle_errors(command):
    """Map domain errors to 'error[CODE]: message' on stderr and the error's exit code."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except MdpAttrError as e:
            logger.debug("Command failed", code=e.code, details=e.details)
            click.echo(f"error[{e.code}]: {e.message}", err=True)
            sys.exit(e.exit_code)

    return wrapper


def load_model(path: str) -> Tuple[Mdp, ModelFile]:
    """
    Read and validate a model file.

    Raises:
        InvalidModelError: Unreadable, not JSON, or not a valid model
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidModelError(f"cannot read model file '{path}': {e.strerror}") from e
    try:
        document = ModelFile.model_validate_json(text)
    except ValidationError as e:
        raise InvalidModelError(
            f"'{path}' is not a valid model file", {"errors": e.errors(include_url=False)}
        ) from e
    return document.to_mdp(), document


def emit(text: str, out: Optional[str]) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    Path(out).write_text(text, encoding="utf-8")
    logger.info("Wrote output", path=out)


def _cell(ctx, param, value) -> Optional[Tuple[int, int]]:
    if value is None:
        return None
    try:
        x, y = (int(part) for part in value.split(","))
    except ValueError:
        raise click.BadParameter("expected 'x,y'")
    return x, y


def _grid(ctx, param, value) -> Optional[Tuple[int, int]]:
    if value is None:
        return None
    try:
        width, height = (int(part) for part in value.lower().split("x"))
    except ValueError:
        raise click.BadParameter("expected 'WxH', e.g. 7x5")
    return width, height


def _config(epsilon: Optional[float], **extra) -> EncodingConfig:
    values = {k: v for k, v in extra.items() if v is not None}
    if epsilon is not None:
        values["epsilon"] = epsilon
    return EncodingConfig(**values)


target_option = click.option("--target", "-t", help="Target state (default: the model's target)")
class_option = click.option(
    "--class", "strategy_class", type=click.Choice(list(CLASS_CHOICES)), default="all", show_default=True,
    help="Strategy class: all strategies or reach-optimal ones",
)
epsilon_option = click.option("--epsilon", type=float, help="Minimum Pr(reach target) of admissible strategies")
jobs_option = click.option("--jobs", "-j", type=int, default=None, help="Parallel workers (default: MDPATTR_BATCH_JOBS)")
out_option = click.option("--out", "-o", type=click.Path(dir_okay=False), help="Output file (default: stdout)")


@click.group()
@click.version_option(version=settings.VERSION, prog_name="mdpattr")
@click.option(
    "--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=None, help="Log level (default: MDPATTR_LOG_LEVEL)",
)
def cli(log_level):
    """
    Importance explanations for Markov decision processes.

    Bounds how important a state or a path is for reaching a target, over
    all strategies or the reach-optimal ones.
    """
    if log_level:
        settings.LOG_LEVEL = log_level.upper()
    setup_logging(sys.stderr)


# ============================================================================
# MODELS
# ============================================================================


@cli.command()
@click.argument("name", type=click.Choice(EXAMPLE_NAMES))
@click.option("--seed", type=int, help="random: seed")
@click.option("--states", type=int, help="random: number of states")
@click.option("--actions", type=int, help="random: maximum actions per state")
@click.option("--density", type=float, help="random: probability of a second successor")
@click.option("--width", type=int, help="gridworld: columns")
@click.option("--height", type=int, help="gridworld: rows")
@click.option("--lava-row", type=int, help="gridworld: row of the lava river")
@click.option("--door-col", type=int, help="gridworld: column of the door")
@click.option("--key", callback=_cell, help="gridworld: key cell 'x,y'")
@click.option("--start", callback=_cell, help="gridworld: start cell 'x,y'")
@click.option("--goal", callback=_cell, help="gridworld: goal cell 'x,y'")
@out_option
@handle_errors
def gen(name, out, **params):
    """
    Generate a bundled example model.

    NAME is one of loan, nonmono, gridworld or random. Output is
    deterministic for given parameters.
    """
    given = {k: v for k, v in params.items() if v is not None}
    unsupported = sorted(set(given) - set(EXAMPLE_MODELS[name]["parameters"]))
    if unsupported:
        raise InvalidQueryError(
            f"'{name}' does not take {', '.join(unsupported)}", {"parameters": EXAMPLE_MODELS[name]["parameters"]}
        )
    m, target = generate(name, **given)
    emit(ModelFile.from_mdp(m, target).model_dump_json(indent=2, by_alias=True) + "\n", out)


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@handle_errors
def validate(model):
    """Check a model file; lists every violation found."""
    try:
        m, _ = load_model(model)
    except InvalidModelError as e:
        violations = e.details.get("violations") if isinstance(e.details, dict) else None
        for violation in violations or [{"message": e.message}]:
            where = " ".join(f"{k}={violation[k]}" for k in ("state", "action") if violation.get(k))
            line = f"{violation.get('kind', 'invalid')}: {violation['message']}"
            click.echo(line + (f" ({where})" if where else ""))
        raise
    transitions = sum(len(dist) for rows in m.transitions.values() for dist in rows.values())
    click.echo(f"valid: {len(m.states)} states, {len(m.actions)} actions, {transitions} transitions")


# ============================================================================
# QUERIES
# ============================================================================


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--state", "-s", help="Subject state")
@click.option("--path", "-p", "path_text", help="Subject path 's0,a0,s1,...'")
@target_option
@class_option
@click.option("--sense", type=click.Choice(["both", "min", "max"]), default="both", show_default=True)
@click.option("--absolute", is_flag=True, help="Bound the event probability without normalizing")
@epsilon_option
@click.option("--timings", is_flag=True, help="Include wall-clock timings in the report")
@out_option
@handle_errors
def importance(model, state, path_text, target, strategy_class, sense, absolute, epsilon, timings, out):
    """Bound the importance of a state or a path for reaching the target."""
    if (state is None) == (path_text is None):
        raise InvalidQueryError("give exactly one of --state or --path")
    m, document = load_model(model)
    q = ImportanceQuery(
        target=resolve_target(document, target),
        state=state,
        path=PathSpec.parse(path_text) if path_text is not None else None,
        strategy_class=CLASS_CHOICES[strategy_class],
        sense=sense,
        normalized=not absolute,
        epsilon=epsilon,
    )
    report = analyze(m, q, with_timings=timings)
    emit(report.model_dump_json(indent=2) + "\n", out)
    if report.status == "budget":
        raise BudgetExceededError("search budget exhausted; reported bounds are not proven optimal")


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@target_option
@class_option
@click.option("--all-states", is_flag=True, default=True, help="Bound every state (the default)")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@epsilon_option
@jobs_option
@click.option("--timings", is_flag=True, help="Add a time column")
@out_option
@handle_errors
def batch(model, target, strategy_class, all_states, fmt, epsilon, jobs, timings, out):
    """Importance bounds of every state, one row per state sorted by name."""
    m, document = load_model(model)
    t = resolve_target(document, target)
    klass = CLASS_CHOICES[strategy_class]
    rows = batch_rows(m, t, klass, _config(epsilon), jobs=jobs, with_timings=timings)
    emit(batch_csv(rows, with_timings=timings) if fmt == "csv" else batch_json(rows, t, klass), out)


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@target_option
@class_option
@click.option("--high", type=float, default=0.95, show_default=True, help="Indispensable: lower bound at least this")
@click.option("--low", type=float, default=0.05, show_default=True, help="Detrimental: upper bound at most this")
@epsilon_option
@jobs_option
@out_option
@handle_errors
def explain(model, target, strategy_class, high, low, epsilon, jobs, out):
    """Summarize the indispensable and the detrimental states."""
    m, document = load_model(model)
    t = resolve_target(document, target)
    rows = batch_rows(m, t, CLASS_CHOICES[strategy_class], _config(epsilon), jobs=jobs)
    emit(explain_text(m, t, rows, high=high, low=low), out)


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@target_option
@class_option
@click.option("--out", "-o", type=click.Path(dir_okay=False), help="CSV file (default: stdout)")
@click.option("--image", type=click.Path(dir_okay=False), help="Plain PPM image of the grid")
@click.option("--grid", callback=_grid, help="Grid size 'WxH' (default: from cell labels)")
@click.option("--scale", type=click.IntRange(1, 64), default=16, show_default=True, help="Pixels per cell")
@epsilon_option
@jobs_option
@handle_errors
def heatmap(model, target, strategy_class, out, image, grid, scale, epsilon, jobs):
    """Importance heatmap: CSV of bounds, optionally a grid image."""
    m, document = load_model(model)
    t = resolve_target(document, target)
    rows = batch_rows(m, t, CLASS_CHOICES[strategy_class], _config(epsilon), jobs=jobs)
    picture = heatmap_ppm(m, rows, grid=grid, scale=scale) if image else None
    emit(heatmap_csv(rows), out)
    if picture is not None:
        Path(image).write_text(picture, encoding="ascii")
        logger.info("Wrote image", path=image)


# ============================================================================
# ENCODINGS
# ============================================================================


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--encoding", type=click.Choice(["qp", "qpstar", "lpstar"]), default="lpstar", show_default=True)
@click.option("--state", "-s", required=True, help="Pivot state")
@target_option
@click.option("--sense", type=click.Choice(["min", "max"]), default="max", show_default=True)
@click.option("--pin-reach", is_flag=True, help="Pin the QP denominator to p* so the objective is linear")
@click.option("--form", type=click.Choice(["fixed", "hierarchical"]), default=None, help="QP* objective form")
@click.option("--no-zero-rows", is_flag=True, help="Omit the redundant zero rows of the other target copy")
@epsilon_option
@click.option("--out", "-o", "prefix", required=True, help="Output prefix: writes PREFIX.lp and PREFIX.meta.json")
@handle_errors
def export(model, encoding, state, target, sense, pin_reach, form, no_zero_rows, epsilon, prefix):
    """Write an optimization encoding as an LP file plus metadata."""
    m, document = load_model(model)
    t = resolve_target(document, target)
    cfg = _config(
        epsilon,
        qp_star_form=form,
        include_redundant_zero_constraint=False if no_zero_rows else None,
    )
    lp, metadata = export_encoding(m, state, t, kind=encoding, sense=sense, cfg=cfg, pin=pin_reach)
    lp_path, meta_path = Path(f"{prefix}.lp"), Path(f"{prefix}.meta.json")
    lp_path.write_text(lp, encoding="utf-8")
    meta_path.write_text(metadata, encoding="utf-8")
    click.echo(f"wrote {lp_path} and {meta_path}")


@cli.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--meta", required=True, type=click.Path(exists=True, dir_okay=False), help="PREFIX.meta.json of the export")
@click.option(
    "--solution", type=click.Path(exists=True, dir_okay=False),
    help="Solver solution (default: PREFIX.sol under MDPATTR_SOLVER_SOLUTION_DIR)",
)
@out_option
@handle_errors
def crosscheck(model, meta, solution, out):
    """Compare an external solver's solution with exact evaluation."""
    m, _ = load_model(model)
    if solution is None:
        if not settings.SOLVER_SOLUTION_DIR:
            raise InvalidQueryError("no --solution given and MDPATTR_SOLVER_SOLUTION_DIR is not set")
        stem = Path(meta).name.removesuffix(".meta.json")
        solution = str(Path(settings.SOLVER_SOLUTION_DIR) / f"{stem}.sol")
        if not Path(solution).is_file():
            raise InvalidQueryError(f"no solution file '{solution}'")
    report = cross_check(
        m, Path(meta).read_text(encoding="utf-8"), Path(solution).read_text(encoding="utf-8")
    )
    emit(report.model_dump_json(indent=2) + "\n", out)


def main():
    cli(prog_name="mdpattr")


if __name__ == "__main__":
    main()
