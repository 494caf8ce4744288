"""
LP File Format

Serializes an OptModel to the LP text format read by common MILP/QCQP
solvers (HiGHS, CBC, GLPK, Gurobi, CPLEX), writes the companion metadata
document, and reads flat "name value" solution files back.

Output is byte-stable: sections, variables and terms keep model order and
numbers are printed with 17 significant digits.
"""

import json
import re
from typing import Any, Dict, List, Mapping, Optional, Tuple

from mdpattr.errors import EncodingError, SolutionFormatError
from mdpattr.models.optimization import OptModel, QuadraticTerm
from mdpattr.utils.conversions import format_lp_number, sanitize_lp_name

_OBJECTIVE_LINE = re.compile(r"^\s*objective(?:\s+value)?\s*[:=]?\s*(\S+)\s*$", re.IGNORECASE)


def _unique_names(names: List[str], what: str) -> Dict[str, str]:
    mapping: Dict[str, str] = {}
    seen: Dict[str, str] = {}
    for name in names:
        lp = sanitize_lp_name(name)
        if lp in seen and seen[lp] != name:
            raise EncodingError(
                f"{what} names '{seen[lp]}' and '{name}' collide as '{lp}'", {"lp_name": lp}
            )
        seen[lp] = name
        mapping[name] = lp
    return mapping


def _linear_text(linear: Mapping[str, float], names: Mapping[str, str]) -> List[str]:
    parts: List[str] = []
    for name, coefficient in linear.items():
        magnitude = abs(coefficient)
        term = names[name] if magnitude == 1 else f"{format_lp_number(magnitude)} {names[name]}"
        if coefficient < 0:
            parts.append(f"- {term}")
        else:
            parts.append(f"+ {term}" if parts else term)
    return parts


def _quadratic_text(terms: List[QuadraticTerm], names: Mapping[str, str], scale: float = 1.0) -> str:
    parts: List[str] = []
    for q in terms:
        coefficient = q.coefficient * scale
        product = f"{names[q.first]} ^ 2" if q.first == q.second else f"{names[q.first]} * {names[q.second]}"
        magnitude = abs(coefficient)
        term = product if magnitude == 1 else f"{format_lp_number(magnitude)} {product}"
        if not parts:
            parts.append(f"- {term}" if coefficient < 0 else term)
        else:
            parts.append(f"{'-' if coefficient < 0 else '+'} {term}")
    return "[ " + " ".join(parts) + " ]"


def _expression(linear, quadratic, names, objective: bool = False) -> str:
    parts = _linear_text(linear, names)
    if quadratic:
        bracket = _quadratic_text(quadratic, names, scale=2.0 if objective else 1.0)
        if objective:
            bracket += " / 2"
        parts.append(f"+ {bracket}" if parts else bracket)
    return " ".join(parts)


def lp_names(model: OptModel) -> Dict[str, str]:
    """LP variable name -> model variable name."""
    mapping = _unique_names([v.name for v in model.variables], "variable")
    return {lp: name for name, lp in mapping.items()}


def serialize_lp(model: OptModel) -> str:
    """
    Render a model as LP text.

    Only the first objective is active; further objectives of a hierarchy
    are written as comment lines above it.

    Raises:
        EncodingError: Fractional objective, or two names that collide
            after sanitization
    """
    for obj in model.objectives:
        if obj.fractional is not None:
            raise EncodingError(
                "the fractional QP objective cannot be written as LP; pin the denominator to p* first",
                {"objective": obj.name, "hint": "pin_denominator / --pin-reach"},
            )
    if not model.objectives:
        raise EncodingError("model has no objective")

    names = _unique_names([v.name for v in model.variables], "variable")
    rows = _unique_names([c.name for c in model.constraints], "constraint")

    lines: List[str] = [f"\\ {model.name}"]
    for position, obj in enumerate(model.objectives[1:], start=2):
        text = _expression(obj.linear, obj.quadratic, names, objective=True)
        lines.append(f"\\ objective {position} of {len(model.objectives)} ({obj.sense}) {obj.name}: {text}")

    primary = model.objectives[0]
    lines.append("Minimize" if primary.sense == "min" else "Maximize")
    lines.append(f" obj: {_expression(primary.linear, primary.quadratic, names, objective=True)}".rstrip())

    lines.append("Subject To")
    for con in model.constraints:
        text = _expression(con.linear, con.quadratic, names) or f"0 {names[model.variables[0].name]}"
        lines.append(f" {rows[con.name]}: {text} {con.comparator} {format_lp_number(con.rhs)}")

    bounds = []
    for var in model.variables:
        if var.lower == var.upper:
            bounds.append(f" {names[var.name]} = {format_lp_number(var.lower)}")
        elif var.domain != "binary":
            bounds.append(f" {format_lp_number(var.lower)} <= {names[var.name]} <= {format_lp_number(var.upper)}")
    if bounds:
        lines.append("Bounds")
        lines.extend(bounds)

    generals = [names[v.name] for v in model.variables if v.domain == "integer"]
    if generals:
        lines.append("Generals")
        lines.extend(f" {name}" for name in generals)
    binaries = [names[v.name] for v in model.variables if v.domain == "binary"]
    if binaries:
        lines.append("Binaries")
        lines.extend(f" {name}" for name in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


def serialize_metadata(model: OptModel) -> str:
    """Companion metadata JSON: model metadata plus LP names and the objective hierarchy."""
    document: Dict[str, Any] = dict(model.metadata)
    document["lp_names"] = lp_names(model)
    document["objectives"] = [{"name": o.name, "sense": o.sense} for o in model.objectives]
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def parse_metadata(text: str) -> Dict[str, Any]:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise SolutionFormatError(f"metadata is not JSON: {e.msg}", {"line": e.lineno}) from e
    for key in ("kind", "sense", "pivot", "target", "strategy_vars", "lp_names", "objective_variable"):
        if key not in document:
            raise SolutionFormatError(f"metadata lacks '{key}'")
    return document


def parse_solution(text: str) -> Tuple[Dict[str, float], Optional[float]]:
    """
    Read a flat solution file.

    Every non-blank line is "name value". Lines starting with '#' or '\\'
    are comments; an "objective <value>" line (also "Objective value: v")
    carries the solver's reported objective.

    Returns:
        (values by LP name, reported objective or None)

    Raises:
        SolutionFormatError: Malformed line or duplicate variable
    """
    values: Dict[str, float] = {}
    reported: Optional[float] = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", "\\")):
            continue
        match = _OBJECTIVE_LINE.match(line)
        if match:
            try:
                reported = float(match.group(1))
            except ValueError as e:
                raise SolutionFormatError(f"line {number}: bad objective value", {"line": number}) from e
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionFormatError(f"line {number}: expected 'name value'", {"line": number, "text": raw})
        name, value = parts
        try:
            number_value = float(value)
        except ValueError as e:
            raise SolutionFormatError(f"line {number}: '{value}' is not a number", {"line": number}) from e
        if name in values:
            raise SolutionFormatError(f"line {number}: '{name}' given twice", {"line": number})
        values[name] = number_value
    if not values:
        raise SolutionFormatError("solution has no variable values")
    return values, reported


def write_solution(assignment: Mapping[str, float], model: OptModel, objective: Optional[float] = None) -> str:
    """Render an assignment in the flat solution format, using LP names."""
    names = {ir: lp for lp, ir in lp_names(model).items()}
    lines = []
    if objective is not None:
        lines.append(f"objective {format_lp_number(objective)}")
    for var in model.variables:
        if var.name in assignment:
            lines.append(f"{names[var.name]} {format_lp_number(assignment[var.name])}")
    return "\n".join(lines) + "\n"
