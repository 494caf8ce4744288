"""
Conversion Utilities

Probability parsing and formatting at the file/CSV boundaries, and LP name
sanitization. Internally probabilities are floats; exact rationals travel
alongside as "p/q" strings.
"""

import re
from fractions import Fraction
from typing import Tuple, Union

from mdpattr.constants.numerics import LP_SIGNIFICANT_DIGITS, OUTPUT_SIGNIFICANT_DIGITS

_LP_INVALID = re.compile(r"[^A-Za-z0-9_]")


class ProbabilityFormat:
    """Parses and prints probabilities consistently across outputs."""

    @staticmethod
    def parse(value: Union[int, float, str]) -> Tuple[float, Fraction]:
        """
        Parse a probability given as a number or a "p/q" / decimal string.

        Decimals are converted exactly: 0.1 means 1/10.

        Returns:
            (float value, exact fraction)

        Raises:
            ValueError: If the text is not a number or fraction
        """
        if isinstance(value, bool):
            raise ValueError(f"not a probability: {value!r}")
        if isinstance(value, (int, float)):
            exact = Fraction(repr(value)) if isinstance(value, float) else Fraction(value)
        else:
            text = value.strip()
            try:
                exact = Fraction(text)
            except (ValueError, ZeroDivisionError) as e:
                raise ValueError(f"not a probability: {value!r}") from e
        return float(exact), exact

    @staticmethod
    def exact_text(exact: Fraction) -> str:
        """Canonical text of an exact probability ("1/10", "1")."""
        return str(exact)

    @staticmethod
    def to_text(value: float) -> str:
        """Probability with 12 significant digits, '.' decimal separator."""
        text = format(value, f".{OUTPUT_SIGNIFICANT_DIGITS}g")
        return "0" if text == "-0" else text


def format_lp_number(value: float) -> str:
    """Number as written to LP files (17 significant digits, no negative zero)."""
    if value == 0:
        return "0"
    return format(value, f".{LP_SIGNIFICANT_DIGITS}g")


def sanitize_lp_name(name: str) -> str:
    """Map an identifier onto [A-Za-z0-9_], starting with a letter."""
    cleaned = _LP_INVALID.sub("_", name)
    if not cleaned or not cleaned[0].isalpha():
        cleaned = "v_" + cleaned
    return cleaned


def join_names(names) -> str:
    """English list: 'a', 'a and b', 'a, b, and c'."""
    names = list(names)
    if not names:
        return ""
    if len(names) == 1:
        return names[0]
    if len(names) == 2:
        return f"{names[0]} and {names[1]}"
    return ", ".join(names[:-1]) + f", and {names[-1]}"
