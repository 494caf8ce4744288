"""
Utility modules for mdpattr.
"""

from mdpattr.utils.conversions import (
    ProbabilityFormat,
    format_lp_number,
    join_names,
    sanitize_lp_name,
)

__all__ = ["ProbabilityFormat", "format_lp_number", "join_names", "sanitize_lp_name"]
