"""
Numerical tolerances.

These are part of the semantics of the analysis (not tuning knobs), so they
live here rather than in settings.
"""

# Distribution sums on input; also strategy and chain rows
DISTRIBUTION_TOLERANCE = 1e-9

# Value iteration stops when the largest update is below this
VALUE_ITERATION_TOLERANCE = 1e-12
VALUE_ITERATION_MAX_STEPS = 200_000

# Bellman backup equal to the optimum within this counts as locally optimal
LOCAL_OPTIMALITY_TOLERANCE = 1e-9

# Pr(reach t) within this of p* counts as reach-optimal
REACH_OPTIMAL_TOLERANCE = 1e-8

# Incumbent replaced only on improvement larger than this
IMPROVEMENT_TOLERANCE = 1e-12

# Strategies whose objectives differ by at most this tie; the
# lexicographically smallest one is the witness
TIE_TOLERANCE = 1e-10

# Solution values accepted in [-tol, 1 + tol]; rows must sum to 1 within tol
SOLUTION_TOLERANCE = 1e-6

# External and exact solver agree when within this
EXTERNAL_AGREEMENT_TOLERANCE = 4e-4

# Significant digits of probabilities in CSV / text output
OUTPUT_SIGNIFICANT_DIGITS = 12

# Significant digits of numbers in LP files
LP_SIGNIFICANT_DIGITS = 17
