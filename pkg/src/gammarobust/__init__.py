"""Robust discrete optimisation under budgeted interval uncertainty.

The worst case over a budget ``gamma`` is computed by sweeping thresholds and
calling an exact (or approximate) solver of the uncertainty-free problem once
per threshold.
"""
from .core import (
    IntervalUncertainty,
    RobustSolution,
    SubproblemRecord,
    TermEvaluation,
    brute_force_robust_optimum,
    generic_nofenchel_optimum,
    worst_case_value,
)
from .errors import (
    DomainError,
    GammaRobustError,
    OracleError,
    ParseError,
    ResourceError,
    VerificationError,
)
from .reform import (
    AssignmentStructured,
    ZeroOneLinearProblem,
    make_candidate_plan,
    solve_assignment_structured,
    solve_bertsimas_sim,
    solve_pseudolin,
    solve_with_approx_oracle,
)

__version__ = "0.1.0"
