"""Single-machine scheduling with uncertain processing times.

Job ``j`` placed at position ``i`` contributes ``p_j * q_i``; with the default
weights ``q_i = m + 1 - i`` the objective is the total completion time.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..core import EnumerableProblem, IntervalUncertainty, RobustSolution, TermEvaluation
from ..errors import DomainError
from ..oracles import assignment_oracle
from ..reform import AssignmentStructured, solve_assignment_structured


@dataclass(frozen=True)
class SchedulingInstance:
    proc_nominal: np.ndarray
    proc_deviation: np.ndarray
    positional_weights: np.ndarray | None = None
    name: str = "scheduling"

    def __post_init__(self):
        unc = IntervalUncertainty(self.proc_nominal, self.proc_deviation)
        if np.any(unc.nominal < 0):
            raise DomainError("processing times must be nonnegative")
        m = unc.m
        q = self.positional_weights
        q = np.arange(m, 0, -1, dtype=float) if q is None else np.array(q, dtype=float)
        if q.shape != (m,):
            raise DomainError(f"need {m} positional weights, got shape {q.shape}")
        if np.any(q <= 0):
            raise DomainError("positional weights must be positive")
        q.setflags(write=False)
        object.__setattr__(self, "proc_nominal", unc.nominal)
        object.__setattr__(self, "proc_deviation", unc.deviation)
        object.__setattr__(self, "positional_weights", q)

    @property
    def m(self) -> int:
        return self.proc_nominal.size

    @property
    def uncertainty(self) -> IntervalUncertainty:
        return IntervalUncertainty(self.proc_nominal, self.proc_deviation)

    def structured(self) -> AssignmentStructured:
        """Rows are jobs, columns positions, block entries the positional weights."""
        rows = np.tile(self.positional_weights, (self.m, 1))
        return AssignmentStructured(rows, self.uncertainty, assignment_oracle, self.name)

    def evaluate(self, positions) -> TermEvaluation:
        q = self.positional_weights[np.asarray(positions)]
        return TermEvaluation(self.proc_nominal * q, self.proc_deviation * q)

    def enumerable(self) -> EnumerableProblem:
        m = self.m
        return EnumerableProblem(
            m=m,
            points=lambda: itertools.permutations(range(m)),
            evaluate=self.evaluate,
            size=math.factorial(m),
            description=f"{self.name}: all {m}! schedules",
        )

    def spt_value(self) -> float:
        """Nominal optimum: shortest jobs on the heaviest positions."""
        return float(np.sort(self.proc_nominal) @ np.sort(self.positional_weights)[::-1])


def scheduling_robust_solve(
    inst: SchedulingInstance,
    gamma: int,
    use_red_number: bool = False,
    *,
    dedup: bool = True,
    prune: bool = False,
    cache: dict | None = None,
) -> RobustSolution:
    """Robust schedule; ``point[j]`` is the 0-based position of job ``j``."""
    return solve_assignment_structured(
        inst.structured(), gamma, use_red_number, dedup=dedup, prune=prune, cache=cache
    )
