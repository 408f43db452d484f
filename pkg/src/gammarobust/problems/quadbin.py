"""Binary quadratic programs with uncertain pair coefficients.

The objective is ``sum p[k, l] * x_k * x_l`` over pairs ``l <= k`` (or
``l < k`` with ``include_diagonal=False``).  Each pair is a 0/1 term, so the
pseudo-linear sweep applies with an exhaustive oracle over the feasible set.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..core import EnumerableProblem, IntervalUncertainty, RobustSolution, TermEvaluation
from ..errors import DomainError
from ..oracles import binary_points, enumeration_oracle
from ..reform import ZeroOneLinearProblem, make_candidate_plan, solve_pseudolin


def at_least_one(x) -> bool:
    return sum(x) >= 1


@dataclass(frozen=True)
class QuadraticBinaryInstance:
    pair_nominal: np.ndarray
    pair_deviation: np.ndarray
    feasible: Callable[[tuple[int, ...]], bool] | None = None
    include_diagonal: bool = True
    name: str = "quadbin"
    _points: list = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.array(self.pair_nominal, dtype=float)
        dp = np.array(self.pair_deviation, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape != dp.shape:
            raise DomainError("pair coefficient maps must be equal-sized square matrices")
        if np.any(dp < 0):
            raise DomainError("pair deviations must be nonnegative")
        object.__setattr__(self, "pair_nominal", p)
        object.__setattr__(self, "pair_deviation", dp)
        pts = binary_points(p.shape[0], self.feasible)
        if not pts:
            raise DomainError("feasible set is empty")
        object.__setattr__(self, "_points", pts)

    @property
    def n(self) -> int:
        return self.pair_nominal.shape[0]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        """Uncertain pairs ``(k, l)``, 1-based, ``l <= k``, row-major."""
        n = self.n
        return [
            (k, l)
            for k in range(1, n + 1)
            for l in range(1, n + 1)
            if l < k or (self.include_diagonal and l == k)
        ]

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def points(self) -> list[tuple[int, ...]]:
        return list(self._points)

    @property
    def uncertainty(self) -> IntervalUncertainty:
        ks, ls = self._pair_index()
        return IntervalUncertainty(self.pair_nominal[ks, ls], self.pair_deviation[ks, ls])

    def _pair_index(self):
        pairs = np.array(self.pairs, dtype=int) - 1
        return pairs[:, 0], pairs[:, 1]

    def activity(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ks, ls = self._pair_index()
        return x[ks] * x[ls]

    def zero_one_problem(self) -> ZeroOneLinearProblem:
        acts = [self.activity(x) for x in self._points]
        oracle = enumeration_oracle(acts, self._points)
        return ZeroOneLinearProblem(self.uncertainty, oracle, self.name)

    def evaluate(self, x) -> TermEvaluation:
        return TermEvaluation.linear(self.uncertainty, self.activity(x))

    def enumerable(self) -> EnumerableProblem:
        return EnumerableProblem(
            m=self.m,
            points=lambda: iter(self._points),
            evaluate=self.evaluate,
            size=len(self._points),
            description=f"{self.name}: {len(self._points)} feasible points",
        )


def quadratic_binary_robust_solve(
    inst: QuadraticBinaryInstance,
    gamma: int,
    red_number: bool = False,
    *,
    dedup: bool = True,
    prune: bool = False,
    cache: dict | None = None,
) -> RobustSolution:
    """Robust optimum; ``winning_k`` is the threshold pair ``(k, l)`` or ``(0, 0)``."""
    prob = inst.zero_one_problem()
    plan = make_candidate_plan(
        prob.uncertainty.deviation, gamma, "red_number" if red_number else "full"
    )
    sol = solve_pseudolin(prob, gamma, plan, dedup=dedup, prune=prune, cache=cache)
    pairs = inst.pairs
    sol.winning_k = (0, 0) if sol.winning_k == 0 else pairs[sol.winning_k - 1]
    return sol
