"""Oracle-based solvers for budgeted interval uncertainty on 0/1 terms.

Every engine here reduces the robust problem to a short list of nominal
problems.  Candidate ``k`` fixes a deviation threshold ``tau_k``; its
subproblem minimises the nominal objective with each cost raised by
``max(0, deviation - tau_k)``, and its total is ``gamma * tau_k`` plus that
minimum.  The robust optimum is the smallest total.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Hashable, NamedTuple, Sequence

import numpy as np

from .core import (
    TOL,
    IntervalUncertainty,
    RobustSolution,
    SubproblemRecord,
    best_record,
    check_gamma,
)
from .errors import DomainError, OracleError


class OracleResult(NamedTuple):
    """What a nominal oracle returns: the point, its cost and its activity vector."""

    point: Any
    value: float
    activity: np.ndarray


Oracle = Callable[[np.ndarray], OracleResult]


@dataclass(frozen=True)
class ZeroOneLinearProblem:
    """Terms ``u_i * l_i(x)`` with ``l_i(x) in {0, 1}``, solved through ``oracle``.

    ``oracle(costs)`` must return a minimiser of ``costs @ l(x)`` over the
    (hidden) feasible set.
    """

    uncertainty: IntervalUncertainty
    oracle: Oracle
    description: str = ""

    @property
    def m(self) -> int:
        return self.uncertainty.m


@dataclass(frozen=True)
class CandidatePlan:
    """Ordered candidate indices; ``0`` is the zero-threshold candidate.

    Indices ``1..m`` refer to original term positions.  ``sort_permutation[p]``
    is the (0-based) original term at position ``p`` of the stable
    descending-deviation order.
    """

    candidates: tuple[int, ...]
    reduction: str
    sort_permutation: tuple[int, ...]
    m: int
    gamma: int | None = None

    def __len__(self) -> int:
        return len(self.candidates)

    def sorted_position(self, k: int) -> int:
        """1-based position of candidate ``k`` in sorted order (``m+1`` for zero)."""
        if k == 0:
            return self.m + 1
        return self.sort_permutation.index(k - 1) + 1

    def replace(self, candidates: Sequence[int]) -> "CandidatePlan":
        return CandidatePlan(
            tuple(candidates), self.reduction, self.sort_permutation, self.m, self.gamma
        )


def red_number_count(m: int, gamma: int) -> int:
    return math.ceil((m - gamma) / 2) + 1


def descending_order(deviation) -> np.ndarray:
    deviation = np.asarray(deviation, dtype=float)
    return np.argsort(-deviation, kind="stable")


def red_number_positions(m: int, gamma: int) -> list[int]:
    """Sorted-space positions kept by the reduction: ``gamma+1, gamma+3, ... <= m`` and ``m+1``."""
    return list(range(gamma + 1, m + 1, 2)) + [m + 1]


def make_candidate_plan(deviation, gamma: int, reduction: str = "full") -> CandidatePlan:
    deviation = np.asarray(deviation, dtype=float)
    m = deviation.size
    gamma = check_gamma(gamma, m, allow_zero=False)
    order = tuple(int(i) for i in descending_order(deviation))
    if reduction == "full":
        return CandidatePlan(tuple(range(m + 1)), "full", order, m, gamma)
    if reduction != "red_number":
        raise DomainError(f"unknown reduction {reduction!r}")
    candidates = [0 if p == m + 1 else order[p - 1] + 1 for p in red_number_positions(m, gamma)]
    plan = CandidatePlan(tuple(candidates), "red_number", order, m, gamma)
    assert len(plan) == red_number_count(m, gamma)
    return plan


def _threshold(deviation: np.ndarray, k: int) -> float:
    return 0.0 if k == 0 else float(deviation[k - 1])


def _prunable(gamma: int, tau: float, best_total: float) -> bool:
    # zero candidate is never pruned
    return tau > 0 and best_total < gamma * tau


def early_prune(
    plan: CandidatePlan, solved: Sequence[SubproblemRecord], gamma: int, deviation
) -> CandidatePlan:
    """Drop unsolved candidates whose constant alone exceeds a solved total."""
    totals = [r.total for r in solved if r.status in ("solved", "duplicate")]
    if not totals:
        raise DomainError("early_prune needs at least one solved subproblem")
    best = min(totals)
    done = {r.candidate for r in solved}
    deviation = np.asarray(deviation, dtype=float)
    keep = [
        k for k in plan.candidates
        if k in done or not _prunable(gamma, _threshold(deviation, k), best)
    ]
    return plan.replace(keep)


def _cost_key(costs: np.ndarray) -> bytes:
    return np.ascontiguousarray(costs, dtype=float).tobytes()


def _check_oracle_result(res: OracleResult, costs: np.ndarray, candidate) -> None:
    act = np.asarray(res.activity, dtype=float)
    if act.shape != costs.shape:
        raise OracleError(candidate, DomainError(f"activity shape {act.shape} != {costs.shape}"))
    if not np.all((act == 0) | (act == 1)):
        raise OracleError(candidate, DomainError("activity is not a 0/1 vector"))
    expected = float((costs * act).sum())
    if abs(expected - res.value) > TOL * max(1.0, abs(expected)):
        raise OracleError(
            candidate, DomainError(f"oracle value {res.value} != cost of activity {expected}")
        )


def threshold_sweep(
    candidates: Sequence[tuple[Hashable, float]],
    build_costs: Callable[[float], np.ndarray],
    oracle: Oracle,
    gamma: int,
    *,
    dedup: bool = True,
    prune: bool = False,
    check: bool = True,
    cache: dict | None = None,
) -> RobustSolution:
    """Solve one subproblem per ``(candidate, threshold)`` and return the best.

    With ``prune`` the candidates are processed by ascending threshold and any
    remaining candidate whose constant ``gamma * tau`` already exceeds the best
    total is skipped.  With ``dedup`` identical modified cost arrays are sent
    to the oracle only once.  Subproblems do not depend on ``gamma``, so a
    ``cache`` dict may be shared between sweeps over several budgets; the
    log and the ``solved`` count stay per-call, only ``oracle_calls`` drops.
    """
    order = list(range(len(candidates)))
    if prune:
        order.sort(key=lambda i: candidates[i][1])
    shared = cache if cache is not None else {}
    seen: set[bytes] = set()
    log: list[SubproblemRecord] = []
    calls = 0
    best_total = math.inf
    for i in order:
        cand, tau = candidates[i]
        if prune and _prunable(gamma, tau, best_total):
            log.append(SubproblemRecord(cand, gamma * tau, math.nan, "pruned"))
            continue
        costs = build_costs(tau)
        key = _cost_key(costs) if (dedup or cache is not None) else None
        if dedup and key in seen:
            res, status = shared[key], "duplicate"
        else:
            if key is not None and key in shared:
                res = shared[key]
            else:
                try:
                    res = oracle(costs)
                except Exception as exc:  # attach the candidate for the caller
                    raise OracleError(cand, exc) from exc
                calls += 1
                if check:
                    _check_oracle_result(res, costs, cand)
                if key is not None:
                    shared[key] = res
            if key is not None:
                seen.add(key)
            status = "solved"
        rec = SubproblemRecord(cand, gamma * tau, float(res.value), status, res.point)
        log.append(rec)
        best_total = min(best_total, rec.total)
    win = best_record(log)
    stats = {
        "candidates": len(candidates),
        "solved": sum(r.status == "solved" for r in log),
        "duplicates": sum(r.status == "duplicate" for r in log),
        "pruned": sum(r.status == "pruned" for r in log),
    }
    return RobustSolution(win.total, win.point, win.candidate, log, calls, stats)


def solve_pseudolin(
    problem: ZeroOneLinearProblem,
    gamma: int,
    plan: CandidatePlan | None = None,
    *,
    dedup: bool = True,
    prune: bool = False,
    cache: dict | None = None,
) -> RobustSolution:
    unc = problem.uncertainty
    gamma = check_gamma(gamma, unc.m, allow_zero=False)
    if plan is None:
        plan = make_candidate_plan(unc.deviation, gamma, "full")
    if plan.m != unc.m:
        raise DomainError(f"plan built for m={plan.m}, problem has m={unc.m}")
    if plan.reduction == "red_number" and plan.gamma != gamma:
        raise DomainError(f"red_number plan built for gamma={plan.gamma}, called with {gamma}")
    if any(k < 0 or k > unc.m for k in plan.candidates):
        raise DomainError("plan holds candidate indices outside [0, m]")
    dev = unc.deviation

    def build(tau: float) -> np.ndarray:
        return unc.nominal + np.maximum(dev - tau, 0.0)

    cands = [(k, _threshold(dev, k)) for k in plan.candidates]
    sol = threshold_sweep(
        cands, build, problem.oracle, gamma, dedup=dedup, prune=prune, cache=cache
    )
    sol.stats["reduction"] = plan.reduction
    return sol


def solve_bertsimas_sim(problem: ZeroOneLinearProblem, gamma: int) -> RobustSolution:
    """Classic full sweep over ``m+1`` thresholds for ``l(x) = x``; one oracle call each."""
    return solve_pseudolin(problem, gamma, dedup=False)


def solve_with_approx_oracle(
    problem: ZeroOneLinearProblem, gamma: int, alpha: float
) -> RobustSolution:
    """Full sweep with an ``alpha``-approximate oracle.

    The returned value is at most ``alpha`` times the robust optimum when the
    oracle honours its guarantee; ``alpha`` itself is not checked.
    """
    if not alpha >= 1:
        raise DomainError(f"approximation factor must be >= 1, got {alpha}")
    sol = solve_pseudolin(problem, gamma, dedup=False)
    sol.stats["alpha"] = float(alpha)
    return sol


@dataclass(frozen=True)
class AssignmentStructured:
    """Objective ``sum_i u_i * B[i, j(i)]`` where each row ``i`` picks one column.

    ``rows[i, j]`` is the entry of row block ``i`` at column ``j``.  The oracle
    receives an ``m x n`` cost matrix and returns an activity matrix with
    exactly one active column per row.
    """

    rows: np.ndarray
    uncertainty: IntervalUncertainty
    oracle: Oracle
    description: str = ""

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != self.uncertainty.m:
            raise DomainError(f"rows must be m x n with m={self.uncertainty.m}, got {rows.shape}")
        if not np.all(np.isfinite(rows)) or np.any(rows < 0):
            raise DomainError("block entries must be finite and nonnegative")
        if np.any(self.uncertainty.nominal < 0):
            raise DomainError("nominal row multipliers must be nonnegative")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]

    def nominal_costs(self) -> np.ndarray:
        return self.uncertainty.nominal[:, None] * self.rows

    def deviation_costs(self) -> np.ndarray:
        return self.uncertainty.deviation[:, None] * self.rows


def assignment_candidates(
    problem: AssignmentStructured, gamma: int, use_red_number: bool = False
) -> list[tuple[tuple[int, int], float]]:
    """``((k, l), threshold)`` pairs, 1-based, with ``(0, 0)`` for the zero threshold."""
    dev = problem.deviation_costs()
    n = problem.n
    if not use_red_number:
        out = [((0, 0), 0.0)]
        out += [((k + 1, l + 1), float(dev[k, l])) for k in range(problem.m) for l in range(n)]
        return out
    plan = make_candidate_plan(dev.ravel(), gamma, "red_number")
    out = []
    for f in plan.candidates:
        if f == 0:
            out.append(((0, 0), 0.0))
        else:
            k, l = divmod(f - 1, n)
            out.append(((k + 1, l + 1), float(dev[k, l])))
    return out


def solve_assignment_structured(
    problem: AssignmentStructured,
    gamma: int,
    use_red_number: bool = False,
    *,
    dedup: bool = True,
    prune: bool = False,
    cache: dict | None = None,
) -> RobustSolution:
    """Robust optimum via thresholds on the products ``deviation_i * B[i, j]``."""
    gamma = check_gamma(gamma, problem.m, allow_zero=False)
    nominal = problem.nominal_costs()
    dev = problem.deviation_costs()

    def build(tau: float) -> np.ndarray:
        return nominal + np.maximum(dev - tau, 0.0)

    cands = assignment_candidates(problem, gamma, use_red_number)
    sol = threshold_sweep(
        cands, build, problem.oracle, gamma, dedup=dedup, prune=prune, cache=cache
    )
    sol.stats["reduction"] = "red_number" if use_red_number else "full"
    return sol
