"""Domain types, the budgeted worst-case evaluator and brute-force reference optima.

Everything here works on *term evaluations*: for a fixed feasible point the
objective splits into ``m`` uncertain terms, each with a nominal value and a
worst-case deviation.  An adversary may push at most ``gamma`` terms to their
worst case, so the worst-case objective is the nominal sum plus the largest
``gamma`` positive deviations.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Hashable, Iterable

import numpy as np

from .errors import DomainError, ResourceError

TOL = 1e-9
DEFAULT_CAP = 10**7
CAP_ENV = "GAMMA_ROBUST_CAP"


def enumeration_cap(cap: int | None = None) -> int:
    """Resolve an enumeration cap: explicit value, then env override, then default."""
    if cap is not None:
        return int(cap)
    env = os.environ.get(CAP_ENV)
    if env:
        try:
            return int(float(env))
        except ValueError:
            raise DomainError(f"{CAP_ENV}={env!r} is not a number") from None
    return DEFAULT_CAP


def _frozen(values, name: str, ndim: int = 1) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise DomainError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class IntervalUncertainty:
    """Interval uncertainty ``u_i in [nominal_i, nominal_i + deviation_i]``."""

    nominal: np.ndarray
    deviation: np.ndarray

    def __post_init__(self):
        nominal = _frozen(self.nominal, "nominal")
        deviation = _frozen(self.deviation, "deviation")
        if nominal.shape != deviation.shape:
            raise DomainError(
                f"nominal and deviation lengths differ: {nominal.size} != {deviation.size}"
            )
        if nominal.size < 1:
            raise DomainError("uncertainty needs at least one term")
        if np.any(deviation < 0):
            raise DomainError("deviations must be nonnegative")
        object.__setattr__(self, "nominal", nominal)
        object.__setattr__(self, "deviation", deviation)

    @property
    def m(self) -> int:
        return int(self.nominal.size)

    def scaled(self, factor: float) -> "IntervalUncertainty":
        return IntervalUncertainty(self.nominal * factor, self.deviation * factor)

    def permuted(self, perm) -> "IntervalUncertainty":
        perm = np.asarray(perm)
        return IntervalUncertainty(self.nominal[perm], self.deviation[perm])


def check_gamma(gamma: int, m: int, *, allow_zero: bool = True) -> int:
    """Validate a budget against ``m`` terms.

    Reformulation engines call this with ``allow_zero=False``; the evaluator
    and the brute-force verifier accept ``0`` (the nominal problem).
    """
    if isinstance(gamma, (bool, np.bool_)) or int(gamma) != gamma:
        raise DomainError(f"gamma must be an integer, got {gamma!r}")
    gamma = int(gamma)
    low = 0 if allow_zero else 1
    if gamma < low or gamma > m:
        if gamma == 0 and not allow_zero:
            raise DomainError(
                "gamma=0 is the nominal problem; call the nominal oracle directly "
                "instead of a reformulation engine"
            )
        raise DomainError(f"gamma={gamma} outside [{low}, {m}]")
    return gamma


@dataclass(frozen=True)
class TermEvaluation:
    """Per-term nominal values and worst-case deviations at one feasible point."""

    nominal_values: np.ndarray
    deviations: np.ndarray

    def __post_init__(self):
        nominal = _frozen(self.nominal_values, "nominal_values")
        deviations = _frozen(self.deviations, "deviations")
        if nominal.shape != deviations.shape:
            raise DomainError("nominal_values and deviations must have equal length")
        object.__setattr__(self, "nominal_values", nominal)
        object.__setattr__(self, "deviations", deviations)

    @property
    def m(self) -> int:
        return int(self.nominal_values.size)

    @classmethod
    def linear(cls, uncertainty: IntervalUncertainty, activity) -> "TermEvaluation":
        """Terms ``u_i * l_i(x)`` for an activity vector ``l(x) >= 0``."""
        activity = np.asarray(activity, dtype=float)
        return cls(uncertainty.nominal * activity, uncertainty.deviation * activity)


def worst_case_value(ev: TermEvaluation, gamma: int) -> float:
    """Nominal sum plus the ``gamma`` largest positive deviations."""
    gamma = check_gamma(gamma, ev.m)
    total = float(ev.nominal_values.sum())
    if gamma == 0:
        return total
    # sequential sum in descending order keeps the value monotone in gamma
    # under rounding as well
    top = np.cumsum(-np.sort(-np.maximum(ev.deviations, 0.0)))
    return total + float(top[gamma - 1])


@lru_cache(maxsize=32)
def _subset_masks(m: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.arange(1 << m, dtype=np.int64)
    masks = ((rows[:, None] >> np.arange(m)) & 1).astype(float)
    sizes = masks.sum(axis=1).astype(int)
    masks.setflags(write=False)
    sizes.setflags(write=False)
    return masks, sizes


def subset_worst_case(ev: TermEvaluation, gamma: int, max_terms: int = 20) -> float:
    """Worst case by explicit enumeration of every subset ``S`` with ``|S| <= gamma``.

    Independent of :func:`worst_case_value`; used as a reference in tests and
    in verification runs.
    """
    gamma = check_gamma(gamma, ev.m)
    if ev.m > max_terms:
        raise ResourceError(f"subset enumeration over {ev.m} terms exceeds {max_terms}")
    masks, sizes = _subset_masks(ev.m)
    shifts = masks[sizes <= gamma] @ ev.deviations
    return float(ev.nominal_values.sum() + shifts.max())


def subset_worst_case_all(ev: TermEvaluation, max_terms: int = 20) -> np.ndarray:
    """Subset-enumeration worst case for every budget ``0..m`` at once."""
    if ev.m > max_terms:
        raise ResourceError(f"subset enumeration over {ev.m} terms exceeds {max_terms}")
    masks, sizes = _subset_masks(ev.m)
    shifts = masks @ ev.deviations
    best = np.full(ev.m + 1, -np.inf)
    np.maximum.at(best, sizes, shifts)
    return float(ev.nominal_values.sum()) + np.maximum.accumulate(best)


@dataclass(frozen=True)
class SubproblemRecord:
    """One entry of a solve log: ``total = constant + value``."""

    candidate: Hashable
    constant: float
    value: float
    status: str = "solved"
    point: Any = None

    @property
    def total(self) -> float:
        return self.constant + self.value


@dataclass
class RobustSolution:
    value: float
    point: Any
    winning_k: Hashable
    subproblem_log: list[SubproblemRecord] = field(default_factory=list)
    oracle_calls: int = 0
    stats: dict[str, Any] = field(default_factory=dict)


def best_record(log: Iterable[SubproblemRecord]) -> SubproblemRecord:
    """Smallest total; ties within ``TOL`` go to the earliest record."""
    best = None
    for rec in log:
        if rec.status not in ("solved", "duplicate", "enumerated"):
            continue
        if best is None or rec.total < best.total - TOL:
            best = rec
    if best is None:
        raise DomainError("no solved subproblem in log")
    return best


@dataclass(frozen=True)
class EnumerableProblem:
    """A problem whose feasible points can be listed and evaluated term-wise.

    ``points`` is called once per optimisation and must yield points in a
    deterministic order.  ``size`` (if known) lets the cap be checked before
    enumeration starts.
    """

    m: int
    points: Callable[[], Iterable[Any]]
    evaluate: Callable[[Any], TermEvaluation]
    size: int | None = None
    description: str = ""


def _checked_points(problem: EnumerableProblem, cap: int):
    if problem.size is not None and problem.size > cap:
        raise ResourceError(f"enumeration of {problem.size} points exceeds cap {cap}")
    for count, x in enumerate(problem.points(), start=1):
        if count > cap:
            raise ResourceError(f"enumeration exceeded cap {cap}")
        yield x


def brute_force_robust_optimum(
    problem: EnumerableProblem,
    gamma: int,
    cap: int | None = None,
    inner: str = "top",
) -> RobustSolution:
    """Minimise the worst-case objective over every enumerated point.

    ``inner="top"`` evaluates the adversary by top-gamma selection,
    ``inner="subsets"`` by explicit subset enumeration.
    """
    gamma = check_gamma(gamma, problem.m)
    cap = enumeration_cap(cap)
    if inner == "top":
        evaluate = worst_case_value
    elif inner == "subsets":
        evaluate = subset_worst_case
    else:
        raise DomainError(f"unknown inner evaluator {inner!r}")

    best_val, best_x, count = np.inf, None, 0
    for x in _checked_points(problem, cap):
        count += 1
        ev = problem.evaluate(x)
        if ev.m != problem.m:
            raise DomainError(f"evaluation has {ev.m} terms, problem declares {problem.m}")
        val = evaluate(ev, gamma)
        if val < best_val - TOL:
            best_val, best_x = val, x
    if best_x is None:
        raise DomainError("feasible set is empty")
    rec = SubproblemRecord("enumeration", 0.0, best_val, "enumerated", best_x)
    return RobustSolution(best_val, best_x, "enumeration", [rec], 0, {"points": count})


def generic_nofenchel_optimum(
    problem: EnumerableProblem, gamma: int, cap: int | None = None
) -> RobustSolution:
    """Candidate sweep over thresholds taken from each point's own deviations.

    For every point ``x`` and every ``k`` in ``0..m`` the objective
    ``gamma*t_k + sum_i [f_i + max(0, t_i - t_k)]`` with ``t_0 = 0`` and
    ``t_k`` the k-th deviation at ``x`` is an upper bound on the worst case,
    and the minimum over ``k`` is attained.
    """
    gamma = check_gamma(gamma, problem.m, allow_zero=False)
    cap = enumeration_cap(cap)
    m = problem.m
    best_val = np.full(m + 1, np.inf)
    best_x: list[Any] = [None] * (m + 1)
    count = 0
    for x in _checked_points(problem, cap):
        count += 1
        ev = problem.evaluate(x)
        theta = ev.deviations
        thresholds = np.concatenate(([0.0], theta))
        excess = np.maximum(theta[None, :] - thresholds[:, None], 0.0).sum(axis=1)
        vals = gamma * thresholds + ev.nominal_values.sum() + excess
        better = vals < best_val - TOL
        for k in np.flatnonzero(better):
            best_val[k] = vals[k]
            best_x[k] = x
    if count == 0:
        raise DomainError("feasible set is empty")
    log = [
        SubproblemRecord(k, 0.0, float(best_val[k]), "enumerated", best_x[k])
        for k in range(m + 1)
    ]
    win = best_record(log)
    return RobustSolution(win.total, win.point, win.candidate, log, 0, {"points": count})


def iter_subsets(m: int, gamma: int):
    """All index subsets of ``range(m)`` with at most ``gamma`` members."""
    for size in range(min(gamma, m) + 1):
        yield from itertools.combinations(range(m), size)
