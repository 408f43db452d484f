"""Routing with soft due times whose deadlines may move earlier.

Customers ``1..n`` are served by at most ``K`` vehicles leaving depot ``0`` at
time zero.  Customer ``i`` costs ``max(0, T_i - b_i)`` where its due time
``b_i`` lies in ``[b_nom_i - db_i, b_nom_i]``; at most ``gamma`` due times move.
Every term is nondecreasing in the arrival times, so each route plan is
evaluated at its earliest arrivals and the feasible set is the finite list of
those arrival vectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..core import (
    TOL,
    EnumerableProblem,
    RobustSolution,
    SubproblemRecord,
    TermEvaluation,
    best_record,
    check_gamma,
    enumeration_cap,
)
from ..errors import DomainError, ResourceError
from ..oracles import enumerate_routes, route_plan_count

METHODS = ("nofenchel_2m1", "direct_topgamma")


def _vector(a, n: int, name: str) -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.shape != (n,):
        raise DomainError(f"{name} must have length {n}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class VrpInstance:
    """``travel`` is indexed over nodes ``0..n+1`` (depot, customers, depot copy)."""

    travel: np.ndarray
    service: np.ndarray
    due_nominal: np.ndarray
    due_deviation: np.ndarray
    vehicles: int = 1
    name: str = "vrp"

    def __post_init__(self):
        t = np.array(self.travel, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 2:
            raise DomainError(f"travel must be (n+2) x (n+2), got shape {t.shape}")
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise DomainError("travel times must be finite and nonnegative")
        t.setflags(write=False)
        n = t.shape[0] - 2
        s = _vector(self.service, n, "service")
        if np.any(s < 0):
            raise DomainError("service times must be nonnegative")
        b = _vector(self.due_nominal, n, "due_nominal")
        db = _vector(self.due_deviation, n, "due_deviation")
        if np.any(db < 0):
            raise DomainError("due-time deviations must be nonnegative")
        if int(self.vehicles) != self.vehicles or self.vehicles < 1:
            raise DomainError(f"need at least one vehicle, got {self.vehicles}")
        object.__setattr__(self, "travel", t)
        object.__setattr__(self, "service", s)
        object.__setattr__(self, "due_nominal", b)
        object.__setattr__(self, "due_deviation", db)
        object.__setattr__(self, "vehicles", int(self.vehicles))

    @property
    def n(self) -> int:
        return self.travel.shape[0] - 2

    @property
    def m(self) -> int:
        return self.n

    def with_vehicles(self, vehicles: int) -> "VrpInstance":
        return VrpInstance(
            self.travel, self.service, self.due_nominal, self.due_deviation, vehicles, self.name
        )

    def with_deviation(self, due_deviation) -> "VrpInstance":
        return VrpInstance(
            self.travel, self.service, self.due_nominal, due_deviation, self.vehicles, self.name
        )

    def plans(self, cap: int | None = None):
        return enumerate_routes(self.n, self.vehicles, cap)

    def terms(self, arrivals) -> TermEvaluation:
        """Nominal lateness and the extra lateness if the due time moves earlier."""
        arrivals = np.asarray(arrivals, dtype=float)
        late = np.maximum(arrivals - self.due_nominal, 0.0)
        worst = np.maximum(arrivals - self.due_nominal + self.due_deviation, 0.0)
        return TermEvaluation(late, worst - late)

    def enumerable(self, cap: int | None = None) -> EnumerableProblem:
        return EnumerableProblem(
            m=self.n,
            points=lambda: self.plans(cap),
            evaluate=lambda plan: self.terms(vrp_earliest_arrivals(self, plan)),
            size=route_plan_count(self.n, self.vehicles),
            description=f"{self.name}: route plans, K={self.vehicles}",
        )


def vrp_earliest_arrivals(inst: VrpInstance, plan: Sequence[Sequence[int]]) -> np.ndarray:
    """Arrival times when every vehicle leaves the depot at zero and never waits."""
    n = inst.n
    if len(plan) > inst.vehicles:
        raise DomainError(f"plan uses {len(plan)} routes but only {inst.vehicles} vehicles exist")
    seen = np.zeros(n + 1, dtype=bool)
    arrivals = np.full(n, np.nan)
    t, s = inst.travel, inst.service
    for route in plan:
        prev, clock = 0, 0.0
        for c in route:
            if int(c) != c or not 1 <= c <= n:
                raise DomainError(f"customer {c!r} outside 1..{n}")
            if seen[c]:
                raise DomainError(f"customer {c} visited twice")
            seen[c] = True
            clock += (s[prev - 1] if prev else 0.0) + t[prev, c]
            arrivals[c - 1] = clock
            prev = c
    if not seen[1:].all():
        missing = [i for i in range(1, n + 1) if not seen[i]]
        raise DomainError(f"customers {missing} are not served")
    return arrivals


def _arrival_matrix(inst: VrpInstance, cap: int | None):
    cap = enumeration_cap(cap)
    total = route_plan_count(inst.n, inst.vehicles)
    if total > cap:
        raise ResourceError(f"{total} route plans exceed cap {cap}")
    plans = list(inst.plans(cap))
    X = np.array([vrp_earliest_arrivals(inst, p) for p in plans]).reshape(len(plans), inst.n)
    return plans, X


def _argmin_first(vals: np.ndarray) -> int:
    # first index within TOL of the minimum
    best = vals.min()
    return int(np.flatnonzero(vals <= best + TOL * max(1.0, abs(best)))[0])


def _candidate_values(inst: VrpInstance, X: np.ndarray, gamma: int):
    """Per candidate: values over all plans (``inf`` where the regime does not apply)."""
    b, db = inst.due_nominal, inst.due_deviation
    late = np.maximum(X - b, 0.0)
    over = X - b + db
    yield 0, np.maximum(over, 0.0).sum(axis=1)
    for k in range(inst.n):
        xk = X[:, k]
        # due time already missed: threshold is the full shift
        vals = gamma * db[k] + np.maximum(late, over - db[k]).sum(axis=1)
        yield (k + 1, "late"), np.where(xk >= b[k], vals, np.inf)
        # arrival inside the shift window: threshold is the partial shift
        theta = xk - b[k] + db[k]
        vals = gamma * theta + np.maximum(late, over - theta[:, None]).sum(axis=1)
        inside = (xk >= b[k] - db[k]) & (xk <= b[k])
        yield (k + 1, "window"), np.where(inside, vals, np.inf)


def _exact_grid(*arrays):
    """Scale float arrays to Python integers on one power-of-two grid.

    Every finite float is a dyadic rational, so with the largest denominator
    ``D`` each entry becomes an exact integer and sums, differences, maxima
    and integer multiples stay exact.
    """
    denom = 1
    for a in arrays:
        for v in np.asarray(a, dtype=float).ravel():
            denom = max(denom, Fraction(float(v)).denominator)
    out = []
    for a in arrays:
        a = np.asarray(a, dtype=float)
        ints = [int(Fraction(float(v)) * denom) for v in a.ravel()]
        out.append(np.array(ints, dtype=object).reshape(a.shape))
    return denom, out


def _first_min(vals) -> int:
    best = min(vals)
    return next(i for i, v in enumerate(vals) if v == best)


def _solve_exact(inst: VrpInstance, plans, X, gamma: int, method: str) -> RobustSolution:
    denom, (Xi, b, db) = _exact_grid(X, inst.due_nominal, inst.due_deviation)
    late = np.maximum(Xi - b, 0)
    over = Xi - b + db
    stats = {"plans": len(plans), "method": method, "exact": True}
    if method == "direct_topgamma":
        shift = np.maximum(over, 0) - late
        rows = [sorted(r, reverse=True)[:gamma] for r in np.maximum(shift, 0).tolist()]
        vals = [sum(l) + sum(r) for l, r in zip(late.tolist(), rows)]
        i = _first_min(vals)
        value = float(Fraction(vals[i], denom))
        rec = SubproblemRecord("direct", 0.0, value, "enumerated", plans[i])
        stats["arrivals"] = X[i].copy()
        return RobustSolution(value, plans[i], "direct", [rec], 0, stats)
    log, exact = [], []
    zero = np.maximum(over, 0).sum(axis=1).tolist()
    entries = [(0, zero)]
    for k in range(inst.n):
        xk = Xi[:, k]
        late_vals = (gamma * db[k] + np.maximum(late, over - db[k]).sum(axis=1)).tolist()
        entries.append(((k + 1, "late"), [v if x >= b[k] else None for v, x in zip(late_vals, xk)]))
        theta = xk - b[k] + db[k]
        win_vals = (gamma * theta + np.maximum(late, over - theta[:, None]).sum(axis=1)).tolist()
        inside = [b[k] - db[k] <= x <= b[k] for x in xk]
        entries.append(((k + 1, "window"), [v if ok else None for v, ok in zip(win_vals, inside)]))
    for cand, vals in entries:
        avail = [v for v in vals if v is not None]
        if not avail:
            log.append(SubproblemRecord(cand, 0.0, np.inf, "infeasible"))
            continue
        best = min(avail)
        i = vals.index(best)
        log.append(SubproblemRecord(cand, 0.0, float(Fraction(best, denom)), "enumerated", plans[i]))
        exact.append((best, len(log) - 1))
    best = min(v for v, _ in exact)
    win = log[next(j for v, j in exact if v == best)]
    stats["arrivals"] = X[plans.index(win.point)].copy()
    stats["candidates"] = 2 * inst.n + 1
    return RobustSolution(float(Fraction(best, denom)), win.point, win.candidate, log, 0, stats)


def vrp_robust_solve(
    inst: VrpInstance,
    gamma: int,
    method: str = "nofenchel_2m1",
    cap: int | None = None,
    exact: bool = False,
) -> RobustSolution:
    """Robust route plan over all enumerated plans.

    ``nofenchel_2m1`` sweeps the ``2n+1`` threshold regimes (zero, and for
    each customer either the full or a partial due-time shift);
    ``direct_topgamma`` evaluates each plan's worst case directly.

    With ``exact`` the candidate arithmetic runs on integers after scaling
    the (floating-point) arrival and due-time data to a common dyadic grid,
    and the optimum is rounded once at the end.  Both methods then return
    the same float.
    """
    gamma = check_gamma(gamma, inst.n, allow_zero=False)
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
    plans, X = _arrival_matrix(inst, cap)
    if exact:
        return _solve_exact(inst, plans, X, gamma, method)
    if method == "direct_topgamma":
        late = np.maximum(X - inst.due_nominal, 0.0)
        shift = np.maximum(X - inst.due_nominal + inst.due_deviation, 0.0) - late
        top = np.cumsum(-np.sort(-np.maximum(shift, 0.0), axis=1), axis=1)[:, gamma - 1]
        vals = late.sum(axis=1) + top
        i = _argmin_first(vals)
        rec = SubproblemRecord("direct", 0.0, float(vals[i]), "enumerated", plans[i])
        return RobustSolution(
            float(vals[i]), plans[i], "direct", [rec], 0,
            {"plans": len(plans), "arrivals": X[i].copy(), "method": method},
        )
    log = []
    for cand, vals in _candidate_values(inst, X, gamma):
        if np.all(np.isinf(vals)):
            log.append(SubproblemRecord(cand, 0.0, np.inf, "infeasible"))
            continue
        i = _argmin_first(vals)
        log.append(SubproblemRecord(cand, 0.0, float(vals[i]), "enumerated", plans[i]))
    win = best_record(log)
    j = plans.index(win.point)
    return RobustSolution(
        win.total, win.point, win.candidate, log, 0,
        {"plans": len(plans), "arrivals": X[j].copy(), "method": method,
         "candidates": 2 * inst.n + 1},
    )
