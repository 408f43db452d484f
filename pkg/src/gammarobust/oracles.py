"""Exact nominal solvers and feasible-set enumerators."""
from __future__ import annotations

import itertools
import math
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import TOL, enumeration_cap
from .errors import DomainError, ResourceError
from .reform import OracleResult

QAP_MAX_N = 12


def hungarian_solve(costs) -> tuple[tuple[int, ...], float]:
    """Minimum-cost assignment of every row to a distinct column.

    Returns ``(sigma, value)`` where ``sigma[i]`` is the column of row ``i``.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2:
        raise DomainError(f"cost matrix must be 2-dimensional, got shape {costs.shape}")
    if not np.all(np.isfinite(costs)):
        raise DomainError("cost matrix contains non-finite entries")
    m, n = costs.shape
    if m > n:
        raise DomainError(f"need rows <= columns, got {m} x {n}")
    if m == 0:
        return (), 0.0
    rows, cols = linear_sum_assignment(costs)
    sigma = [0] * m
    for r, c in zip(rows, cols):
        sigma[r] = int(c)
    return tuple(sigma), float(costs[rows, cols].sum())


def assignment_oracle(costs) -> OracleResult:
    """Oracle over permutation matrices (rows to distinct columns)."""
    costs = np.asarray(costs, dtype=float)
    sigma, value = hungarian_solve(costs)
    act = np.zeros_like(costs)
    act[np.arange(len(sigma)), sigma] = 1.0
    return OracleResult(sigma, value, act)


class QapResult(NamedTuple):
    perm: tuple[int, ...]
    value: float
    nodes: int


def qap_cost_tensor(flow, dist) -> np.ndarray:
    """``C[i, j, r, s] = flow[i, j] * dist[r, s]``."""
    flow = np.asarray(flow, dtype=float)
    dist = np.asarray(dist, dtype=float)
    return np.einsum("ij,rs->ijrs", flow, dist)


def qap_objective(cost: np.ndarray, perm: Sequence[int]) -> float:
    perm = np.asarray(perm)
    n = perm.size
    idx = np.arange(n)
    return float(cost[idx[:, None], idx[None, :], perm[:, None], perm[None, :]].sum())


def _check_qap_tensor(flow, dist, cost, max_n) -> np.ndarray:
    if cost is None:
        if flow is None or dist is None:
            raise DomainError("need flow and dist, or a cost tensor")
        flow = np.asarray(flow, dtype=float)
        dist = np.asarray(dist, dtype=float)
        if flow.shape != dist.shape or flow.ndim != 2 or flow.shape[0] != flow.shape[1]:
            raise DomainError("flow and dist must be equal-sized square matrices")
        cost = qap_cost_tensor(flow, dist)
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.shape != (n, n, n, n):
        raise DomainError(f"cost tensor must be n x n x n x n, got {cost.shape}")
    if n > max_n:
        raise ResourceError(f"QAP with n={n} exceeds branch-and-bound cap {max_n}")
    if not np.all(np.isfinite(cost)):
        raise DomainError("QAP data contains non-finite entries")
    if np.any(cost < 0):
        raise DomainError("QAP data must be nonnegative")
    return cost


def qap_branch_and_bound(flow=None, dist=None, cost=None, max_n: int = QAP_MAX_N) -> QapResult:
    """Exact QAP by depth-first branch and bound.

    Facility ``i`` is placed at location ``perm[i]``.  Facilities are fixed
    in index order and locations tried in increasing order, so the first
    optimum found is the lexicographically smallest.  The bound is the
    partial cost plus a linear assignment over the free facilities, where
    each (facility, location) pair is charged its own-diagonal cost, its
    interaction with fixed facilities in both directions, and the cheapest
    interaction with every other free facility.
    """
    cost = _check_qap_tensor(flow, dist, cost, max_n)
    n = cost.shape[0]
    if n == 0:
        return QapResult((), 0.0, 1)
    idx = np.arange(n)
    diag = cost[idx[:, None], idx[:, None], idx[None, :], idx[None, :]]  # diag[i, r] = C[i,i,r,r]

    best_perm = tuple(range(n))
    best_val = qap_objective(cost, best_perm)
    nodes = 0
    perm = [-1] * n
    used = np.zeros(n, dtype=bool)

    def lower_bound(depth: int, fixed: float) -> float:
        U = idx[depth:]
        F = idx[~used]
        L = diag[np.ix_(U, F)].copy()
        if depth:
            A = idx[:depth]
            sA = np.asarray(perm[:depth])
            out_ = cost[U[:, None, None], A[None, None, :], F[None, :, None], sA[None, None, :]]
            in_ = cost[A[None, None, :], U[:, None, None], sA[None, None, :], F[None, :, None]]
            L += out_.sum(axis=2) + in_.sum(axis=2)
        if U.size > 1:
            sub = cost[np.ix_(U, U, F, F)].copy()  # (i, j, r, s)
            f = F.size
            sub[:, :, np.arange(f), np.arange(f)] = np.inf
            cheapest = sub.min(axis=3)  # (i, j, r)
            u = U.size
            cheapest[np.arange(u), np.arange(u), :] = 0.0
            L += cheapest.sum(axis=1)
        _, lap = hungarian_solve(L)
        return fixed + lap

    def dfs(depth: int, fixed: float) -> None:
        nonlocal best_val, best_perm, nodes
        nodes += 1
        if depth == n:
            if fixed < best_val - TOL * max(1.0, abs(best_val)):
                best_val, best_perm = fixed, tuple(perm)
            return
        for r in range(n):
            if used[r]:
                continue
            perm[depth] = r
            used[r] = True
            inc = cost[depth, depth, r, r]
            if depth:
                A = idx[:depth]
                sA = np.asarray(perm[:depth])
                inc += cost[depth, A, r, sA].sum() + cost[A, depth, sA, r].sum()
            child = fixed + inc
            if depth + 1 == n:
                dfs(depth + 1, child)
            elif lower_bound(depth + 1, child) < best_val - TOL * max(1.0, abs(best_val)):
                dfs(depth + 1, child)
            used[r] = False
            perm[depth] = -1

    dfs(0, 0.0)
    return QapResult(best_perm, float(best_val), nodes)


def qap_exhaustive(flow=None, dist=None, cost=None, max_n: int = 9) -> QapResult:
    """Reference QAP solver: every permutation, lexicographic tie-break."""
    cost = _check_qap_tensor(flow, dist, cost, max_n)
    n = cost.shape[0]
    best_perm, best_val, count = None, math.inf, 0
    for perm in itertools.permutations(range(n)):
        count += 1
        val = qap_objective(cost, perm)
        if val < best_val - TOL * max(1.0, abs(best_val)) or best_perm is None:
            best_perm, best_val = perm, val
    return QapResult(tuple(best_perm), float(best_val), count)


def assignment_count(m: int, n: int, permutations: bool) -> int:
    if permutations:
        return math.perm(n, m) if m <= n else 0
    return n**m


def enumerate_assignments(
    m: int, n: int, permutations: bool = False, cap: int | None = None
) -> Iterator[np.ndarray]:
    """All ``m x n`` 0/1 matrices with one 1 per row.

    With ``permutations`` each column is used at most once as well.
    """
    cap = enumeration_cap(cap)
    total = assignment_count(m, n, permutations)
    if total > cap:
        raise ResourceError(f"{total} assignments exceed cap {cap}")
    choices = itertools.permutations(range(n), m) if permutations else itertools.product(
        range(n), repeat=m
    )
    for cols in choices:
        mat = np.zeros((m, n))
        mat[np.arange(m), list(cols)] = 1.0
        yield mat


def lah(n: int, k: int) -> int:
    """Number of ways to split ``n`` labelled items into ``k`` nonempty ordered lists."""
    if n == 0 and k == 0:
        return 1
    if n == 0 or k == 0 or k > n:
        return 0
    return math.comb(n - 1, k - 1) * math.factorial(n) // math.factorial(k)


def route_plan_count(n_customers: int, vehicles: int) -> int:
    return sum(lah(n_customers, k) for k in range(min(n_customers, vehicles) + 1))


def _set_partitions(items: list[int], max_blocks: int):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest, max_blocks):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        if len(part) < max_blocks:
            yield [[first]] + part


def enumerate_routes(
    n_customers: int, vehicles: int, cap: int | None = None
) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Every way to serve customers ``1..n`` with at most ``vehicles`` nonempty routes.

    Idle vehicles are simply absent.  Routes within a plan are sorted by their
    first customer, so relabelling vehicles never yields a second copy of a
    plan.  The count is ``sum_k lah(n, k)`` for ``k <= vehicles``.
    """
    if n_customers < 0 or vehicles < 0:
        raise DomainError("customer and vehicle counts must be nonnegative")
    cap = enumeration_cap(cap)
    total = route_plan_count(n_customers, vehicles)
    if total > cap:
        raise ResourceError(f"{total} route plans exceed cap {cap}")
    if n_customers > 0 and vehicles == 0:
        return
    for blocks in _set_partitions(list(range(1, n_customers + 1)), vehicles):
        for orders in itertools.product(*(itertools.permutations(b) for b in blocks)):
            yield tuple(sorted(orders, key=lambda route: route[0]))


def binary_points(n: int, feasible=None, cap: int | None = None) -> list[tuple[int, ...]]:
    """Feasible points of ``{0,1}^n`` in lexicographic order."""
    cap = enumeration_cap(cap)
    if 2**n > cap:
        raise ResourceError(f"2^{n} binary points exceed cap {cap}")
    pts = itertools.product((0, 1), repeat=n)
    return [p for p in pts if feasible is None or feasible(p)]


def enumeration_oracle(activities: Sequence[np.ndarray], points: Sequence | None = None):
    """Exact oracle that scans a listed feasible set; first minimiser wins."""
    acts = np.asarray([np.asarray(a, dtype=float).ravel() for a in activities])
    if acts.size == 0:
        raise DomainError("feasible set is empty")
    shape = np.asarray(activities[0]).shape
    points = list(points) if points is not None else list(range(len(acts)))

    def oracle(costs) -> OracleResult:
        costs = np.asarray(costs, dtype=float)
        values = acts @ costs.ravel()
        best = int(np.argmin(values))
        return OracleResult(points[best], float(values[best]), acts[best].reshape(shape))

    return oracle


def vertex_cover_local_ratio(n: int, edges: Sequence[tuple[int, int]]):
    """2-approximate weighted vertex cover oracle (local ratio over edges)."""
    edges = [(int(u), int(v)) for u, v in edges]

    def oracle(costs) -> OracleResult:
        w = np.array(costs, dtype=float)
        if np.any(w < 0):
            raise DomainError("vertex weights must be nonnegative")
        residual = w.copy()
        for u, v in edges:
            eps = min(residual[u], residual[v])
            residual[u] -= eps
            residual[v] -= eps
        # every edge now has an endpoint with zero residual weight
        touched = np.zeros(n, dtype=bool)
        for u, v in edges:
            touched[u] = touched[v] = True
        cover = ((residual <= 0) & touched).astype(float)
        return OracleResult(tuple(int(c) for c in cover), float(w @ cover), cover)

    return oracle


def is_vertex_cover(point, edges) -> bool:
    return all(point[u] or point[v] for u, v in edges)
