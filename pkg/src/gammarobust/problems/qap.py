"""Quadratic assignment with interval-uncertain flows.

Each flow entry ``c[i, j]`` is one uncertain term; placing facility ``i`` at
``r`` and ``j`` at ``s`` activates it with weight ``d[r, s]``.  Moving the
distance into the uncertainty turns the problem into one with ``n**4``
0/1-weighted terms ``c[i, j] * d[r, s] * x[i, r] * x[j, s]``, whose thresholds
are the products ``dc[k1, k2] * d[k3, k4]``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..core import (
    TOL,
    EnumerableProblem,
    IntervalUncertainty,
    RobustSolution,
    TermEvaluation,
    check_gamma,
)
from ..errors import DomainError
from ..oracles import QAP_MAX_N, qap_branch_and_bound
from ..reform import OracleResult, make_candidate_plan, threshold_sweep

ZERO = (0, 0, 0, 0)


def _square(a, name: str) -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or np.any(a < 0):
        raise DomainError(f"{name} must be finite and nonnegative")
    a.setflags(write=False)
    return a


def _is_symmetric_zero_diag(a: np.ndarray) -> bool:
    return bool(np.allclose(a, a.T, rtol=0, atol=TOL) and np.all(np.diag(a) == 0))


@dataclass(frozen=True)
class QapInstance:
    flow_nominal: np.ndarray
    flow_deviation: np.ndarray
    dist: np.ndarray
    symmetric: bool | None = None
    name: str = "qap"

    def __post_init__(self):
        c = _square(self.flow_nominal, "flow_nominal")
        dc = _square(self.flow_deviation, "flow_deviation")
        d = _square(self.dist, "dist")
        if not (c.shape == dc.shape == d.shape):
            raise DomainError("flow and distance matrices must share one size")
        detected = all(_is_symmetric_zero_diag(a) for a in (c, dc, d))
        if self.symmetric is None:
            object.__setattr__(self, "symmetric", detected)
        elif self.symmetric and not detected:
            raise DomainError("instance flagged symmetric but data is not symmetric with zero diagonal")
        object.__setattr__(self, "flow_nominal", c)
        object.__setattr__(self, "flow_deviation", dc)
        object.__setattr__(self, "dist", d)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def m(self) -> int:
        """Number of uncertain flow entries."""
        return self.n * self.n

    @property
    def uncertainty(self) -> IntervalUncertainty:
        return IntervalUncertainty(self.flow_nominal.ravel(), self.flow_deviation.ravel())

    def product_deviations(self) -> np.ndarray:
        """``P[k1, k2, k3, k4] = dc[k1, k2] * d[k3, k4]``."""
        return np.einsum("ij,rs->ijrs", self.flow_deviation, self.dist)

    def evaluate(self, perm) -> TermEvaluation:
        perm = np.asarray(perm)
        dd = self.dist[perm[:, None], perm[None, :]]
        return TermEvaluation((self.flow_nominal * dd).ravel(), (self.flow_deviation * dd).ravel())

    def enumerable(self) -> EnumerableProblem:
        n = self.n
        return EnumerableProblem(
            m=self.m,
            points=lambda: itertools.permutations(range(n)),
            evaluate=self.evaluate,
            size=math.factorial(n),
            description=f"{self.name}: all {n}! permutations",
        )


def full_count(n: int) -> int:
    return n**4 + 1


def symmetric_count(n: int) -> int:
    return (n**4 - n**3) // 2 + 1


def symmetric_red_number_count(n: int, gamma: int) -> int:
    """Plan size of the reduction applied to the symmetric candidate list."""
    return math.ceil((n**4 - n**3) / 4 + 0.5 - gamma / 2) + 1


def qap_candidates(inst: QapInstance, gamma: int, symmetry: bool, red_number: bool):
    """Candidate ``((k1, k2, k3, k4), threshold)`` list (1-based) and per-stage counts.

    ``symmetry`` keeps ``k1 < k2`` only.  With symmetric, zero-diagonal flow
    deviations every dropped quadruple has a kept twin with the same
    threshold, and for a fixed permutation each active term lands on its own
    kept quadruple, so the kept list is itself a valid 0/1 term list.  It is
    extended by one zero entry standing for the diagonal flow terms.
    ``red_number`` then keeps every other sorted position of that list (of
    the full ``n**4`` products without ``symmetry``).  Duplicated thresholds
    stay in the list; the sweep's dedup collapses them.
    """
    n = inst.n
    prod = inst.product_deviations()
    counts = {"full": full_count(n)}
    if symmetry:
        if not _is_symmetric_zero_diag(inst.flow_deviation):
            raise DomainError("symmetry reduction needs symmetric, zero-diagonal flow deviations")
        quads = [q for q in itertools.product(range(1, n + 1), repeat=4) if q[0] < q[1]]
        counts["symmetry"] = len(quads) + 1
        terms = quads + [ZERO]
    else:
        quads = list(itertools.product(range(1, n + 1), repeat=4))
        terms = quads

    def tau(q):
        if q == ZERO:
            return 0.0
        return float(prod[q[0] - 1, q[1] - 1, q[2] - 1, q[3] - 1])

    if red_number:
        plan = make_candidate_plan([tau(q) for q in terms], gamma, "red_number")
        chosen = [ZERO if k == 0 else terms[k - 1] for k in plan.candidates]
        # zero-threshold candidates go first, as in the full sweep
        quads = [q for q in chosen if q != ZERO]
        cands = [(ZERO, 0.0)] * (len(chosen) - len(quads)) + [(q, tau(q)) for q in quads]
        counts["red_number"] = len(cands)
    else:
        cands = [(ZERO, 0.0)] + [(q, tau(q)) for q in quads]
    counts["distinct_thresholds"] = len({t for _, t in cands})
    return cands, counts


def qap_oracle(n: int, max_n: int = QAP_MAX_N):
    """Oracle over permutations for an ``n^2 x n^2`` cost array indexed ``[(i,j), (r,s)]``."""

    def oracle(costs) -> OracleResult:
        tensor = np.asarray(costs, dtype=float).reshape(n, n, n, n)
        res = qap_branch_and_bound(cost=tensor, max_n=max_n)
        perm = np.asarray(res.perm)
        act = np.zeros((n, n, n, n))
        idx = np.arange(n)
        act[idx[:, None], idx[None, :], perm[:, None], perm[None, :]] = 1.0
        return OracleResult(res.perm, res.value, act.reshape(n * n, n * n))

    return oracle


def qap_robust_solve(
    inst: QapInstance,
    gamma: int,
    symmetry: bool = False,
    red_number: bool = False,
    dedup: bool = True,
    *,
    prune: bool = False,
    cache: dict | None = None,
    max_n: int = QAP_MAX_N,
) -> RobustSolution:
    gamma = check_gamma(gamma, inst.m, allow_zero=False)
    n = inst.n
    nominal = np.einsum("ij,rs->ijrs", inst.flow_nominal, inst.dist).reshape(n * n, n * n)
    dev = inst.product_deviations().reshape(n * n, n * n)

    def build(tau: float) -> np.ndarray:
        return nominal + np.maximum(dev - tau, 0.0)

    cands, counts = qap_candidates(inst, gamma, symmetry, red_number)
    sol = threshold_sweep(
        cands, build, qap_oracle(n, max_n), gamma, dedup=dedup, prune=prune, cache=cache
    )
    sol.stats["stage_counts"] = counts
    return sol
