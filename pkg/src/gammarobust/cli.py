"""Batch driver: load an instance, sweep the budget, write CSV and SVG.

Exit codes: 0 success, 1 other error, 2 usage, 3 parse error, 4 domain
error, 5 resource cap, 6 verification mismatch.
"""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from .core import TOL, RobustSolution, brute_force_robust_optimum
from .errors import (
    DomainError,
    GammaRobustError,
    OracleError,
    ParseError,
    ResourceError,
    VerificationError,
)
from .io import (
    SweepResult,
    SweepRow,
    UncertaintySpec,
    generate_uncertainty,
    parse_lower_triangle,
    parse_qaplib,
    parse_solomon,
    parse_vector_file,
    read_text,
    write_sweep_csv,
    write_sweep_svg,
)
from .problems.qap import QapInstance, qap_robust_solve
from .problems.quadbin import QuadraticBinaryInstance, quadratic_binary_robust_solve
from .problems.scheduling import SchedulingInstance, scheduling_robust_solve
from .problems.vrp import METHODS, VrpInstance, vrp_robust_solve

EXIT_OK, EXIT_OTHER, EXIT_PARSE, EXIT_DOMAIN, EXIT_RESOURCE, EXIT_VERIFY = 0, 1, 3, 4, 5, 6

PROBLEMS = ("qap", "scheduling", "vrp", "quadbin")
REDUCTIONS = ("none", "symmetry", "rednumber", "all")

# built-in id -> (problem kind, data file)
BUILTINS = {
    "qap3": ("qap", "qap3.dat"),
    "qap4": ("qap", "qap4.dat"),
    "syn9": ("qap", "syn9.dat"),
    "r101": ("vrp", "r101_head.txt"),
    "c101": ("vrp", "c101_head.txt"),
    "sched5": ("scheduling", "sched5.txt"),
    "quad4": ("quadbin", "quad4.txt"),
}


@dataclass
class RunConfig:
    problem: str
    instance: str
    uncertainty: UncertaintySpec
    gammas: str = "all"
    vehicles: str = "1"
    reduce: tuple[str, ...] = ("none",)
    method: str = "nofenchel_2m1"
    take_first: int | None = None
    swap: bool = False
    prune: bool = False
    verify: bool = False
    csv: str = "gamma_sweep.csv"
    svg: str | None = None
    jobs: int = 1
    timing: bool = True
    quiet: bool = False


@dataclass
class _Series:
    """One configuration: an instance and its solver, swept over the budgets."""

    config: str
    instance: object
    solve: Callable[[int, dict], RobustSolution]
    rows: list[SweepRow] = field(default_factory=list)
    verified: list[str] = field(default_factory=list)


def parse_int_list(text: str, upper: int | None = None) -> list[int]:
    """``A..B``, ``a,b,c``, a single integer, or ``all`` (``1..upper``)."""
    text = text.strip()
    try:
        if text == "all":
            if upper is None:
                raise DomainError("'all' needs a known upper bound")
            return list(range(1, upper + 1))
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise DomainError(f"empty range {text!r}")
            return list(range(lo, hi + 1))
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise DomainError(f"cannot read integer list {text!r}") from None
    if not vals:
        raise DomainError(f"empty integer list {text!r}")
    return vals


def _instance_text(ref: str, problem: str) -> tuple[str, str]:
    if ref in BUILTINS:
        kind, fname = BUILTINS[ref]
        if kind != problem:
            raise DomainError(f"built-in {ref!r} is a {kind} instance, not {problem}")
        return ref, resources.files("gammarobust").joinpath("data", fname).read_text()
    path = Path(ref)
    return path.stem, read_text(path)


def _reduction_flags(problem: str, reduce: str) -> tuple[bool, bool]:
    """``(symmetry, red_number)`` for a ``--reduce`` value."""
    if reduce not in REDUCTIONS:
        raise DomainError(f"unknown reduction {reduce!r}; expected one of {REDUCTIONS}")
    if problem == "vrp":
        if reduce != "none":
            raise DomainError("routing sweeps take no --reduce option; use --method")
        return False, False
    if problem != "qap" and reduce == "symmetry":
        raise DomainError("the symmetry reduction applies to qap only")
    symmetry = problem == "qap" and reduce in ("symmetry", "all")
    return symmetry, reduce in ("rednumber", "all")


@dataclass(frozen=True)
class AtLeast:
    """Feasibility predicate: at least ``count`` variables set to one."""

    count: int

    def __call__(self, x) -> bool:
        return sum(x) >= self.count


def _min_ones_directive(text: str) -> tuple[int, str]:
    """Strip an optional ``min_ones K`` line (default 1) from a quadbin file."""
    count, kept = 1, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split("#", 1)[0].split()
        if parts and parts[0] == "min_ones":
            if len(parts) != 2 or not parts[1].isdigit():
                raise ParseError("min_ones needs one nonnegative integer", lineno)
            count = int(parts[1])
            kept.append("")
        else:
            kept.append(line)
    return count, "\n".join(kept)


def build_series(cfg: RunConfig) -> tuple[str, list[_Series], int]:
    """Load the instance and return ``(name, series, m)``."""
    if cfg.problem not in PROBLEMS:
        raise DomainError(f"unknown problem {cfg.problem!r}; expected one of {PROBLEMS}")
    name, text = _instance_text(cfg.instance, cfg.problem)
    spec = cfg.uncertainty
    series: list[_Series] = []

    if cfg.problem == "vrp":
        if cfg.method not in METHODS:
            raise DomainError(f"unknown method {cfg.method!r}; expected one of {METHODS}")
        for reduce in cfg.reduce:
            _reduction_flags("vrp", reduce)
        data = parse_solomon(text, cfg.take_first)
        base = data.vrp_instance()
        dev = generate_uncertainty(spec, base.due_nominal)
        for k in parse_int_list(cfg.vehicles):
            inst = VrpInstance(base.travel, base.service, base.due_nominal, dev, k, data.name)
            series.append(_Series(
                f"K={k}", inst,
                lambda g, cache, inst=inst: vrp_robust_solve(inst, g, cfg.method),
            ))
        return name, series, base.n

    if cfg.problem == "qap":
        data = parse_qaplib(text, cfg.swap)
        symmetric = bool((data.flow == data.flow.T).all())
        dev = generate_uncertainty(spec, data.flow, symmetric=symmetric)
        inst = QapInstance(data.flow, dev, data.dist, name=name)

        def make(sym, red):
            return lambda g, cache: qap_robust_solve(
                inst, g, symmetry=sym, red_number=red, prune=cfg.prune, cache=cache
            )
    elif cfg.problem == "scheduling":
        nominal = parse_vector_file(text)
        inst = SchedulingInstance(nominal, generate_uncertainty(spec, nominal), name=name)

        def make(sym, red):
            return lambda g, cache: scheduling_robust_solve(
                inst, g, red, prune=cfg.prune, cache=cache
            )
    else:
        min_ones, body = _min_ones_directive(text)
        nominal = parse_lower_triangle(body)
        inst = QuadraticBinaryInstance(
            nominal, generate_uncertainty(spec, nominal), AtLeast(min_ones), name=name
        )

        def make(sym, red):
            return lambda g, cache: quadratic_binary_robust_solve(
                inst, g, red, prune=cfg.prune, cache=cache
            )

    for reduce in cfg.reduce:
        sym, red = _reduction_flags(cfg.problem, reduce)
        label = reduce + ("+prune" if cfg.prune else "")
        series.append(_Series(label, inst, make(sym, red)))
    return name, series, inst.m


def winner_text(k) -> str:
    if isinstance(k, tuple):
        return ":".join(str(v) for v in k)
    return str(k)


def _subproblems(sol: RobustSolution) -> int:
    if "solved" in sol.stats:
        return int(sol.stats["solved"])
    return sum(r.status in ("solved", "enumerated") for r in sol.subproblem_log)


def _run_series(s: _Series, name: str, gammas: Sequence[int], verify: bool) -> None:
    cache: dict = {}
    for g in gammas:
        start = time.perf_counter()
        sol = s.solve(g, cache)
        millis = 1000.0 * (time.perf_counter() - start)
        status = "-"
        if verify:
            try:
                ref = brute_force_robust_optimum(s.instance.enumerable(), g)
            except ResourceError:
                status = "skipped"
            else:
                ok = abs(sol.value - ref.value) <= TOL * max(1.0, abs(ref.value))
                status = "ok" if ok else f"MISMATCH brute={ref.value!r}"
        s.rows.append(SweepRow(name, g, s.config, sol.value, winner_text(sol.winning_k),
                               _subproblems(sol), sol.oracle_calls, millis))
        s.verified.append(status)


def _summary(rows: list[SweepRow], status: dict) -> str:
    head = f"{'gamma':>5}  {'config':<16} {'value':>16}  {'winner':<14} {'subprob':>7} {'calls':>6}  verify"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r.gamma:>5}  {r.config:<16} {r.value:>16.6f}  {r.winner:<14} "
                     f"{r.subproblems:>7} {r.oracle_calls:>6}  {status[(r.gamma, r.config)]}")
    return "\n".join(lines)


def run(cfg: RunConfig) -> int:
    """Run the sweep; returns the process exit code."""
    try:
        name, series, m = build_series(cfg)
        gammas = parse_int_list(cfg.gammas, m)
        if cfg.jobs < 1:
            raise DomainError("--jobs must be at least 1")
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            for fut in [pool.submit(_run_series, s, name, gammas, cfg.verify) for s in series]:
                fut.result()
        result = SweepResult(
            [r for s in series for r in s.rows],
            {"instance": name, "problem": cfg.problem, "uncertainty": cfg.uncertainty.describe()},
        ).sorted()
        status = {(r.gamma, s.config): v for s in series for r, v in zip(s.rows, s.verified)}
        write_sweep_csv(result, cfg.csv, timing=cfg.timing)
        if cfg.svg:
            write_sweep_svg(result, cfg.svg, title=f"{cfg.problem} {name}")
        if not cfg.quiet:
            print(f"{cfg.problem} instance {name}, uncertainty {cfg.uncertainty.describe()}, m={m}")
            print(_summary(result.rows, status))
        bad = [k for k, v in status.items() if v.startswith("MISMATCH")]
        if bad:
            raise VerificationError(f"{len(bad)} sweep point(s) disagree with brute force: {bad}")
        return EXIT_OK
    except (GammaRobustError, OSError) as exc:
        code, label = exit_code(exc)
        print(f"{label}: {exc}", file=sys.stderr)
        return code


def exit_code(exc: BaseException) -> tuple[int, str]:
    """Exit code and label; oracle failures are classified by their cause."""
    if isinstance(exc, OracleError):
        code, _ = exit_code(exc.cause)
        return code, "oracle failure"
    for cls, code, label in (
        (VerificationError, EXIT_VERIFY, "verification failed"),
        (ParseError, EXIT_PARSE, "parse error"),
        (DomainError, EXIT_DOMAIN, "domain error"),
        (ResourceError, EXIT_RESOURCE, "resource limit"),
    ):
        if isinstance(exc, cls):
            return code, label
    return EXIT_OTHER, "error"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gammarobust",
        description="Sweep the robustness budget of a robust discrete optimisation problem.",
    )
    p.add_argument("--problem", required=True, choices=PROBLEMS)
    p.add_argument("--instance", required=True,
                   help=f"file path or built-in id ({', '.join(BUILTINS)})")
    p.add_argument("--take-first", type=int, default=None,
                   help="routing: keep the depot and the first N customers")
    p.add_argument("--uncertainty", default="uniform:0",
                   help="prop:FACTOR, uniform:SEED or file:PATH (default uniform:0)")
    p.add_argument("--gamma", default="all", help="A..B, a,b,c or all (default all)")
    p.add_argument("--vehicles", default="1", help="routing: vehicle counts, A..B or list")
    p.add_argument("--reduce", default="none",
                   help="comma list of none, symmetry, rednumber, all")
    p.add_argument("--prune", action="store_true", help="skip candidates that cannot win")
    p.add_argument("--method", default="nofenchel_2m1", choices=METHODS, help="routing method")
    p.add_argument("--swap", action="store_true", help="QAPLIB: distance matrix comes first")
    p.add_argument("--verify", action="store_true", help="cross-check every point by brute force")
    p.add_argument("--csv", default="gamma_sweep.csv")
    p.add_argument("--svg", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="leave the millis column empty")
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = UncertaintySpec.parse(args.uncertainty)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    cfg = RunConfig(
        problem=args.problem,
        instance=args.instance,
        uncertainty=spec,
        gammas=args.gamma,
        vehicles=args.vehicles,
        reduce=tuple(r.strip() for r in args.reduce.split(",") if r.strip()),
        method=args.method,
        take_first=args.take_first,
        swap=args.swap,
        prune=args.prune,
        verify=args.verify,
        csv=args.csv,
        svg=args.svg,
        jobs=args.jobs,
        timing=not args.no_timing,
        quiet=args.quiet,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
