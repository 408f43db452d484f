"""Instance parsers, uncertainty generators and sweep writers."""
from __future__ import annotations

import csv
import html
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
import numpy as np

from .errors import DomainError, GammaRobustError, ParseError

# ---------------------------------------------------------------- QAPLIB


@dataclass(frozen=True)
class QaplibData:
    n: int
    flow: np.ndarray
    dist: np.ndarray


def _tokens(text: str):
    """Yield ``(token, line, column)`` for every whitespace-separated token."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        for match in re.finditer(r"\S+", line):
            yield match.group(), lineno, match.start() + 1


def _number(tok: str, line: int, col: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"non-numeric token {tok!r}", line, col) from None


def parse_qaplib(text: str, swap: bool = False) -> QaplibData:
    """Parse ``n`` followed by two ``n x n`` matrices.

    The first matrix is taken as flow and the second as distance; ``swap``
    reverses that for files written the other way round.
    """
    toks = list(_tokens(text))
    if not toks:
        raise ParseError("empty QAPLIB text")
    tok, line, col = toks[0]
    size = _number(tok, line, col)
    if size != int(size) or size <= 0:
        raise ParseError(f"instance size must be a positive integer, got {tok!r}", line, col)
    n = int(size)
    need = 1 + 2 * n * n
    if len(toks) != need:
        last = toks[-1]
        raise ParseError(
            f"expected {need} tokens (1 + 2*{n}^2), found {len(toks)}", last[1], last[2]
        )
    values = np.array([_number(*t) for t in toks[1:]])
    a = values[: n * n].reshape(n, n)
    b = values[n * n:].reshape(n, n)
    if swap:
        a, b = b, a
    return QaplibData(n, a, b)


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def format_qaplib(data: QaplibData) -> str:
    rows = [str(data.n), ""]
    for mat in (data.flow, data.dist):
        rows += [" ".join(_fmt(v) for v in row) for row in mat]
        rows.append("")
    return "\n".join(rows)


# ---------------------------------------------------------------- Solomon

SOLOMON_COLUMNS = ("CUST NO.", "XCOORD.", "YCOORD.", "DEMAND", "READY TIME", "DUE DATE", "SERVICE TIME")


@dataclass(frozen=True)
class SolomonData:
    """Depot (row 0) plus the first customers of a Solomon table.

    Demand, capacity and due dates are kept for reference; the routing model
    ignores them and uses the ready time as the soft due time.
    """

    name: str
    vehicle_number: int
    capacity: float
    ids: np.ndarray
    coords: np.ndarray
    demand: np.ndarray
    ready: np.ndarray
    due: np.ndarray
    service: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids) - 1

    def travel_matrix(self) -> np.ndarray:
        """Euclidean times over depot, customers and the depot copy, unrounded."""
        pts = np.vstack([self.coords, self.coords[:1]])
        return np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))

    def vrp_instance(self, vehicles: int = 1, due_deviation=None):
        from .problems.vrp import VrpInstance

        dev = np.zeros(self.n) if due_deviation is None else due_deviation
        return VrpInstance(
            self.travel_matrix(), self.service[1:], self.ready[1:], dev, vehicles, self.name
        )


def parse_solomon(text: str, take_first: int | None = None) -> SolomonData:
    lines = text.splitlines()
    content = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip()]
    if not content:
        raise ParseError("empty Solomon text")
    name = content[0][1]

    def find(header: str) -> int:
        for pos, (_, ln) in enumerate(content):
            if ln.upper().startswith(header):
                return pos
        raise ParseError(f"missing section header {header!r}")

    v = find("VEHICLE")
    if v + 2 >= len(content) or not content[v + 1][1].upper().startswith("NUMBER"):
        raise ParseError("VEHICLE section lacks NUMBER/CAPACITY header", content[v][0])
    lineno, row = content[v + 2]
    parts = row.split()
    if len(parts) != 2:
        raise ParseError("VEHICLE section needs NUMBER and CAPACITY values", lineno)
    vehicle_number = int(_number(parts[0], lineno, 1))
    capacity = _number(parts[1], lineno, 1)

    c = find("CUSTOMER")
    if c + 1 >= len(content) or not content[c + 1][1].upper().startswith("CUST"):
        raise ParseError("CUSTOMER section lacks its column header", content[c][0])
    rows = []
    for lineno, ln in content[c + 2:]:
        parts = ln.split()
        if len(parts) != 7:
            raise ParseError(f"customer row needs 7 columns, found {len(parts)}", lineno)
        rows.append([_number(p, lineno, None) for p in parts])
    if not rows:
        raise ParseError("customer table is empty")
    table = np.array(rows)
    available = len(table) - 1
    if take_first is None:
        take_first = available
    if take_first < 0 or take_first > available:
        raise ParseError(f"asked for the first {take_first} customers, table has {available}")
    table = table[: take_first + 1]
    return SolomonData(
        name=name,
        vehicle_number=vehicle_number,
        capacity=capacity,
        ids=table[:, 0].astype(int),
        coords=table[:, 1:3],
        demand=table[:, 3],
        ready=table[:, 4],
        due=table[:, 5],
        service=table[:, 6],
    )


def format_solomon(data: SolomonData) -> str:
    out = [
        data.name, "", "VEHICLE", "NUMBER     CAPACITY",
        f"  {data.vehicle_number}         {_fmt(data.capacity)}", "", "CUSTOMER",
        "CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME", "",
    ]
    for i in range(len(data.ids)):
        vals = [data.ids[i], *data.coords[i], data.demand[i], data.ready[i], data.due[i],
                data.service[i]]
        out.append("  ".join(f"{_fmt(v):>8}" for v in vals))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- uncertainty


@dataclass(frozen=True)
class UncertaintySpec:
    """How deviations are built from nominal data.

    ``proportional`` scales the nominal data, ``uniform_random`` draws each
    deviation uniformly from ``[0, nominal]`` with a PCG64 generator seeded
    by ``seed``, ``from_file`` reads whitespace-separated numbers.
    """

    kind: str
    factor: float = 0.0
    seed: int | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("proportional", "uniform_random", "from_file"):
            raise DomainError(f"unknown uncertainty kind {self.kind!r}")
        if self.kind == "proportional" and not self.factor >= 0:
            raise DomainError("proportional factor must be nonnegative")
        if self.kind == "uniform_random" and self.seed is None:
            raise DomainError("uniform_random needs a seed")
        if self.kind == "from_file" and not self.path:
            raise DomainError("from_file needs a path")

    @classmethod
    def parse(cls, text: str) -> "UncertaintySpec":
        """Parse ``prop:FACTOR``, ``uniform:SEED`` or ``file:PATH``."""
        kind, _, arg = text.partition(":")
        try:
            if kind == "prop":
                return cls("proportional", factor=float(arg))
            if kind == "uniform":
                return cls("uniform_random", seed=int(arg))
        except ValueError:
            raise DomainError(f"bad uncertainty argument in {text!r}") from None
        if kind == "file":
            return cls("from_file", path=arg)
        raise DomainError(f"uncertainty must be prop:F, uniform:SEED or file:PATH, got {text!r}")

    def describe(self) -> str:
        if self.kind == "proportional":
            return f"prop:{self.factor:g}"
        if self.kind == "uniform_random":
            return f"uniform:{self.seed}"
        return f"file:{self.path}"


def generate_uncertainty(spec: UncertaintySpec, base, symmetric: bool = False) -> np.ndarray:
    """Deviations for ``base`` (a flow matrix or a due-time vector).

    With ``symmetric`` a random matrix is mirrored from its strict upper
    triangle so symmetric instances keep symmetric deviations.
    """
    base = np.asarray(base, dtype=float)
    if spec.kind == "proportional":
        return spec.factor * base
    if spec.kind == "from_file":
        try:
            dev = np.loadtxt(spec.path, dtype=float, ndmin=base.ndim)
        except OSError as exc:
            raise GammaRobustError(f"cannot read deviations from {spec.path}: {exc}") from exc
        except ValueError as exc:
            raise ParseError(f"bad deviation file {spec.path}: {exc}") from exc
        dev = dev.reshape(base.shape) if dev.size == base.size else dev
        if dev.shape != base.shape:
            raise DomainError(f"deviation file has shape {dev.shape}, expected {base.shape}")
        if np.any(dev < 0):
            raise DomainError("deviations must be nonnegative")
        return dev
    if np.any(base < 0):
        raise DomainError("random deviations need a nonnegative base")
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    dev = rng.random(base.shape) * base
    if symmetric:
        if base.ndim != 2:
            raise DomainError("symmetric deviations need a square matrix")
        upper = np.triu(dev, 1)
        dev = upper + upper.T
    return dev


# ---------------------------------------------------------------- sweeps

CSV_HEADER = ("instance", "gamma", "config", "value", "winner", "subproblems", "oracle_calls", "millis")


@dataclass(frozen=True)
class SweepRow:
    instance: str
    gamma: int
    config: str
    value: float
    winner: str
    subproblems: int
    oracle_calls: int
    millis: float | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def sorted(self) -> "SweepResult":
        rows = sorted(self.rows, key=lambda r: (r.gamma, r.config))
        return SweepResult(rows, dict(self.metadata))

    def series(self) -> dict[str, list[SweepRow]]:
        out: dict[str, list[SweepRow]] = {}
        for row in sorted(self.rows, key=lambda r: (r.config, r.gamma)):
            out.setdefault(row.config, []).append(row)
        return out


def _value_text(v: float) -> str:
    return repr(float(v))


def write_sweep_csv(result: SweepResult, path, timing: bool = True) -> Path:
    """Write one row per sweep point; ``timing=False`` blanks the millis column."""
    if not result.rows:
        raise DomainError("refusing to write an empty sweep")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in result.rows:
                millis = f"{r.millis:.3f}" if timing and r.millis is not None else ""
                writer.writerow([r.instance, r.gamma, r.config, _value_text(r.value), r.winner,
                                 r.subproblems, r.oracle_calls, millis])
    except OSError as exc:
        raise GammaRobustError(f"cannot write {path}: {exc}") from exc
    return path


def read_sweep_csv(path) -> SweepResult:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ParseError(f"unexpected CSV header {reader.fieldnames}")
        rows = [
            SweepRow(r["instance"], int(r["gamma"]), r["config"], float(r["value"]), r["winner"],
                     int(r["subproblems"]), int(r["oracle_calls"]),
                     float(r["millis"]) if r["millis"] else None)
            for r in reader
        ]
    return SweepResult(rows)


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def write_sweep_svg(result: SweepResult, path, title: str = "") -> Path:
    """Objective value against the budget, one polyline per configuration."""
    if not result.rows:
        raise DomainError("refusing to plot an empty sweep")
    series = result.series()
    width, height = 640, 420
    left, right, top, bottom = 70, 170, 40, 50
    gammas = [r.gamma for r in result.rows]
    values = [r.value for r in result.rows]
    xt = _nice_ticks(min(gammas), max(gammas))
    yt = _nice_ticks(min(0.0, min(values)), max(values))
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    pw, ph = width - left - right, height - top - bottom

    def sx(g):
        return left + (g - x0) / ((x1 - x0) or 1) * pw

    def sy(v):
        return top + ph - (v - y0) / ((y1 - y0) or 1) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if result.metadata:
        meta = "; ".join(f"{k}={v}" for k, v in sorted(result.metadata.items()))
        out.append(f"<desc>{html.escape(meta)}</desc>")
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle">{html.escape(title)}</text>')
    for t in xt:
        out.append(f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in yt:
        out.append(f'<line x1="{left - 4}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 7}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">Γ</text>')
    out.append(
        f'<text x="18" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + ph / 2:.1f})">objective value</text>'
    )
    for idx, (config, rows) in enumerate(series.items()):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{sx(r.gamma):.2f},{sy(r.value):.2f}" for r in rows)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}" '
                   f'data-config="{html.escape(config)}"/>')
        for r in rows:
            out.append(f'<circle cx="{sx(r.gamma):.2f}" cy="{sy(r.value):.2f}" r="2.5" fill="{color}"/>')
        ly = top + 14 + 18 * idx
        out.append(f'<line x1="{left + pw + 12}" y1="{ly - 4}" x2="{left + pw + 32}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 38}" y="{ly}">{html.escape(config)}</text>')
    out.append("</svg>")
    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n", encoding="utf-8")
    except OSError as exc:
        raise GammaRobustError(f"cannot write {path}: {exc}") from exc
    return path


# ---------------------------------------------------------------- small formats


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def parse_vector_file(text: str) -> np.ndarray:
    """Whitespace-separated numbers; ``#`` starts a comment."""
    vals = [_number(*t) for t in _tokens(_strip_comments(text))]
    if not vals:
        raise ParseError("no numbers found")
    return np.array(vals)


def parse_lower_triangle(text: str) -> np.ndarray:
    """Row ``k`` holds ``k`` numbers: ``p[k, 1..k]``.  Returns a square matrix."""
    rows = []
    for lineno, line in enumerate(_strip_comments(text).splitlines(), start=1):
        toks = [(m.group(), lineno, m.start() + 1) for m in re.finditer(r"\S+", line)]
        if not toks:
            continue
        if len(toks) != len(rows) + 1:
            raise ParseError(f"row {len(rows) + 1} needs {len(rows) + 1} entries, found {len(toks)}",
                             lineno)
        rows.append([_number(*t) for t in toks])
    if not rows:
        raise ParseError("no rows found")
    n = len(rows)
    out = np.zeros((n, n))
    for k, row in enumerate(rows):
        out[k, : k + 1] = row
    return out


def format_lower_triangle(mat) -> str:
    mat = np.asarray(mat)
    return "\n".join(" ".join(_fmt(v) for v in mat[k, : k + 1]) for k in range(len(mat))) + "\n"


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise GammaRobustError(f"cannot read {path}: {exc}") from exc
