import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from gammarobust.errors import DomainError, GammaRobustError, ParseError
from gammarobust.io import (
    CSV_HEADER,
    QaplibData,
    SweepResult,
    SweepRow,
    UncertaintySpec,
    format_lower_triangle,
    format_qaplib,
    format_solomon,
    generate_uncertainty,
    parse_lower_triangle,
    parse_qaplib,
    parse_solomon,
    parse_vector_file,
    read_sweep_csv,
    write_sweep_csv,
    write_sweep_svg,
)

QAP_TEXT = "2\n0 3\n3 0\n0 2\n2 0"


def solomon_text(coords, ready=None, service=None):
    lines = ["SYN", "", "VEHICLE", "NUMBER     CAPACITY", "  3         50", "", "CUSTOMER",
             "CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME", ""]
    for i, (x, y) in enumerate(coords):
        r = 0 if ready is None else ready[i]
        s = 0 if service is None else service[i]
        lines.append(f"{i:5d} {x:8} {y:8} {i % 4:6d} {r:8} {r + 30:8} {s:6}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- QAPLIB


def test_qaplib_example():
    d = parse_qaplib(QAP_TEXT)
    assert d.n == 2
    assert np.array_equal(d.flow, [[0, 3], [3, 0]])
    assert np.array_equal(d.dist, [[0, 2], [2, 0]])


def test_qaplib_blank_lines_and_swap():
    spaced = "\n\n2\n\n0 3\n\n3 0\n\n\n0 2\n2 0\n\n"
    d = parse_qaplib(spaced)
    assert np.array_equal(d.flow, parse_qaplib(QAP_TEXT).flow)
    s = parse_qaplib(QAP_TEXT, swap=True)
    assert np.array_equal(s.flow, d.dist) and np.array_equal(s.dist, d.flow)


def test_qaplib_errors():
    with pytest.raises(ParseError, match=r"expected 9 tokens .* found 8"):
        parse_qaplib("2\n0 3\n3 0\n0 2\n2")
    with pytest.raises(ParseError) as info:
        parse_qaplib("2\n0 3\n3 x\n0 2\n2 0")
    assert info.value.line == 3 and info.value.column == 3
    with pytest.raises(ParseError):
        parse_qaplib("0")
    with pytest.raises(ParseError):
        parse_qaplib("-2 1 1 1 1 1 1 1 1")
    with pytest.raises(ParseError):
        parse_qaplib("")


def test_qaplib_round_trip():
    d = QaplibData(3, np.arange(9.0).reshape(3, 3), np.arange(9.0).reshape(3, 3) * 0.5)
    text = format_qaplib(d)
    again = parse_qaplib(text)
    assert np.array_equal(again.flow, d.flow) and np.array_equal(again.dist, d.dist)
    assert format_qaplib(again) == text


# ---------------------------------------------------------------- Solomon


def test_solomon_unit_grid():
    d = parse_solomon(solomon_text([(0, 0), (1, 0), (1, 1), (0, 1)]))
    assert d.n == 3
    t = d.travel_matrix()
    assert t.shape == (5, 5)
    assert t[0, 1] == 1.0
    assert t[0, 2] == np.sqrt(2)
    assert t[2, 4] == np.sqrt(2)  # node n+1 is the depot copy
    assert d.capacity == 50 and d.vehicle_number == 3


def test_solomon_take_first():
    coords = [(i, 2 * i) for i in range(26)]
    ready = list(range(0, 260, 10))
    service = [0] + [10] * 25
    text = solomon_text(coords, ready, service)
    d = parse_solomon(text, 8)
    assert d.n == 8
    inst = d.vrp_instance(vehicles=2)
    assert inst.n == 8 and inst.vehicles == 2
    assert list(inst.due_nominal) == ready[1:9]
    assert list(inst.service) == service[1:9]
    with pytest.raises(ParseError):
        parse_solomon(text, 26)
    with pytest.raises(ParseError):
        parse_solomon(text, -1)


def test_solomon_missing_sections():
    text = solomon_text([(0, 0), (1, 0)])
    with pytest.raises(ParseError, match="VEHICLE"):
        parse_solomon(text.replace("VEHICLE", "VEHICLES_GONE").replace("NUMBER", "X"))
    with pytest.raises(ParseError, match="CUSTOMER"):
        parse_solomon(text.replace("CUSTOMER", "NOPE"))
    short = "\n".join(text.splitlines()[:-1]) + "\n    1  2  3\n"
    with pytest.raises(ParseError, match="7 columns"):
        parse_solomon(short)
    with pytest.raises(ParseError, match="empty"):
        parse_solomon("\n".join(text.splitlines()[:8]))


def test_solomon_round_trip():
    text = solomon_text([(0, 0), (3, 4), (6, 8)], ready=[0, 5, 9], service=[0, 2, 2])
    d = parse_solomon(text)
    again = parse_solomon(format_solomon(d))
    for field in ("ids", "coords", "demand", "ready", "due", "service"):
        assert np.array_equal(getattr(d, field), getattr(again, field))
    assert format_solomon(again) == format_solomon(d)


# ---------------------------------------------------------------- uncertainty


def test_uncertainty_proportional():
    c = np.array([[0, 10], [10, 0]])
    assert np.array_equal(generate_uncertainty(UncertaintySpec("proportional", 0.1), c), [[0, 1], [1, 0]])
    assert not generate_uncertainty(UncertaintySpec("proportional", 0.0), c).any()


def test_uncertainty_uniform_is_deterministic_and_bounded():
    base = np.array([3.0, 0.0, 7.5, 10.0])
    spec = UncertaintySpec.parse("uniform:7")
    a, b = generate_uncertainty(spec, base), generate_uncertainty(spec, base)
    assert a.tobytes() == b.tobytes()
    assert np.all((a >= 0) & (a <= base))
    other = generate_uncertainty(UncertaintySpec.parse("uniform:8"), base)
    assert not np.array_equal(a, other)


def test_uncertainty_symmetric_matrix():
    base = np.array([[0, 4, 2], [4, 0, 6], [2, 6, 0]], dtype=float)
    dev = generate_uncertainty(UncertaintySpec.parse("uniform:1"), base, symmetric=True)
    assert np.array_equal(dev, dev.T)
    assert np.all(np.diag(dev) == 0) and np.all(dev <= base)


def test_uncertainty_errors(tmp_path):
    with pytest.raises(DomainError):
        generate_uncertainty(UncertaintySpec.parse("uniform:1"), np.array([1.0, -1.0]))
    for bad in ("prop:-1", "uniform:", "uniform:x", "gauss:1", "file:"):
        with pytest.raises(DomainError):
            UncertaintySpec.parse(bad)
    with pytest.raises(DomainError):
        UncertaintySpec("uniform_random")
    with pytest.raises(GammaRobustError, match="missing.txt"):
        generate_uncertainty(UncertaintySpec.parse(f"file:{tmp_path}/missing.txt"), np.ones(2))


def test_uncertainty_from_file(tmp_path):
    p = tmp_path / "dev.txt"
    p.write_text("0 1\n1 0\n")
    dev = generate_uncertainty(UncertaintySpec.parse(f"file:{p}"), np.ones((2, 2)))
    assert np.array_equal(dev, [[0, 1], [1, 0]])
    with pytest.raises(DomainError):
        generate_uncertainty(UncertaintySpec.parse(f"file:{p}"), np.ones(3))
    p.write_text("-1 1\n")
    with pytest.raises(DomainError):
        generate_uncertainty(UncertaintySpec.parse(f"file:{p}"), np.ones(2))


def test_spec_describe_round_trip():
    for text in ("prop:0.1", "uniform:7", "file:/x/y"):
        assert UncertaintySpec.parse(text).describe() == text


# ---------------------------------------------------------------- small formats


def test_vector_and_triangle_files():
    assert list(parse_vector_file("# jobs\n4 2 # trailing\n7")) == [4, 2, 7]
    with pytest.raises(ParseError):
        parse_vector_file("# nothing")
    tri = parse_lower_triangle("1\n2 3\n# c\n4 5 6\n")
    assert np.array_equal(tri, [[1, 0, 0], [2, 3, 0], [4, 5, 6]])
    assert np.array_equal(parse_lower_triangle(format_lower_triangle(tri)), tri)
    with pytest.raises(ParseError) as info:
        parse_lower_triangle("1\n2 3 4\n")
    assert info.value.line == 2


# ---------------------------------------------------------------- sweep writers


def two_rows():
    return SweepResult([
        SweepRow("inst", 1, "none", 1.5, "0", 3, 3, 1.25),
        SweepRow("inst", 2, "none", 2.0, "1:2", 3, 0, 0.5),
    ])


def test_csv_two_rows(tmp_path):
    path = write_sweep_csv(two_rows(), tmp_path / "out.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 3
    assert lines[1] == "inst,1,none,1.5,0,3,3,1.250"
    back = read_sweep_csv(path)
    assert [r.value for r in back.rows] == [1.5, 2.0]


def test_csv_without_timing(tmp_path):
    path = write_sweep_csv(two_rows(), tmp_path / "out.csv", timing=False)
    assert all(line.endswith(",") for line in path.read_text().splitlines()[1:])


def test_empty_sweep_writes_nothing(tmp_path):
    for writer in (write_sweep_csv, write_sweep_svg):
        target = tmp_path / "empty.out"
        with pytest.raises(DomainError):
            writer(SweepResult(), target)
        assert not target.exists()


def test_write_errors_name_the_path(tmp_path):
    bad = tmp_path / "no" / "such" / "dir.csv"
    with pytest.raises(GammaRobustError, match="dir.csv"):
        write_sweep_csv(two_rows(), bad)


def test_svg_monotone_series(tmp_path):
    rows = [SweepRow("i", g, cfg, v, "0", 1, 1) for cfg, vals in
            (("a", [1, 2, 2, 4]), ("b", [0.5, 0.5, 3, 3.5])) for g, v in enumerate(vals, 1)]
    res = SweepResult(rows, {"seed": "7"})
    path = write_sweep_svg(res, tmp_path / "p.svg", title="t")
    root = ET.parse(path).getroot()
    ns = {"s": "http://www.w3.org/2000/svg"}
    lines = root.findall("s:polyline", ns)
    assert [p.get("data-config") for p in lines] == ["a", "b"]
    for p in lines:
        ys = [float(pt.split(",")[1]) for pt in p.get("points").split()]
        # screen y grows downwards, so nondecreasing values give nonincreasing y
        assert all(b <= a for a, b in zip(ys, ys[1:]))
    text = path.read_text()
    assert "Γ" in text and "objective value" in text and "seed=7" in text
    assert not re.search(r"(href|src)=", text)


def test_sweep_result_ordering():
    rows = [SweepRow("i", 2, "b", 1, "0", 1, 1), SweepRow("i", 1, "b", 1, "0", 1, 1),
            SweepRow("i", 1, "a", 1, "0", 1, 1)]
    assert [(r.gamma, r.config) for r in SweepResult(rows).sorted().rows] == [
        (1, "a"), (1, "b"), (2, "b")]
