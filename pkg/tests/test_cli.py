import subprocess
import sys

import pytest

from gammarobust import cli
from gammarobust.core import RobustSolution
from gammarobust.errors import DomainError, OracleError, ResourceError
from gammarobust.io import read_sweep_csv


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = cli.main([*args, "--csv", str(out), "--quiet"])
    return code, out


def series(rows):
    out = {}
    for r in rows:
        out.setdefault(r.config, []).append(r.value)
    return out


def nondecreasing(vals):
    return all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_qap_builtin_with_verify(tmp_path):
    code, out = run(tmp_path, "--problem", "qap", "--instance", "qap3", "--gamma", "1..3", "--verify")
    assert code == 0
    rows = read_sweep_csv(out).rows
    assert [r.gamma for r in rows] == [1, 2, 3]
    assert nondecreasing([r.value for r in rows])


def test_vrp_sweep_over_vehicles(tmp_path):
    code, out = run(tmp_path, "--problem", "vrp", "--instance", "r101", "--take-first", "5",
                    "--vehicles", "1..2", "--gamma", "1..5", "--verify")
    assert code == 0
    rows = read_sweep_csv(out).rows
    assert len(rows) == 10
    per_k = series(rows)
    assert set(per_k) == {"K=1", "K=2"}
    assert all(nondecreasing(v) for v in per_k.values())
    assert all(a >= b for a, b in zip(per_k["K=1"], per_k["K=2"]))


def test_rows_are_ordered_by_gamma_then_config(tmp_path):
    code, out = run(tmp_path, "--problem", "scheduling", "--instance", "sched5",
                    "--reduce", "rednumber,none", "--jobs", "2")
    assert code == 0
    keys = [(r.gamma, r.config) for r in read_sweep_csv(out).rows]
    assert keys == sorted(keys)
    assert len(keys) == 10


def test_quadbin_and_reductions_verify(tmp_path):
    code, _ = run(tmp_path, "--problem", "quadbin", "--instance", "quad4",
                  "--reduce", "none,rednumber", "--prune", "--verify")
    assert code == 0
    code, _ = run(tmp_path, "--problem", "qap", "--instance", "qap4", "--gamma", "1,5,16",
                  "--reduce", "all,symmetry", "--verify", "--uncertainty", "prop:0.1")
    assert code == 0


def test_exit_codes(tmp_path):
    qap = ["--problem", "qap", "--instance", "qap3"]
    assert run(tmp_path, *qap, "--gamma", "0")[0] == cli.EXIT_DOMAIN
    assert run(tmp_path, *qap, "--gamma", "10")[0] == cli.EXIT_DOMAIN
    assert run(tmp_path, *qap, "--gamma", "a..b")[0] == cli.EXIT_DOMAIN
    assert run(tmp_path, *qap, "--uncertainty", "gauss:3")[0] == cli.EXIT_DOMAIN
    assert run(tmp_path, "--problem", "scheduling", "--instance", "sched5",
               "--reduce", "symmetry")[0] == cli.EXIT_DOMAIN
    assert run(tmp_path, "--problem", "vrp", "--instance", "qap3")[0] == cli.EXIT_DOMAIN
    bad = tmp_path / "bad.dat"
    bad.write_text("3\n1 2 3\n")
    assert run(tmp_path, "--problem", "qap", "--instance", str(bad))[0] == cli.EXIT_PARSE
    assert run(tmp_path, "--problem", "vrp", "--instance", "r101",
               "--take-first", "50")[0] == cli.EXIT_PARSE
    assert run(tmp_path, "--problem", "vrp", "--instance", "r101", "--take-first", "10",
               "--vehicles", "3")[0] == cli.EXIT_RESOURCE
    assert run(tmp_path, "--problem", "qap", "--instance", str(tmp_path / "nope.dat"))[0] == cli.EXIT_OTHER


def test_cap_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("GAMMA_ROBUST_CAP", "100")
    code, _ = run(tmp_path, "--problem", "vrp", "--instance", "r101", "--take-first", "5")
    assert code == cli.EXIT_RESOURCE


def test_oracle_failures_map_by_cause():
    assert cli.exit_code(OracleError(1, ResourceError("x")))[0] == cli.EXIT_RESOURCE
    assert cli.exit_code(OracleError(1, DomainError("x")))[0] == cli.EXIT_DOMAIN
    assert cli.exit_code(OracleError(1, RuntimeError("x")))[0] == cli.EXIT_OTHER


def test_verify_reports_mismatch(tmp_path, monkeypatch, capsys):
    real = cli.qap_robust_solve

    def off_by_one(*args, **kwargs):
        sol = real(*args, **kwargs)
        return RobustSolution(sol.value + 1.0, sol.point, sol.winning_k, sol.subproblem_log,
                              sol.oracle_calls, sol.stats)

    monkeypatch.setattr(cli, "qap_robust_solve", off_by_one)
    code, out = run(tmp_path, "--problem", "qap", "--instance", "qap3", "--gamma", "1..2", "--verify")
    assert code == cli.EXIT_VERIFY
    assert "disagree" in capsys.readouterr().err
    # without --verify the same run succeeds
    assert run(tmp_path, "--problem", "qap", "--instance", "qap3", "--gamma", "1..2")[0] == 0


def test_csv_is_deterministic_without_timing(tmp_path):
    args = ["--problem", "vrp", "--instance", "c101", "--take-first", "5", "--vehicles", "1,2",
            "--uncertainty", "uniform:11", "--no-timing"]
    _, a = run(tmp_path, *args, "--jobs", "1", name="a.csv")
    _, b = run(tmp_path, *args, "--jobs", "3", name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_svg_written_on_request(tmp_path):
    svg = tmp_path / "s.svg"
    code, _ = run(tmp_path, "--problem", "scheduling", "--instance", "sched5", "--svg", str(svg))
    assert code == 0
    assert svg.read_text().startswith("<svg")


def test_parse_int_list():
    assert cli.parse_int_list("2..4") == [2, 3, 4]
    assert cli.parse_int_list("1,3") == [1, 3]
    assert cli.parse_int_list("all", 3) == [1, 2, 3]
    for bad in ("4..2", "", "x", "all"):
        with pytest.raises(DomainError):
            cli.parse_int_list(bad)


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "gammarobust", "--problem", "qap", "--instance", "qap3",
         "--gamma", "1", "--csv", str(out)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert "gamma" in proc.stdout
    assert out.exists()


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        cli.main(["--problem", "knapsack", "--instance", "x"])
    assert info.value.code == 2
