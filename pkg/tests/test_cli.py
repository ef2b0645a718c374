import json
import subprocess
import sys
from fractions import Fraction

import pytest

from gapforge import cli
from gapforge.lpformat import parse_lp
from gapforge.simplex import solve_lp


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(text):
    return json.loads(text)


def test_solve_lp_prints_value(capsys):
    code, out, _ = run(capsys, "solve-lp", "--instance", "c5.json", "--basic")
    assert code == 0 and out.strip() == "1"
    code, out, _ = run(capsys, "solve-lp", "--instance", "k3.json", "--level", "3")
    assert code == 0 and out.strip() == "2/3"


def test_usage_errors_exit_3(capsys):
    assert run(capsys, )[0] == 3
    assert run(capsys, "solve-lp")[0] == 3
    assert run(capsys, "lift", "--template", "c5.json", "--n", "x", "--m", "3", "--seed", "1")[0] == 3
    code, _, err = run(capsys, "solve-lp", "--instance", "nope.json")
    assert code == 3 and report(err)["status"] == "refused"
    code, _, _ = run(capsys, "solve-lp", "--instance", "k3.json", "--level", "1")
    assert code == 3


def test_internal_error_exit_1(capsys, monkeypatch):
    def boom(args):
        raise RuntimeError("bug")
    monkeypatch.setitem(cli.COMMANDS, "soundness", boom)
    code, out, _ = run(capsys, "soundness", "--template", "c5.json", "--n", "3", "--m", "10", "--seed", "1")
    assert code == 1 and report(out)["status"] == "error"


def test_export_roundtrip(capsys, tmp_path):
    path = tmp_path / "k3.lp"
    code, _, _ = run(capsys, "export-lp", "--instance", "k3.json", "--level", "3", "--out", str(path))
    assert code == 0
    assert solve_lp(parse_lp(path.read_text()))[0] == Fraction(2, 3)
    code, out, _ = run(capsys, "export-lp", "--instance", "c5.json")
    assert out.startswith("\\ exact") and "Subject To" in out


def test_lift_and_certify_from_file(capsys, tmp_path):
    lifted = tmp_path / "lifted.json"
    code, out, _ = run(capsys, "--deterministic", "lift", "--template", "c5.json", "--n", "8", "--m", "60",
                       "--seed", "3", "--out", str(lifted))
    rep = report(out)
    assert code == 0 and rep["result"]["basic"]["value"] == "1" and "timestamp" not in rep
    cert = tmp_path / "cert.json"
    args = ["certify", "--lifted", str(lifted), "--seed", "3", "--level", "2", "--mu", "0.04", "--trials", "16",
            "--eps", "1", "--deterministic", "--out", str(cert)]
    code, out, _ = run(capsys, *args)
    rep = report(out)
    assert code == 0 and rep["result"]["certify"]["residual"] == "0"
    assert json.loads(cert.read_text())["kind"] == "sherali-adams"
    code2, out2, _ = run(capsys, *args)
    assert out2 == out
    # a demanding eps fails with exit 2
    code, out, _ = run(capsys, *[a if a != "1" else "0" for a in args])
    assert code == 2 and report(out)["status"] == "fail"


def test_reports_have_timing_unless_deterministic(capsys, tmp_path):
    code, out, _ = run(capsys, "lift", "--template", "c5.json", "--n", "3", "--m", "10", "--seed", "1",
                       "--report", str(tmp_path / "r.json"))
    rep = report(out)
    assert "timestamp" in rep and "elapsed_seconds" in rep and rep["version"]
    assert report((tmp_path / "r.json").read_text())["command"] == "lift"


def test_soundness_command(capsys):
    code, out, _ = run(capsys, "--deterministic", "soundness", "--template", "c5.json", "--n", "2", "--m", "30",
                       "--trials", "3", "--seed", "2")
    rep = report(out)
    assert rep["result"]["method"] == "exhaustive" and len(rep["result"]["values"]) == 3
    assert code == (0 if Fraction(rep["result"]["estimate"]) <= Fraction(9, 10) else 2)


def test_analyze_graph(capsys):
    code, out, _ = run(capsys, "--deterministic", "analyze-graph", "--n", "20", "--m", "40", "--n0", "3", "--k", "3",
                       "--seed", "1", "--girth", "3", "--degree-cap", "5", "--eta", "0.5")
    rep = report(out)["result"]
    assert rep["vertices"] == 60 and rep["edges"] == 40 and "sparsity" in rep
    code, out, _ = run(capsys, "analyze-graph", "--instance", "c5.json", "--seed", "0", "--cycles", "5")
    rep = report(out)["result"]
    assert rep["girth"] == 5 and rep["cycles_upto"]["count"] == 1


def test_partition_audit(capsys, tmp_path):
    path = tmp_path / "path.json"
    inst = {"q": 2, "k": 2, "table": "0110", "n": 6,
            "constraints": [{"scope": [i, i + 1], "shift": [0, 0]} for i in range(5)]}
    path.write_text(json.dumps(inst))
    code, out, _ = run(capsys, "partition-audit", "--instance", str(path), "--mu", "0.02", "--S", "0,1,2",
                       "--T", "0,2", "--trials", "100", "--seed", "1")
    assert code == 0 and report(out)["result"]["matches"] == 100
    code, _, _ = run(capsys, "partition-audit", "--instance", str(path), "--mu", "0.02", "--S", "0,1",
                     "--T", "3", "--trials", "10", "--seed", "1")
    assert code == 3


def test_resist_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "resist", "fourier", "--predicate", "xor3")
    rep = report(out)["result"]
    assert code == 0 and rep["coeffs"][""] == "1/2" and rep["coeffs"]["0,1,2"] == "-1/2" and rep["parseval"]
    assert run(capsys, "resist", "membership", "--predicate", "and2", "--zeta", "1,1")[0] == 2
    assert run(capsys, "resist", "membership", "--predicate", "and2", "--zeta=-1,-1")[0] == 0
    assert run(capsys, "resist", "vanish-check", "--predicate", "xor3")[0] == 0
    meas = tmp_path / "m.json"
    code, _, _ = run(capsys, "resist", "vanish-find", "--predicate", "xor3", "--grid", "0,0,0;1/3,1/3,1/3",
                     "--out", str(meas))
    assert code == 0 and meas.exists()
    assert run(capsys, "resist", "vanish-find", "--predicate", "and2", "--grid=-1,-1")[0] == 2
    ktw = tmp_path / "ktw.json"
    code, _, _ = run(capsys, "resist", "ktw-gen", "--predicate", "xor3", "--measure", str(meas), "--eps", "1/10",
                     "--delta", "0", "--n", "60", "--m", "200", "--seed", "4", "--out", str(ktw))
    assert code == 0
    code, out, _ = run(capsys, "resist", "ktw-cert", "--ktw", str(ktw))
    assert code == 0 and report(out)["result"]["basic"]["ok"]
    assert run(capsys, "resist", "fourier", "--predicate", "nonsense")[0] == 3


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gapforge.cli", "solve-lp", "--instance", "c5.json", "--basic"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "1"
