import json
import subprocess
import sys

import pytest

from qping.cli import PingReport, aggregate, config_to_argv, main

NOISELESS = "nodes: [A, B, C]\nlinks:\n  - {a: A, b: B}\n  - {a: B, b: C}\n"
NOISY = "nodes: [A, B]\nlinks:\n  - {a: A, b: B, f_link: 0.5}\n"
DECAYING = "nodes: [A, B]\nlinks:\n  - {a: A, b: B, tau_memory: 100}\n"
SPLIT = """nodes: [A, B, C]
links:
  - {a: A, b: B}
graph_resource:
  edges:
    - {a: A, b: B, factor: 1.0}
"""


@pytest.fixture
def topo(tmp_path):
    def write(text, name="t.yaml"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("text, extra, code, outcome", [
    (NOISELESS, [], 0, "accept"),
    (NOISY, [], 1, "reject"),
    (NOISELESS, ["--eta", "0.5", "--delta", "0.4", "--max-trials", "1", "--f-required", "0.5"], 2, "inconclusive"),
    (NOISELESS, ["--prior", "point:0.99", "--eta", "0.8", "--f-required", "0.5"], 2, "skip"),
    (NOISELESS, ["--prior", "point:0.1", "--eta", "0.8", "--f-required", "0.5"], 2, "abort"),
    (NOISY, ["--eta", "0.999", "--max-time-ns", "30", "--f-required", "0.3"], 2, "timeout"),
    (DECAYING, ["--time-to-use-ns", "100"], 2, "infeasible"),
])
def test_exit_code_table(topo, capsys, text, extra, code, outcome):
    dst = "C" if text is NOISELESS else "B"
    got, out, _ = run(["run", "--topology", topo(text), "--from", "A", "--to", dst, *extra], capsys)
    assert json.loads(out)["verdict"]["outcome"] == outcome
    assert got == code


def test_passive_no_path_exits_one(topo, capsys):
    code, out, _ = run(["run", "--topology", topo(SPLIT), "--from", "A", "--to", "C", "--strategy", "passive"], capsys)
    report = json.loads(out)
    assert code == 1 and report["verdict"]["reason"] == "no-path"
    assert report["verdict"]["details"]["shots_used"] == 0


@pytest.mark.parametrize("argv, code, needle", [
    (["--to", "Z"], 64, "'Z'"),
    (["--to", "A"], 64, "different nodes"),
    (["--to", "C", "--prior", "beta"], 64, "bad prior"),
    (["--to", "C", "--eta", "1.2"], 64, "eta"),
    (["--to", "C", "--strategy", "teleport"], 64, "teleport"),
    (["--to", "C", "--strategy", "passive"], 64, "graph_resource"),
    (["--to", "C", "--f-required", "x"], 64, "not a number"),
])
def test_usage_errors(topo, capsys, argv, code, needle):
    got, _, err = run(["run", "--topology", topo(NOISELESS), "--from", "A", *argv], capsys)
    assert got == code and needle in err


def test_missing_and_malformed_topology(topo, capsys, tmp_path):
    code, _, err = run(["run", "--topology", str(tmp_path / "nope.yaml"), "--from", "A", "--to", "B"], capsys)
    assert code == 66 and "cannot read" in err
    bad = topo("nodes: [A, B]\nlinks:\n  - {a: A, b: B, p_gen: 1.5}\n")
    code, _, err = run(["run", "--topology", bad, "--from", "A", "--to", "B"], capsys)
    assert code == 65 and ":3:" in err and "p_gen" in err


def test_validate(topo, capsys):
    assert run(["validate", topo(SPLIT)], capsys)[0] == 0
    assert run(["validate", "--topology", "demos/line3.yaml"], capsys)[0] == 0
    code, _, err = run(["validate", topo("nodes: [A]\nlinks:\n  - {a: A, b: A}\n")], capsys)
    assert code == 65 and "A-A: self-loop" in err


def test_report_is_byte_identical(topo, capsys, tmp_path):
    path = topo("nodes: [A, B, C]\nlinks:\n  - {a: A, b: B, p_gen: 0.4, f_link: 0.95}\n  - {a: B, b: C}\n")
    argv = ["run", "--topology", path, "--from", "A", "--to", "C", "--seed", "42", "--f-required", "0.8"]
    a = run(argv, capsys)[1]
    b = run(argv, capsys)[1]
    assert a == b
    out = tmp_path / "r.json"
    run(argv + ["--out", str(out)], capsys)
    assert out.read_text() == a


def test_config_echo_reruns_exactly(topo, capsys):
    path = topo(NOISY)
    first = run(["run", "--topology", path, "--from", "A", "--to", "B", "--seed", "7", "--strategy", "segment",
                 "--prior", "gaussian:0.6,0.2", "--f-required", "0.7"], capsys)[1]
    report = PingReport.from_json(first)
    again = run(config_to_argv(report.config), capsys)[1]
    assert again == first
    assert PingReport.from_json(first).to_json() == first


def test_subprocess_entry_point(topo):
    proc = subprocess.run([sys.executable, "-m", "qping", "run", "--topology", topo(NOISELESS), "--from", "A",
                           "--to", "C"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["verdict"]["outcome"] == "accept"


def sweep(argv, capsys):
    code, out, _ = run(["sweep", *argv], capsys)
    assert code == 0
    return json.loads(out)


def test_sweep_rows_and_order_stability(capsys):
    argv = ["--topology", "demos/line3.yaml", "--from", "A", "--to", "B", "--f-required", "0.8", "--reps", "6",
            "--strategy", "path-endnode,path-bouncing,segment,passive"]
    serial = sweep(argv, capsys)
    parallel = sweep(argv + ["--jobs", "2"], capsys)
    assert serial["rows"] == parallel["rows"]
    assert [r["strategy"] for r in serial["rows"]] == ["path-endnode", "path-bouncing", "segment", "passive"]
    for row in serial["rows"]:
        assert row["mean_pairs_consumed"] > 0 and row["profile"]["robustness"]
        assert sum(v for k, v in row.items() if k.endswith("_rate")) == pytest.approx(1.0)


def test_single_rep_sweep_matches_run(capsys):
    base = ["--topology", "demos/line3.yaml", "--from", "A", "--to", "B", "--seed", "3"]
    row = sweep(base + ["--reps", "1"], capsys)["rows"][0]
    code, out, _ = run(["run", *base], capsys)
    report = json.loads(out)
    assert row["outcomes"] == [report["verdict"]["outcome"]]
    assert row["mean_trials"] == report["verdict"]["trials_used"]
    assert row["mean_elapsed_ns"] == report["verdict"]["elapsed_ns"]


def test_sweep_rejects_zero_reps(capsys):
    code, _, err = run(["sweep", "--topology", "demos/line3.yaml", "--from", "A", "--to", "B", "--reps", "0"], capsys)
    assert code == 64


def test_aggregate_is_order_sensitive_only_in_outcomes():
    results = [("accept", 3, 3, 10.0), ("reject", 5, 5, 20.0)]
    a, b = aggregate("segment", results), aggregate("segment", results[::-1])
    assert a["accept_rate"] == b["accept_rate"] == 0.5
    assert a["mean_trials"] == 4.0 and a["outcomes"] == ["accept", "reject"]
