import csv
import json
import os

import pytest

from src.bin import run as runner
from src.data.formats import write_lp_json
from src.hh.expander import ExpanderHhState


def _run(command, tmp_path, *flags):
    out = os.path.join(str(tmp_path), "out.json")
    code = runner.run(command, list(flags) + ["--json-out", out])
    with open(out) as f:
        return code, json.load(f)


def test_unknown_command_raises():
    with pytest.raises(ValueError):
        runner.run("solve-qp")


def test_solve_maxflow_samples(samples_dir, tmp_path):
    code, out = _run("solve-maxflow", tmp_path, os.path.join(samples_dir, "maxflow_single.gmax"), "--delta", "1e-4")
    assert code == 0 and out["status"] == "ok"
    assert out["value"] == pytest.approx(2.0, abs=1e-3)

    code, out = _run("solve-maxflow", tmp_path, os.path.join(samples_dir, "maxflow_two_hop.gmax"),
                     "--delta", "1e-4", "--check-oracle")
    assert code == 0
    assert out["value"] == pytest.approx(1.0, abs=1e-3)
    assert out["oracle"]["reference_value"] == pytest.approx(1.0, abs=1e-6)


def test_solve_mincost_sample_with_trace(samples_dir, tmp_path):
    code, out = _run("solve-mincost", tmp_path, os.path.join(samples_dir, "mincost_single.gmcf"),
                     "--delta", "1e-4", "--trace")
    assert code == 0
    assert out["value"] == pytest.approx(2.0, abs=1e-3)
    assert len(out["trace"]) > 0


def test_solve_lp_and_oracle_agree(samples_dir, tmp_path):
    path = os.path.join(samples_dir, "lp_20x8.json")
    code, ref = _run("oracle", tmp_path, path)
    assert code == 0 and ref["agree"]

    code, out = _run("solve-lp", tmp_path, path, "--delta", "1e-4")
    assert code == 0
    assert out["delta"] == 1e-4
    assert len(out["x"]) == 20
    assert out["objective"] <= ref["value"] + 1e-4


def test_error_statuses(samples_dir, tmp_path):
    bad = os.path.join(str(tmp_path), "bad.gmax")
    with open(bad, "w") as f:
        f.write("p gmax 2 1\na 1 3 1 0 1\n")
    code, out = _run("solve-maxflow", tmp_path, bad)
    assert code == 3
    assert out["status"] == "parse_error" and out["lineno"] == 2

    code, out = _run("solve-maxflow", tmp_path, os.path.join(samples_dir, "mincost_single.gmcf"))
    assert code == 3 and out["status"] == "contract_violation"

    infeasible = os.path.join(str(tmp_path), "infeasible.json")
    write_lp_json(infeasible, [[(0, 1.0)], [(0, 1.0)]], [3.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0])
    code, out = _run("solve-lp", tmp_path, infeasible, "--delta", "1e-3")
    assert code == 2 and out["status"] == "infeasible"


def test_hh_bench_stream(samples_dir, tmp_path):
    code, out = _run("hh-bench", tmp_path, os.path.join(samples_dir, "stream.hh"))
    assert out["mismatches"] == 0
    assert code == 0
    assert out["op_counts"]["Q"] == 5 and out["op_counts"]["P"] == 1
    assert len(out["results"]) == 6


def test_spectral_report_csv(tmp_path):
    csv_out = os.path.join(str(tmp_path), "spectral.csv")
    code = runner.run("spectral-report", ["--n", "8", "--degree", "3", "--n_graphs", "1", "--betas", "0,0.001",
                                          "--csv-out", csv_out])
    assert code == 0
    with open(csv_out) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2
    assert rows[0]["graph"] == "expander0-beta0"
    assert set(rows[0]) >= {"lambda1", "uniformity_ratio", "c_lo", "c_hi", "certified"}
    assert rows[0]["certified"] in ("true", "false")


def test_hh_bench_fails_on_counter_bounds(samples_dir, tmp_path, monkeypatch):
    monkeypatch.setattr(ExpanderHhState, "counter_invariants", lambda self: {"renorm_bound": False})
    code, out = _run("hh-bench", tmp_path, os.path.join(samples_dir, "stream.hh"))
    assert out["mismatches"] == 0
    assert code == 1
    assert any("expander_counters" in failure["failed"] for failure in out["invariant_failures"])
