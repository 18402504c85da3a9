"""CLI contract: exit codes, output layout, determinism, config resolution."""

from __future__ import annotations

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from evflow.cli import main, unique_outdir

ROOT = Path(__file__).resolve().parent.parent
INSTANCES = ROOT / "instances"
EXAMPLE_A = str(INSTANCES / "example1a.json")
EXAMPLE_B = str(INSTANCES / "example1b.json")

RESULT_FILES = (
    "manifest.json",
    "convergence.csv",
    "walk_flows.csv",
    "costs.csv",
    "energy_profile.csv",
    "energy_stats_c0.csv",
    "travel_times.csv",
    "catalog_c0.csv",
    "catalog_summary.json",
)


def solve_args(out: Path, instance: str = EXAMPLE_A, **kw) -> list[str]:
    args = ["solve", "--instance", instance, "--out", str(out)]
    defaults = {"intervals": 8, "max_iters": 5}
    defaults.update(kw)
    for key, value in defaults.items():
        args += [f"--{key.replace('_', '-')}", str(value)]
    return args


def test_enumerate_prints_counts(capsys):
    assert main(["enumerate", "--instance", EXAMPLE_B]) == 0
    out = capsys.readouterr().out
    assert "commodity c0: 3 walks" in out
    assert "total: 3 walks" in out


def test_enumerate_writes_catalog(tmp_path, capsys):
    outdir = tmp_path / "cat"
    assert main(["enumerate", "--instance", EXAMPLE_A, "--out", str(outdir)]) == 0
    assert (outdir / "catalog_c0.csv").exists()
    assert (outdir / "catalog_summary.json").exists()
    summary = json.loads((outdir / "catalog_summary.json").read_text())
    assert summary["c0"]["count"] == 4


def test_solve_writes_all_artifacts(tmp_path):
    out = tmp_path / "run"
    assert main(solve_args(out)) == 2  # iteration cap
    for name in RESULT_FILES:
        assert (out / name).exists(), name


def test_solve_exit_zero_on_convergence(tmp_path):
    out = tmp_path / "run"
    code = main(solve_args(out, max_iters=3000, epsilon=0.05))
    assert code == 0


def test_solve_max_iters_zero_exports_initial_flow(tmp_path):
    out = tmp_path / "run"
    assert main(solve_args(out, max_iters=0)) == 2
    rows = list(csv.DictReader(open(out / "walk_flows.csv")))
    assert len(rows) == 4 * 8
    by_walk = {}
    for r in rows:
        by_walk.setdefault(r["walk_index"], set()).add(r["rate"])
    # shortest-walk start: all demand on one walk
    positive = {w for w, rates in by_walk.items() if any(float(x) > 0 for x in rates)}
    assert len(positive) == 1
    assert (out / "convergence.csv").read_text().count("\n") == 1  # header only


def test_manifest_written_with_config(tmp_path):
    out = tmp_path / "run"
    main(solve_args(out, max_iters=2, epsilon=0.125, alpha0=0.25))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tool"] == "evflow"
    assert manifest["instance"] == EXAMPLE_A
    assert manifest["deterministic"] is True
    assert manifest["config"]["epsilon"] == 0.125
    assert manifest["config"]["alpha0"] == 0.25
    assert manifest["config"]["intervals"] == 8
    assert manifest["config"]["time_limit_s"] == "inf"
    assert "timestamp" in manifest and "tool_version" in manifest


def test_outdir_suffix_counter(tmp_path):
    out = tmp_path / "run"
    main(solve_args(out, max_iters=1))
    main(solve_args(out, max_iters=1))
    main(solve_args(out, max_iters=1))
    assert out.exists()
    assert (tmp_path / "run_2").exists()
    assert (tmp_path / "run_3").exists()
    assert not (tmp_path / "run_4").exists()


def test_unique_outdir_reuses_empty_dir(tmp_path):
    target = tmp_path / "empty"
    target.mkdir()
    assert unique_outdir(target) == target


def test_determinism_across_runs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(solve_args(a, max_iters=40))
    main(solve_args(b, max_iters=40))
    names = [n for n in RESULT_FILES if n.endswith(".csv") and n != "convergence.csv"]
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    # convergence.csv is identical except the wall-clock column
    rows_a = list(csv.DictReader(open(a / "convergence.csv")))
    rows_b = list(csv.DictReader(open(b / "convergence.csv")))
    assert len(rows_a) == len(rows_b) == 40
    for ra, rb in zip(rows_a, rows_b):
        ra.pop("wall_time"), rb.pop("wall_time")
        assert ra == rb


def test_error_exit_on_missing_instance(tmp_path, capsys):
    assert main(["solve", "--instance", str(tmp_path / "nope.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_error_exit_on_malformed_instance(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": ["s"], "edges": "zap", "commodities": []}')
    assert main(["solve", "--instance", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "error:" in err and "edges" in err


def test_error_exit_names_infeasible_commodity(tmp_path, capsys):
    doc = {
        "nodes": ["s", "t"],
        "edges": [{"id": "e", "tail": "s", "head": "t", "tau": 1, "nu": 1}],
        "commodities": [
            {
                "id": "dry",
                "source": "s",
                "sink": "t",
                "inflow": [[0, 1, 1]],
                "b_init": 0,
                "b_max": 1,
                "aggregation": {"lambda_tilde": 0},
            }
        ],
        "edge_attrs": [{"commodity": "dry", "edge": "e", "b": 5}],
    }
    inst = tmp_path / "dry.json"
    inst.write_text(json.dumps(doc))
    assert main(["solve", "--instance", str(inst)]) == 1
    assert "dry" in capsys.readouterr().err


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "epsilon": 0.5,
                "alpha0": 0.75,
                "N": 6,
                "max_iters": 2,
                "termination_mode": "rel",
                "norm_weights": "l2",
            }
        )
    )
    out = tmp_path / "run"
    code = main(
        [
            "solve",
            "--instance",
            EXAMPLE_A,
            "--config",
            str(cfg),
            "--out",
            str(out),
            "--epsilon",
            "0.25",
        ]
    )
    assert code in (0, 2)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["epsilon"] == 0.25  # flag beats file
    assert manifest["config"]["alpha0"] == 0.75
    assert manifest["config"]["intervals"] == 6
    assert manifest["config"]["termination"] == "rel"
    assert manifest["config"]["norm"] == "l2"


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"epsilonn": 0.5}')
    assert main(solve_args(tmp_path / "r") + ["--config", str(cfg)]) == 1
    assert "epsilonn" in capsys.readouterr().err


def test_init_from_file_round_trip(tmp_path):
    first = tmp_path / "first"
    main(solve_args(first, max_iters=7))
    resumed = tmp_path / "resumed"
    code = main(
        solve_args(resumed, max_iters=0)
        + ["--init", "file", "--init-flow", str(first / "walk_flows.csv")]
    )
    assert code == 2
    assert (resumed / "walk_flows.csv").read_bytes() == (
        first / "walk_flows.csv"
    ).read_bytes()


def test_init_file_without_path_is_an_error(tmp_path, capsys):
    assert main(solve_args(tmp_path / "r") + ["--init", "file"]) == 1
    assert "init-flow" in capsys.readouterr().err


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("EVQ_THREADS", "3")
    out = tmp_path / "run"
    main(solve_args(out, max_iters=1))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["threads"] == 3


def test_threads_flag_beats_env(tmp_path, monkeypatch):
    monkeypatch.setenv("EVQ_THREADS", "3")
    out = tmp_path / "run"
    main(solve_args(out, max_iters=1) + ["--threads", "2"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["threads"] == 2


def test_dump_loading_schema(tmp_path):
    out = tmp_path / "run"
    main(solve_args(out, max_iters=2) + ["--dump-loading"])
    rows = list(csv.DictReader(open(out / "loading_debug.csv")))
    assert rows, "dump should not be empty"
    assert set(rows[0]) == {"edge_id", "theta", "F_plus", "F_minus", "q"}
    edge_ids = {r["edge_id"] for r in rows}
    assert "e1" in edge_ids and "e3" in edge_ids
    for r in rows:
        assert float(r["q"]) >= 0.0
        assert float(r["F_plus"]) >= float(r["F_minus"])


def test_import_tntp_matches_bundled_instance(tmp_path):
    out = tmp_path / "ng.json"
    code = main(
        [
            "import-tntp",
            "--net",
            str(INSTANCES / "nguyen_net.tntp"),
            "--attrs",
            str(INSTANCES / "nguyen_attrs.json"),
            "--scale",
            "0.005",
            "--name",
            "nguyen",
            "--out-instance",
            str(out),
        ]
    )
    assert code == 0
    assert out.read_bytes() == (INSTANCES / "nguyen.json").read_bytes()


def test_import_tntp_bad_net(tmp_path, capsys):
    bad = tmp_path / "bad.tntp"
    bad.write_text("<NUMBER OF LINKS> 5\n<END OF METADATA>\n1 2 100\n")
    code = main(
        ["import-tntp", "--net", str(bad), "--out-instance", str(tmp_path / "o.json")]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "evflow", "--version"],
        capture_output=True,
        text=True,
        cwd=ROOT,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("evflow ")
