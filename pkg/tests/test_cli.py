import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from mogmesh import cli
from mogmesh.simulator import SimulationInvariantError

DEMO = Path(__file__).resolve().parent.parent / "scenarios" / "demo12.json"


def invoke(tmp_path, *extra, out="out"):
    return cli.main(["--scenario", str(DEMO), "--ticks", "50", "--out", str(tmp_path / out), *extra])


def test_valid_invocation_writes_both_files(tmp_path):
    assert invoke(tmp_path, "--arch", "hybrid") == 0
    assert (tmp_path / "out" / "metrics.csv").exists()
    assert (tmp_path / "out" / "metrics.json").exists()


def test_missing_scenario_exits_1_with_usage(capsys):
    assert cli.main(["--arch", "p2p"]) == 1
    assert "usage:" in capsys.readouterr().err


def test_console_script_missing_scenario():
    proc = subprocess.run([sys.executable, "-m", "mogmesh.cli", "--arch", "p2p"], capture_output=True, text=True)
    assert proc.returncode == 1 and "usage" in proc.stderr


def test_same_invocation_is_byte_identical(tmp_path):
    assert invoke(tmp_path, "--arch", "p2p", "--seed", "7", out="a") == 0
    assert invoke(tmp_path, "--arch", "p2p", "--seed", "7", out="b") == 0
    for name in ("metrics.csv", "metrics.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_and_json_agree(tmp_path):
    assert invoke(tmp_path, "--arch", "cs-overlay") == 0
    rows = list(csv.DictReader((tmp_path / "out" / "metrics.csv").open()))
    doc = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert list(rows[0]) == cli.CSV_HEADER
    assert cli.CSV_HEADER[:7] == ["node_id", "sent", "received", "relayed", "work_units", "final_battery", "failure_tick"]

    def cell(v):
        return "" if v is None else repr(v) if isinstance(v, float) else str(v)

    for row, node in zip(rows, doc["nodes"]):
        for key, value in node.items():
            assert row[key] == cell(value), key
        assert all(row[k] == "" for k in cli.GLOBAL_COLUMNS)
    glob = rows[-1]
    assert glob["node_id"] == "GLOBAL" and len(rows) == len(doc["nodes"]) + 1
    for key, value in doc["global"].items():
        assert glob[key] == cell(value), key
    assert doc["run"]["seed"] == 1 and doc["run"]["arch"] == "cs-overlay"
    assert len(doc["run"]["scenario_digest"]) == 64


def test_emit_and_allocator_override(tmp_path):
    assert invoke(tmp_path, "--arch", "hybrid", "--emit", "json", "--allocator", "auction") == 0
    assert not (tmp_path / "out" / "metrics.csv").exists()
    assert json.loads((tmp_path / "out" / "metrics.json").read_text())["run"]["allocator"] == "auction"


def test_invalid_inputs_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"arena": ')
    assert cli.main(["--scenario", str(bad), "--arch", "p2p", "--out", str(tmp_path / "o")]) == 1
    assert "line 1" in capsys.readouterr().err
    assert cli.main(["--scenario", str(tmp_path / "missing.json"), "--arch", "p2p"]) == 1
    assert invoke(tmp_path, "--arch", "mesh") == 1
    assert invoke(tmp_path, "--arch", "p2p,hybrid") == 1
    # client/server direct is impossible on the demo mesh
    assert invoke(tmp_path, "--arch", "cs") == 1


def test_invariant_violation_exits_2(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise SimulationInvariantError("ledger mismatch")

    monkeypatch.setattr(cli, "run", boom)
    assert invoke(tmp_path, "--arch", "p2p") == 2


def test_sweep_writes_one_directory_per_run(tmp_path):
    assert invoke(tmp_path, "--arch", "p2p,hybrid", "--sweep", "1,3-4", "--jobs", "2") == 0
    dirs = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert dirs == ["hybrid-seed1", "hybrid-seed3", "hybrid-seed4", "p2p-seed1", "p2p-seed3", "p2p-seed4"]
    single = tmp_path / "single"
    assert cli.main(["--scenario", str(DEMO), "--ticks", "50", "--arch", "hybrid", "--seed", "3", "--out", str(single)]) == 0
    assert (single / "metrics.json").read_bytes() == (tmp_path / "out" / "hybrid-seed3" / "metrics.json").read_bytes()


def test_parse_seeds():
    assert cli.parse_seeds("1,2,5-8") == [1, 2, 5, 6, 7, 8]
    with pytest.raises(ValueError):
        cli.parse_seeds("4-2")
    with pytest.raises(ValueError):
        cli.parse_seeds(",")


@pytest.mark.skipif(shutil.which("mogmesh") is None, reason="console script not installed")
def test_console_script_runs(tmp_path):
    proc = subprocess.run(
        ["mogmesh", "--scenario", str(DEMO), "--arch", "p2p", "--ticks", "5", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr


def test_backends_write_identical_files(tmp_path):
    import os

    outs = []
    for flag in ("0", "1"):
        out = tmp_path / f"b{flag}"
        env = dict(os.environ, MOGMESH_PURE_PYTHON=flag)
        subprocess.run(
            [sys.executable, "-m", "mogmesh.cli", "--scenario", str(DEMO), "--arch", "hybrid", "--ticks", "40", "--out", str(out)],
            env=env, check=True,
        )
        outs.append(((out / "metrics.csv").read_bytes(), (out / "metrics.json").read_bytes()))
    assert outs[0] == outs[1]
