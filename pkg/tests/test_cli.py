import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from qsalab import cli

FAST_SCAN = {"version": 1, "command": "coupling-scan",
             "params": {"n": [1, 2], "d_um": [56, 80]}}


def _write(path, obj):
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(path)


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_qec_protocol_prints_resources(capsys, tmp_path):
    assert cli.run(["qec", "--protocol", "steane-ec", "--out", str(tmp_path / "q")]) == 0
    assert json.loads(capsys.readouterr().out) == {"ions_per_well": 7, "registers": 2}


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "qsalab", "qec", "--protocol", "universal",
                        "--out", str(tmp_path / "q")], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout) == {"ions_per_well": 15, "registers": 7}


def test_default_coupling_scan(tmp_path):
    out = tmp_path / "cs"
    assert cli.run(["coupling-scan", "--out", str(out)]) == 0
    with open(out / "coupling_scan.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["d_um"] == "um"  # units row
    six = [r for r in rows[1:] if r["n"] == "6" and float(r["d_um"]) == 56.0]
    assert float(six[0]["coupling_Hz"]) == pytest.approx(39e3, rel=0.15)
    assert json.loads((out / "plot_hints.json").read_text())


def test_malformed_config_exits_two(tmp_path, capsys):
    cfg = _write(tmp_path / "c.json", {"version": 1, "command": "coupling-scan",
                                       "params": {"n": "six"}})
    out = tmp_path / "o"
    assert cli.run(["coupling-scan", "--config", cfg, "--out", str(out)]) == 2
    assert "/params/n" in capsys.readouterr().err
    assert not out.exists()


def test_invalid_json_exits_two(tmp_path, capsys):
    cfg = _write(tmp_path / "c.json", "{not json")
    assert cli.run(["coupling-scan", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_wrong_command_config_exits_two(tmp_path):
    cfg = _write(tmp_path / "c.json", {"version": 1, "command": "pseudo", "params": {}})
    assert cli.run(["coupling-scan", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_numerical_failure_exits_three(tmp_path, capsys):
    cfg = _write(tmp_path / "c.json", {"version": 1, "command": "coupling-scan",
                                       "params": {"n": [6], "d_um": [40]}})
    out = tmp_path / "o"
    assert cli.run(["coupling-scan", "--config", cfg, "--out", str(out)]) == 3
    assert "failed point" in capsys.readouterr().err
    assert not out.exists()
    assert cli.run(["coupling-scan", "--config", cfg, "--out", str(out),
                    "--allow-failures"]) == 3
    assert "error" in (out / "coupling_scan.csv").read_text()


def test_crossing_seed_determinism(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for d, seed in ((a, 3), (b, 3), (c, 4)):
        assert cli.run(["avoided-crossing", "--seed", str(seed), "--out", str(d)]) == 0
    assert _files(a) == _files(b)
    assert _files(a)["crossing_points.csv"] != _files(c)["crossing_points.csv"]


def test_jobs_do_not_change_output(tmp_path):
    cfg = _write(tmp_path / "c.json", FAST_SCAN)
    for j in (1, 2):
        assert cli.run(["coupling-scan", "--config", cfg, "--jobs", str(j),
                        "--out", str(tmp_path / f"j{j}")]) == 0
    assert _files(tmp_path / "j1") == _files(tmp_path / "j2")
    assert cli.run(["coupling-scan", "--config", cfg, "--jobs", "0",
                    "--out", str(tmp_path / "j0")]) == 2


@pytest.mark.parametrize("command", cli.COMMANDS)
def test_packaged_configs_validate(command):
    cfg = cli.default_config(command)
    jsonschema.validate(cfg, cli.load_schema())
    assert cfg["command"] == command


def test_qec_layout_artifacts(tmp_path):
    out = tmp_path / "q"
    assert cli.run(["qec", "--d-c", "2", "--out", str(out)]) == 0
    summary = json.loads((out / "qec_summary.json").read_text())
    assert summary["2"]["params"] == [20, 2, 4] and summary["2"]["all_commute"]
    assert (out / "layout_dc2.dot").read_text().startswith("graph")
