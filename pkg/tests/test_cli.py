import json
import subprocess
import sys

import numpy as np
import pytest

from pmusched.cli import main
from pmusched.network import case_path


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_place_topology(capsys):
    code, out, _ = run(capsys, "place", "--method", "topology")
    assert code == 0
    assert out.strip() == "N=4: 2 6 7 9"


def test_place_electrical_emit(capsys, tmp_path):
    code, out, _ = run(capsys, "place", "--emit", str(tmp_path / "d.csv"))
    assert code == 0 and out.startswith("N=5:")
    d = np.loadtxt(tmp_path / "d.csv", dtype=int)
    assert d.shape == (14,) and d.sum() == 5


def test_schedule_table(capsys):
    code, out, _ = run(capsys, "schedule", "--method", "topology")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "2 9 6 7"
    assert lines[1] == "slot,bus,end_time"
    assert lines[2:] == ["1,2,5", "2,9,10", "3,6,15", "4,7,20"]


def test_schedule_truncated(capsys):
    code, out, _ = run(capsys, "schedule", "--pmus", "2", "--T", "10")
    assert code == 0
    assert out.splitlines()[2:] == ["1,8,5", "2,14,10"]


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["place", "--method", "nope"])
    assert info.value.code == 2


def test_console_script_usage():
    res = subprocess.run([sys.executable, "-m", "pmusched.cli"], capture_output=True, text=True)
    assert res.returncode == 2 and "usage" in res.stderr


def test_invalid_case(capsys, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("buses: [1, 2]\nbranches:\n  - {from: 1, to: 1, x: 0.1}\n")
    code, _, err = run(capsys, "place", "--case", str(bad))
    assert code == 3 and "error" in err
    code, _, _ = run(capsys, "place", "--case", str(tmp_path / "missing.yaml"))
    assert code == 3


def test_distance_csv(capsys, tmp_path):
    code, _, _ = run(capsys, "distance", "--adjacency", "20", "--out", str(tmp_path))
    assert code == 0
    E = np.loadtxt(tmp_path / "distance.csv", delimiter=",")
    assert E.shape == (14, 14)
    np.testing.assert_allclose(E, E.T, atol=1e-12)
    C = np.loadtxt(tmp_path / "adjacency.csv", delimiter=",", dtype=int)
    assert (C.sum() - 14) // 2 == 20
    assert (tmp_path / "distance.manifest.json").exists()


def test_detect_record(capsys):
    code, out, _ = run(capsys, "detect", "--seed", "4", "--shift", "-0.3")
    assert code == 0
    rec = dict(line.split(": ", 1) for line in out.strip().splitlines())
    assert float(rec["threshold"]) == pytest.approx(15.705, abs=1e-3)
    assert rec["decision"] in ("H0", "H1")
    assert rec["dof"] == "20"


def test_detect_rejects_bad_alpha(capsys):
    code, _, _ = run(capsys, "detect", "--alpha", "1.5")
    assert code == 3


def test_simulate_and_replay(capsys, tmp_path):
    out = tmp_path / "pd.csv"
    code, text, _ = run(capsys, "simulate", "--method", "topology", "--trials", "3",
                        "--alphas", "4", "--out", str(out))
    assert code == 0 and text.startswith("order: 2 9 6 7")
    manifest = tmp_path / "pd.manifest.json"
    record = json.loads(manifest.read_text())
    assert record["subcommand"] == "simulate" and record["seed"] == 0
    first = out.read_bytes()
    out.unlink()
    code, _, _ = run(capsys, "replay", str(manifest))
    assert code == 0
    assert out.read_bytes() == first


def test_replay_detects_changed_case(capsys, tmp_path):
    case = tmp_path / "c.yaml"
    case.write_text(case_path("case14").read_text())
    code, _, _ = run(capsys, "place", "--case", str(case), "--out", str(tmp_path / "o"))
    assert code == 0
    case.write_text(case.read_text().replace("x: 0.05917", "x: 0.06"))
    code, _, err = run(capsys, "replay", str(tmp_path / "o" / "place.manifest.json"))
    assert code == 3 and "checksum" in err
