import json

import pytest

from mrio.cli import main
from mrio.metrics import MetricsReport

SHORT = "[sim]\nstraight_a = 6\nstraight_b = 3\n"


@pytest.fixture
def short_cfg(tmp_path):
    path = tmp_path / "short.ini"
    path.write_text(SHORT)
    return path


def test_round_trip(tmp_path, short_cfg):
    d = tmp_path
    assert main(["simulate", "--config", str(short_cfg), "--out", str(d / "d.jsonl"), "--gt", str(d / "gt.tum"),
                 "--seed", "3"]) == 0
    assert main(["run", "--dataset", str(d / "d.jsonl"), "--config", str(short_cfg), "--out-traj",
                 str(d / "est.tum"), "--out-map", str(d / "m.ply"), "--stage1-trace", str(d / "s1.csv"),
                 "--diagnostics", str(d / "diag.json")]) == 0
    assert main(["eval", "--est", str(d / "est.tum"), "--gt", str(d / "gt.tum"), "--report", str(d / "r.json")]) == 0
    for name in ("d.jsonl", "gt.tum", "est.tum", "m.ply", "r.json", "s1.csv", "diag.json"):
        assert (d / name).stat().st_size > 0
    report = MetricsReport.from_json((d / "r.json").read_text())
    assert report.rmse_2d < 0.5
    assert (d / "s1.csv").read_text().splitlines()[0] == "stamp,v,b,var_v,var_b,a_cc"
    assert json.loads((d / "diag.json").read_text())["baseline"] == "none"


def test_unknown_radar_id(tmp_path, capsys):
    path = tmp_path / "d.jsonl"
    path.write_text(
        '{"type":"imu","t":0,"ax":0,"ay":0,"az":9.8,"gx":0,"gy":0,"gz":0,"qw":1,"qx":0,"qy":0,"qz":0}\n'
        '{"type":"radar","t":0.1,"radar_id":17,"targets":[]}\n')
    code = main(["run", "--dataset", str(path), "--out-traj", str(tmp_path / "e.tum"),
                 "--out-map", str(tmp_path / "m.ply")])
    assert code == 2
    assert "17" in capsys.readouterr().err


def test_parse_error_exit_code(tmp_path, capsys):
    path = tmp_path / "d.jsonl"
    path.write_text("garbage\n")
    assert main(["run", "--dataset", str(path), "--out-traj", str(tmp_path / "e"), "--out-map",
                 str(tmp_path / "m")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_missing_dataset(tmp_path):
    assert main(["run", "--dataset", str(tmp_path / "nope"), "--out-traj", "a", "--out-map", "b"]) == 2


@pytest.mark.parametrize("argv", [[], ["bogus"], ["run"], ["eval", "--est", "a"], ["run", "--baseline", "x",
                                                                                   "--dataset", "d"]])
def test_usage_errors(argv):
    assert main(argv) == 1


def test_bad_config_is_usage_error(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[nope]\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "d"), "--gt", str(tmp_path / "g")]) == 1


def test_defaults_command(tmp_path):
    assert main(["defaults", "--out", str(tmp_path / "c.ini")]) == 0
    assert "[stage2]" in (tmp_path / "c.ini").read_text()
