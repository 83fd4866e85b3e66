import json
import subprocess
import sys

import pytest

from diffpoly import analysis as an
from diffpoly import estimators as est
from diffpoly.cli import main, read_config


@pytest.fixture(autouse=True)
def _fresh_cache():
    est.clear_cache()
    yield
    est.clear_cache()


def test_weyl_prints_csv_and_passes(capsys):
    assert main(["weyl", "--manifold", "t2", "--ns", "8,16,32"]) == 0
    out, err = capsys.readouterr()
    assert out.splitlines()[0] == ",".join(an.CSV_COLUMNS)
    assert len(out.splitlines()) == 4
    assert "PASS" in err and "FAIL" not in err


@pytest.mark.parametrize("cmd", ["kernel-asym", "christoffel"])
def test_deterministic_commands(cmd, capsys):
    assert main([cmd, "--manifold", "s2", "--ns", "8,16,32"]) == 0


def test_pointset_command(capsys):
    assert main(["pointset", "--manifold", "t1", "--n", "8"]) == 0
    out, err = capsys.readouterr()
    assert out.splitlines()[0] == "x0,weight"
    assert "PASS  covering" in err


def test_smallball_command(capsys):
    assert main(["smallball", "--manifold", "t1", "--n", "16", "--trials", "5000"]) == 0
    out, _ = capsys.readouterr()
    assert len(out.splitlines()) == 1 + len(est.SMALL_BALL_TS)


def test_average_writes_reports(tmp_path, capsys):
    stem = tmp_path / "avg"
    code = main(["average", "--ns", "16,32,64", "--p", "1", "--q", "2", "--trials", "300",
                 "--out", str(stem), "--format", "json"])
    assert code == 0
    body = json.loads((tmp_path / "avg.json").read_text())
    assert body["kind"] == "average"
    assert body["config"]["pairs"] == [["1", "2"]]
    assert all(v.passed for v in an.rejudge(tmp_path / "avg.json"))


def test_worst_exact_pair(capsys):
    assert main(["worst", "--ns", "16,32,64,128", "--p", "2", "--q", "inf"]) == 0


def test_moments_command(capsys):
    assert main(["moments", "--ns", "16,32,64", "--q", "4", "--trials", "300"]) == 0


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\nmanifold = s2\nns = 8, 16, 32\nseed = 5\n")
    assert read_config(cfg) == {"manifold": "s2", "ns": "8, 16, 32", "seed": "5"}
    assert main(["weyl", "--config", str(cfg)]) == 0
    out, _ = capsys.readouterr()
    assert out.splitlines()[1].startswith("s2,2,8,")
    assert main(["weyl", "--config", str(cfg), "--manifold", "t1"]) == 0
    out, _ = capsys.readouterr()
    assert out.splitlines()[1].startswith("t1,1,8,")


def test_bad_config_line(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("manifold s2\n")
    assert main(["weyl", "--config", str(cfg)]) == 2
    assert "expected key = value" in capsys.readouterr().err


def test_library_errors_exit_two(capsys):
    assert main(["average", "--oversample", "1.5"]) == 2
    assert main(["average", "--p", "1"]) == 2
    assert main(["average", "--p", "0.5", "--q", "2"]) == 2
    assert main(["weyl", "--ns", "32,16,64"]) == 2
    err = capsys.readouterr().err
    assert err.count("error:") == 4


def test_argparse_rejects_unknown_manifold(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["weyl", "--manifold", "t4"])
    assert exc.value.code == 2


def test_failing_verdict_exits_one(monkeypatch, capsys):
    monkeypatch.setitem(an.THRESHOLDS, "weyl_band", 1.0001)
    assert main(["weyl", "--ns", "16,32,64"]) == 1
    assert "FAIL  weyl band" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "diffpoly.cli", "weyl", "--ns", "16,32,64"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("manifold,d,n,p,q")
