import subprocess
import sys
import time

import pytest

from fswipt.cli import main
from fswipt.sim import CSV_HEADER


@pytest.fixture
def worked_csv(tmp_path):
    path = tmp_path / "worked.csv"
    path.write_text("capacity_bps,harvest_mw\n3,2\n2,2\n1,1\n")
    return path


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text("num_subcarriers = 8\ntrials = 100\nnoise_grid = 30, 50, 70\nseed = 3\n")
    return path


def test_solve_worked_instance(worked_csv, capsys):
    assert main(["solve", "--problem", "p1", "--channels", str(worked_csv),
                 "--q-min-mw", "2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "mask 101"
    assert out[1] == "feasible true"
    assert out[2] == "objective 4 bit/s"
    assert out[4] == "bound 4 bit/s"


def test_solve_p2_infeasible(worked_csv, capsys):
    assert main(["solve", "--problem", "p2", "--channels", str(worked_csv),
                 "--c-min-kbps", "1"]) == 0
    out = capsys.readouterr().out
    assert "feasible false" in out and "bound none" in out


def test_bound(worked_csv, capsys):
    assert main(["bound", "--problem", "p1", "--channels", str(worked_csv),
                 "--q-min-mw", "2"]) == 0
    assert capsys.readouterr().out.strip() == "C_up 4 bit/s"
    assert main(["bound", "--problem", "p2", "--channels", str(worked_csv),
                 "--c-min-kbps", "0.002"]) == 0
    assert capsys.readouterr().out.startswith("Q_up 0.00366666666")


def test_bound_infeasible_exits_one(worked_csv, capsys):
    assert main(["bound", "--problem", "p1", "--channels", str(worked_csv),
                 "--q-min-mw", "9"]) == 1
    assert "error" in capsys.readouterr().err


def test_solve_spa_with_complex_channels(tmp_path, capsys):
    path = tmp_path / "h.csv"
    path.write_text("re,im\n1.0,0.0\n0.5,0.5\n0.1,0.0\n0.8,-0.2\n")
    assert main(["solve", "--problem", "p1", "--channels", str(path), "--q-min-mw", "1",
                 "--noise-db", "40", "--spa"]) == 0
    out = dict(line.split(" ", 1) for line in capsys.readouterr().out.splitlines())
    assert float(out["spa_objective"].split()[0]) >= float(out["objective"].split()[0])
    assert len(out["spa_powers_mw"].split(",")) == 4


def test_spa_needs_complex_channels(worked_csv):
    assert main(["solve", "--problem", "p1", "--channels", str(worked_csv), "--spa"]) == 1


def test_missing_config_exits_one(tmp_path, capsys):
    missing = tmp_path / "absent.cfg"
    assert main(["sweep", "--config", str(missing), "--out", str(tmp_path / "o.csv")]) == 1
    assert "absent.cfg" in capsys.readouterr().err


def test_bad_arguments_exit_one(capsys):
    assert main(["solve", "--problem", "p9", "--channels", "x"]) == 1
    assert main([]) == 1


def test_bad_channel_file(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    assert main(["bound", "--problem", "p1", "--channels", str(path)]) == 1


def test_unwritable_output_exits_two(small_cfg, tmp_path):
    out = tmp_path / "no" / "such" / "dir" / "o.csv"
    assert main(["sweep", "--config", str(small_cfg), "--out", str(out), "--workers", "1"]) == 2


def test_small_sweep_runs_quickly(small_cfg, tmp_path):
    out = tmp_path / "o.csv"
    plot = tmp_path / "plot.py"
    start = time.perf_counter()
    assert main(["sweep", "--config", str(small_cfg), "--out", str(out), "--workers", "1",
                 "--plot-script", str(plot)]) == 0
    assert time.perf_counter() - start < 10
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 3 * 5
    assert plot.exists()


def test_verbose_adds_feedback_column(small_cfg, tmp_path):
    out = tmp_path / "o.csv"
    assert main(["-v", "sweep", "--config", str(small_cfg), "--out", str(out),
                 "--workers", "1"]) == 0
    header, first = out.read_text().splitlines()[:2]
    assert header.endswith(",feedback_bits") and first.endswith(",8")


def test_module_entry_point(worked_csv):
    res = subprocess.run([sys.executable, "-m", "fswipt", "solve", "--problem", "p1",
                          "--channels", str(worked_csv), "--q-min-mw", "2"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.startswith("mask 101")
