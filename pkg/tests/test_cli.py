import csv
import json
import re
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from oodlab import __version__
from oodlab.cli import main, parse_m_grid
from oodlab.errors import ConfigurationError

SVG_NS = "{http://www.w3.org/2000/svg}"
HEADER = "m,value,std_err,ci95_lo,ci95_hi,alpha"


def run(*argv):
    return main([str(a) for a in argv])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def column(rows, name):
    return np.array([float(r[name]) for r in rows])


def polylines(path):
    root = ET.parse(path).getroot()
    assert root.tag == SVG_NS + "svg"
    return root.findall(f".//{SVG_NS}polyline")


class TestGridParsing:
    def test_range_inclusive(self):
        assert parse_m_grid("0:10:5") == [0, 5, 10]
        assert parse_m_grid("0:9:5") == [0, 5]
        assert parse_m_grid("3:5") == [3, 4, 5]

    def test_list(self):
        assert parse_m_grid("0,56, 200") == [0, 56, 200]

    @pytest.mark.parametrize("bad", ["10:0:1", "0:10:0", "a:b:c", "", "5,3", "4,-2", "1:2:3:4", "-2:4:2"])
    def test_invalid(self, bad):
        with pytest.raises(ConfigurationError):
            parse_m_grid(bad)


class TestCurve:
    def test_analytic_agnostic(self, tmp_path):
        out = tmp_path / "curve"
        assert run("curve", "--mode", "analytic-agnostic", "--n", 100, "--mu", 5, "--sigma", 10,
                   "--delta", 1.6, "--m-grid", "0:500:1", "--out", out) == 0
        raw = (tmp_path / "curve.csv").read_bytes()
        assert b"\r" not in raw
        assert raw.decode().splitlines()[0] == HEADER
        rows = read_rows(tmp_path / "curve.csv")
        values = column(rows, "value")
        assert len(rows) == 501
        assert int(rows[int(np.argmin(values))]["m"]) == 24
        for r in rows[:20]:
            digits = re.sub(r"[^0-9]", "", r["value"].split("e")[0]).lstrip("0")
            assert len(digits) <= 12
            assert r["std_err"] == r["alpha"] == ""
        sidecar = json.loads((tmp_path / "curve.json").read_text())
        assert sidecar["command"] == "curve" and sidecar["oodlab_version"] == __version__
        assert sidecar["results"]["argmin_m"] == 24
        assert len(polylines(tmp_path / "curve.svg")) == 1

    def test_weighted_optimal_no_shift(self, tmp_path):
        assert run("curve", "--mode", "analytic-weighted-opt", "--delta", 0, "--m-grid", "2:200:2",
                   "--out", tmp_path / "w") == 0
        alphas = column(read_rows(tmp_path / "w.csv"), "alpha")
        assert np.all(np.abs(alphas - 0.5) <= 1e-4)

    def test_weighted_fixed_needs_number(self, tmp_path):
        assert run("curve", "--mode", "analytic-weighted", "--alpha", "optimal", "--out", tmp_path / "w") == 2

    def test_invalid_grid(self, tmp_path, capsys):
        assert run("curve", "--m-grid", "10:0:1", "--out", tmp_path / "c") == 2
        assert "m-grid" in capsys.readouterr().err
        assert not (tmp_path / "c.csv").exists()

    def test_odd_counts_rejected_for_sampling(self, tmp_path):
        assert run("curve", "--mode", "mc-agnostic", "--m", 3, "--replicates", 10, "--out", tmp_path / "c") == 2

    def test_explicit_m_flags(self, tmp_path):
        assert run("curve", "--m", 0, "--m", 10, "--m", 30, "--out", tmp_path / "c", "--no-svg") == 0
        assert [int(r["m"]) for r in read_rows(tmp_path / "c.csv")] == [0, 10, 30]
        assert not (tmp_path / "c.svg").exists()


class TestBound:
    def test_dominance_and_defaults(self, tmp_path):
        assert run("bound", "--m-grid", "0:2000:10", "--out", tmp_path / "b") == 0
        rows = read_rows(tmp_path / "b.csv")
        assert list(rows[0]) == ["m", "true_error", "upper_bound"]
        assert np.all(column(rows, "upper_bound") >= column(rows, "true_error"))
        sidecar = json.loads((tmp_path / "b.json").read_text())
        assert sidecar["params"]["delta_conf"] == 0.05
        assert sidecar["params"]["sup_points"] == 257
        assert len(polylines(tmp_path / "b.svg")) == 2

    def test_no_shift(self, tmp_path):
        assert run("bound", "--delta", 0, "--m-grid", "0:100:50", "--out", tmp_path / "b") == 0
        assert json.loads((tmp_path / "b.json").read_text())["results"]["d_h_star"] == 0.0


def test_mse_dip_and_rise(tmp_path):
    assert run("mse", "--delta", 1.8, "--n", 100, "--m-grid", "0:20000:10", "--out", tmp_path / "m") == 0
    mse = column(read_rows(tmp_path / "m.csv"), "value")
    assert mse.min() < mse[0] and mse.max() > mse[0]
    decomp = read_rows(tmp_path / "m.decomposition.csv")
    for r in decomp:
        assert float(r["mse"]) == pytest.approx(float(r["bias_sq"]) + float(r["variance"]), rel=1e-11)


def test_mc_agrees_with_curve(tmp_path):
    assert run("mc", "--m-grid", "0,56", "--replicates", 20000, "--seed", 3, "--out", tmp_path / "mc") == 0
    assert run("curve", "--m-grid", "0,56", "--out", tmp_path / "c") == 0
    mc = read_rows(tmp_path / "mc.csv")
    exact = column(read_rows(tmp_path / "c.csv"), "value")
    for r, e in zip(mc, exact):
        assert abs(float(r["value"]) - e) <= 3 * float(r["std_err"])
        assert float(r["ci95_lo"]) <= float(r["value"]) <= float(r["ci95_hi"])


def test_alpha_adaptive(tmp_path):
    assert run("alpha", "--search", "adaptive", "--m-grid", "0:400:100", "--out", tmp_path / "a") == 0
    alphas = column(read_rows(tmp_path / "a.csv"), "alpha")
    assert alphas[0] == 1.0 and np.all((alphas >= 0.5) & (alphas <= 1.0))


def test_train_small(tmp_path):
    assert run("train", "--m-grid", "0,20", "--seeds", 2, "--epochs", 2, "--out", tmp_path / "t") == 0
    rows = read_rows(tmp_path / "t.csv")
    assert len(rows) == 2 and all(r["alpha"] == "" for r in rows)


def test_train_divergence_is_numerical(tmp_path):
    assert run("train", "--m", 0, "--seeds", 1, "--epochs", 2, "--learning-rate", 1e308, "--out", tmp_path / "t") == 3


def test_plot_two_columns(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text("x,y\n0,1\n1,0.5\n2,0.25\n")
    assert run("plot", "--csv", src, "--title", "a & b", "--out", tmp_path / "p") == 0
    assert len(polylines(tmp_path / "p.svg")) == 1


def test_plot_bad_inputs(tmp_path):
    assert run("plot", "--csv", tmp_path / "missing.csv", "--out", tmp_path / "p") == 2
    src = tmp_path / "in.csv"
    src.write_text("x,y\n0,1\n")
    assert run("plot", "--csv", src, "--columns", "z", "--out", tmp_path / "p") == 2


class TestConfig:
    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 50, "delta": 3.2, "m_grid": "0:10:5"}))
        assert run("curve", "--config", cfg, "--delta", 0.8, "--out", tmp_path / "c") == 0
        params = json.loads((tmp_path / "c.json").read_text())["params"]
        assert params["n"] == 50 and params["delta"] == 0.8 and params["m_grid"] == "0:10:5"

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": 50, "colour": "red"}))
        assert run("curve", "--config", cfg, "--out", tmp_path / "c") == 2

    def test_bad_value_type(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n": "many"}))
        assert run("curve", "--config", cfg, "--out", tmp_path / "c") == 2

    def test_missing_out(self):
        assert run("curve") == 2

    def test_usage_errors_exit_two(self):
        with pytest.raises(SystemExit) as info:
            run("curve", "--mode", "nonsense", "--out", "x")
        assert info.value.code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["curve", "--m-grid", "0:100:10"],
        ["mc", "--m-grid", "0,20", "--replicates", 400, "--seed", 9],
        ["mse", "--mode", "mc", "--m-grid", "0:40:20", "--replicates", 300],
        ["train", "--m-grid", "0,20", "--seeds", 2, "--epochs", 2, "--alpha", "optimal"],
    ],
)
def test_replay_is_byte_identical(tmp_path, monkeypatch, argv):
    monkeypatch.setenv("OODLAB_THREADS", "1")
    assert run(*argv, "--out", tmp_path / "first") == 0
    original = (tmp_path / "first.csv").read_bytes()
    monkeypatch.setenv("OODLAB_THREADS", "4")
    assert run("replay", tmp_path / "first.json", "--out", tmp_path / "again") == 0
    assert (tmp_path / "again.csv").read_bytes() == original
    assert run(argv[0], "--config", tmp_path / "first.json", "--out", tmp_path / "third") == 0
    assert (tmp_path / "third.csv").read_bytes() == original


def test_replay_bad_sidecar(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("replay", bad) == 2


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "oodlab", "--version"], capture_output=True, text=True)
    assert done.returncode == 0 and done.stdout.strip() == __version__
