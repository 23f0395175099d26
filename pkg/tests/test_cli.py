import json
import re
import shutil
import subprocess

import numpy as np
import pytest

from desira.cli import load_run_config, main, read_table
from desira.desirability import DMax, sample_curve
from desira.errors import ConfigError
from desira.result import read_trace
from desira.rsm import conversion_pred
from desira.spacefill import read_design

CHEMICAL_INI = """\
[sbo]
problem = chemical
seed = {seed}
lower = -1.7, -1.7, -1.7
upper = 1.7, 1.7, 1.7
n_initial = {n_initial}
max_iter = {max_iter}
max_surrogate_points = 30
pareto = max, max

[desirability]
conversion = max low=80 high=97
activity = target low=55 target=57.5 high=60
"""


def write_config(tmp_path, name="run.ini", **kw):
    values = dict(seed=126, n_initial=15, max_iter=50)
    values.update(kw)
    path = tmp_path / name
    path.write_text(CHEMICAL_INI.format(**values))
    return path


def printed(out, label):
    return float(re.search(rf"{label}: ([-+0-9.eE]+)", out).group(1))


class TestDemo:
    def test_square(self, tmp_path, capsys):
        assert main(["demo", "chemical", "--space", "square", "--out", str(tmp_path), "--resolution", "11"]) == 0
        out = capsys.readouterr().out
        assert printed(out, "best desirability") >= 0.94
        assert printed(out, "activity") == pytest.approx(57.5, abs=1e-3)
        grid = read_table(tmp_path / "chemical_square_grid.csv")
        assert len(grid) == 121
        assert grid["temperature"].nunique() == 1
        row = grid.iloc[17]
        assert row["conversionPred"] == conversion_pred([row["time"], row["temperature"], row["catalyst"]])

    def test_circular(self, tmp_path, capsys):
        assert main(["demo", "chemical", "--space", "circular", "--out", str(tmp_path), "--resolution", "5"]) == 0
        assert printed(capsys.readouterr().out, "best desirability") >= 0.85
        best = json.loads((tmp_path / "chemical_circular_best.json").read_text())
        assert np.linalg.norm(best["x_best"]) <= 1.682 + 1e-6

    def test_invalid_space(self):
        with pytest.raises(SystemExit) as exc:
            main(["demo", "chemical", "--space", "hexagonal"])
        assert exc.value.code == 2

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DESIRA_OUT", str(tmp_path / "envout"))
        assert main(["demo", "chemical", "--resolution", "3"]) == 0
        assert (tmp_path / "envout" / "chemical_square_grid.csv").exists()


class TestSbo:
    def test_chemical_seed_126(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        assert main(["sbo", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["f_best"] <= 0.10
        X, y, Y = read_trace(tmp_path / "o" / "trace.csv")
        assert len(y) == 50 and Y.shape == (50, 2)
        progress = read_table(tmp_path / "o" / "progress.csv")
        assert progress["best_so_far"].is_monotonic_decreasing
        assert progress["best_so_far"].iloc[-1] == summary["f_best"]
        pareto = read_table(tmp_path / "o" / "pareto.csv")
        assert len(pareto) >= 1

    def test_rerun_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, seed=5, n_initial=5, max_iter=9)
        assert main(["sbo", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
        assert main(["sbo", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()

    def test_bad_value_reports_line(self, tmp_path, capsys):
        path = tmp_path / "bad.ini"
        path.write_text("[sbo]\nproblem = chemical\nseed = abc\nlower = 0\nupper = 1\n")
        assert main(["sbo", "--config", str(path)]) == 2
        assert "bad.ini:3" in capsys.readouterr().err

    def test_bad_desirability_reports_line(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[sbo]\nseed = 1\nlower = 0\nupper = 1\n\n[desirability]\nd1 = bogus low=1\n")
        with pytest.raises(ConfigError, match=r"bad\.ini:7"):
            load_run_config(path)

    def test_missing_section(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("seed = 1\n")
        assert main(["sbo", "--config", str(path)]) == 2

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[sbo]\nseed = 1\nlower = 0\nupper = 1\nbudget = 4\n")
        with pytest.raises(ConfigError, match=r"bad\.ini:5: budget"):
            load_run_config(path)


class TestDesirabilityPlot:
    def test_max(self, tmp_path, capsys):
        assert main(["desirability-plot", "conversion", "--out", str(tmp_path)]) == 0
        svg = (tmp_path / "conversion.svg").read_text()
        marker = re.search(r'<line class="marker"[^>]*y1="([0-9.]+)"[^>]*stroke-dasharray', svg)
        assert marker
        # y axis spans [0, 1] over 360 - 2*50 pixels, so 0.5 sits at pixel 180
        assert float(marker.group(1)) == pytest.approx(180.0)
        assert "non-informative value: 0.5" in capsys.readouterr().out
        curve = read_table(tmp_path / "conversion.csv")
        x, d = sample_curve(DMax(80, 97))
        np.testing.assert_array_equal(curve["input"], x)
        np.testing.assert_array_equal(curve["desirability"], d)

    def test_categorical_bars(self, tmp_path):
        assert main(["desirability-plot", "categorical", "--out", str(tmp_path)]) == 0
        svg = (tmp_path / "categorical.svg").read_text()
        heights = [float(h) for h in re.findall(r'<rect class="bar"[^>]*height="([0-9.]+)"', svg)]
        assert len(heights) == 3
        np.testing.assert_allclose(np.array(heights) / 260.0, [0.1, 0.9, 0.2], atol=1e-3)
        table = read_table(tmp_path / "categorical.csv")
        assert table["desirability"].tolist() == [0.1, 0.9, 0.2]

    def test_inline_spec(self, tmp_path):
        assert main(["desirability-plot", "min low=6 high=6000 scale=2", "--name", "loss2", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "loss2.svg").exists()

    def test_spec_file(self, tmp_path):
        spec = tmp_path / "s.txt"
        spec.write_text("variant = target\nlow = 55\ntarget = 57.5\nhigh = 60\n")
        assert main(["desirability-plot", str(spec), "--out", str(tmp_path)]) == 0

    @pytest.mark.parametrize("ref", ["nonsense", "max low=9 high=1"])
    def test_invalid(self, ref, tmp_path):
        assert main(["desirability-plot", ref, "--out", str(tmp_path)]) == 2


class TestMM:
    @pytest.fixture
    def design(self, tmp_path):
        path = tmp_path / "d3.csv"
        path.write_text("0,0\n0.5,0.5\n1,1\n")
        return path

    def test_eval(self, design, capsys):
        assert main(["mm", "eval", str(design)]) == 0
        out = capsys.readouterr().out
        assert "Phi_q_intensive: 1.224744871391589" in out
        assert "0.70710678118654757,2" in out

    def test_improve(self, design, capsys):
        assert main(["mm", "improve", str(design), "--point", "0,1"]) == 0
        assert "improvement:" in capsys.readouterr().out

    def test_improve_duplicate(self, design, capsys):
        assert main(["mm", "improve", str(design), "--point", "0.5,0.5"]) == 1
        assert "zero distance" in capsys.readouterr().err

    def test_eval_duplicate(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("0,0\n0,0\n")
        assert main(["mm", "eval", str(path)]) == 1

    def test_explore(self, tmp_path):
        out = tmp_path / "ex"
        args = ["mm", "explore", "--seed", "1", "--budget", "20", "--switch-after", "10", "--out", str(out)]
        assert main(args) == 0
        trace = read_table(out / "explore_trace.csv")
        assert len(trace) == 20
        assert sorted(trace.loc[trace["phase"] == 1, "call"].unique()) == list(range(1, 11))
        X, _, _ = read_trace(out / "explore_trace.csv")
        np.testing.assert_array_equal(X, trace[["x1", "x2"]].to_numpy())
        X0 = read_design(out / "design.csv")
        assert X0.points.shape == (10, 2)
        hist = read_table(out / "diagnostics.csv")
        assert list(hist.columns) == ["dimension", "bin_low", "bin_high", "count"]
        assert hist.groupby("dimension")["count"].sum().tolist() == [10, 10]

    def test_explore_requires_seed(self):
        with pytest.raises(SystemExit) as exc:
            main(["mm", "explore"])
        assert exc.value.code == 2


@pytest.mark.skipif(shutil.which("desira") is None, reason="console script not installed")
def test_console_script(tmp_path):
    design = tmp_path / "d.csv"
    design.write_text("0,0\n0.5,0.5\n1,1\n")
    proc = subprocess.run(["desira", "mm", "improve", str(design), "--point", "1,1"], capture_output=True, text=True)
    assert proc.returncode == 1
    proc = subprocess.run(["desira", "demo", "chemical", "--space", "cube"], capture_output=True, text=True)
    assert proc.returncode == 2
