import csv
import json

import numpy as np
import pytest

from fpqr import BSplineBasis, DiscreteCurveSet
from fpqr.cli import main, read_curves, read_surface, write_curves


def run(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def simdir(tmp_path_factory):
    path = tmp_path_factory.mktemp("sim")
    assert run(["simulate", "--n", 25, "--seed", 3, "--out-dir", path]) == 0
    return path


@pytest.fixture(scope="module")
def model(simdir, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.json"
    code = run([
        "fit", "--y-file", simdir / "y.csv", "--x-file", simdir / "x.csv",
        "--k-y", 5, "--k-x", 5, "--h", 2, "--model-out", path,
    ])
    assert code == 0
    return path


class TestSimulate:
    def test_deterministic_bytes(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run(["simulate", "--n", 10, "--seed", 4, "--out-dir", a]) == 0
        assert run(["simulate", "--n", 10, "--seed", 4, "--out-dir", b]) == 0
        for name in ("y.csv", "x.csv", "x_clean.csv", "alpha_true.csv", "beta_true.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_beta_surface_cell(self, simdir):
        v_grid, u_grid, values = read_surface(simdir / "beta_true.csv")
        r = int(np.argmin(np.abs(v_grid - 0.5)))
        j = int(np.argmin(np.abs(u_grid - 1.0)))
        assert v_grid[r] == pytest.approx(0.5)
        assert u_grid[j] == pytest.approx(1.0)
        assert values[r, j] == pytest.approx(4.0, abs=1e-12)

    def test_alpha_value_at_right_endpoint(self, simdir):
        alpha, _ = read_curves(simdir / "alpha_true.csv")
        assert alpha.grid[-1] == pytest.approx(1.0)
        assert alpha.values[0, -1] == pytest.approx(2.0, abs=1e-12)

    def test_zero_n_is_usage_error(self, tmp_path):
        assert run(["simulate", "--n", 0, "--out-dir", tmp_path / "z"]) == 1

    def test_missing_out_dir_is_usage_error(self):
        assert run(["simulate", "--n", 5]) == 1


class TestFitPredict:
    def test_predict_roundtrip(self, simdir, model, tmp_path):
        out = tmp_path / "preds.csv"
        assert run(["predict", "--model", model, "--x-file", simdir / "x.csv",
                    "--out", out]) == 0
        preds, ids = read_curves(out)
        assert preds.n_curves == 25
        assert len(ids) == 25

    def test_mismatched_counts_exit_1(self, simdir, tmp_path):
        small = tmp_path / "small"
        assert run(["simulate", "--n", 10, "--seed", 9, "--out-dir", small]) == 0
        code = run(["fit", "--y-file", small / "y.csv", "--x-file", simdir / "x.csv",
                    "--k-y", 5, "--k-x", 5, "--h", 1,
                    "--model-out", tmp_path / "m.json"])
        assert code == 1

    def test_predict_missing_model_exit_2(self, simdir, tmp_path):
        code = run(["predict", "--model", tmp_path / "missing.json",
                    "--x-file", simdir / "x.csv", "--out", tmp_path / "o.csv"])
        assert code == 2

    def test_predict_grid_mismatch_exit_1(self, simdir, model, tmp_path):
        code = run(["predict", "--model", model, "--x-file", simdir / "y.csv",
                    "--out", tmp_path / "o.csv"])
        assert code == 1

    def test_auto_explores_full_default_grid(self, tmp_path, capsys):
        data = tmp_path / "d"
        assert run(["simulate", "--n", 40, "--seed", 17, "--out-dir", data]) == 0
        model_out = tmp_path / "auto_model.json"
        code = run(["fit", "--y-file", data / "y.csv", "--x-file", data / "x.csv",
                    "--auto", "--qcov", "li", "--model-out", model_out])
        assert code == 0
        printed = capsys.readouterr().out
        assert "selected k_y=" in printed
        with open(tmp_path / "cv_table.csv") as handle:
            rows = list(csv.reader(handle))
        assert len(rows) - 1 == 125  # header plus one row per cell
        assert model_out.exists()

    def test_auto_all_infeasible_exit_3(self, tmp_path):
        data = tmp_path / "tiny"
        assert run(["simulate", "--n", 15, "--seed", 2, "--out-dir", data]) == 0
        code = run(["fit", "--y-file", data / "y.csv", "--x-file", data / "x.csv",
                    "--auto", "--ky-grid", "20", "--kx-grid", "20", "--h-grid", "1",
                    "--model-out", tmp_path / "m.json"])
        assert code == 3

    def test_missing_params_without_auto(self, simdir, tmp_path):
        code = run(["fit", "--y-file", simdir / "y.csv", "--x-file", simdir / "x.csv",
                    "--model-out", tmp_path / "m.json"])
        assert code == 1


class TestInterval:
    def test_equal_taus_identical_bounds(self, simdir, tmp_path):
        out = tmp_path / "iv"
        code = run(["interval", "--y-train", simdir / "y.csv",
                    "--x-train", simdir / "x.csv", "--x-test", simdir / "x.csv",
                    "--tau-lo", 0.5, "--tau-hi", 0.5,
                    "--k-y", 5, "--k-x", 5, "--h", 1, "--out-dir", out])
        assert code == 0
        assert (out / "q_lo.csv").read_bytes() == (out / "q_hi.csv").read_bytes()

    def test_invalid_ordering_exit_1(self, simdir, tmp_path):
        code = run(["interval", "--y-train", simdir / "y.csv",
                    "--x-train", simdir / "x.csv", "--x-test", simdir / "x.csv",
                    "--tau-lo", 0.9, "--tau-hi", 0.1,
                    "--k-y", 5, "--k-x", 5, "--h", 1, "--out-dir", tmp_path / "iv"])
        assert code == 1

    def test_reports_crossing_fraction(self, simdir, tmp_path, capsys):
        out = tmp_path / "iv2"
        code = run(["interval", "--y-train", simdir / "y.csv",
                    "--x-train", simdir / "x.csv", "--x-test", simdir / "x.csv",
                    "--tau-lo", 0.025, "--tau-hi", 0.975,
                    "--k-y", 5, "--k-x", 5, "--h", 1, "--out-dir", out])
        assert code == 0
        assert "crossing_fraction=" in capsys.readouterr().out


def make_ar_series(tmp_path, n_curves=12, decay=0.8):
    """Noiseless series: each curve is a rotated, damped map of the previous
    one inside a fixed spline space, so a one-lag functional model is exact."""
    grid = np.linspace(0.0, 1.0, 25)
    basis = BSplineBasis((0.0, 1.0), 4, 4)
    coef = np.array([1.0, 0.3, -0.5, 0.8])
    rows = []
    for _ in range(n_curves):
        rows.append(basis.design_matrix(grid) @ coef)
        coef = decay * np.roll(coef, 1)
    path = tmp_path / "series.csv"
    write_curves(path, DiscreteCurveSet(grid=grid, values=np.array(rows)))
    return path


class TestForecast:
    def test_row_count(self, tmp_path):
        series = make_ar_series(tmp_path, n_curves=10)
        out = tmp_path / "fc.csv"
        code = run(["forecast", "--series-file", series, "--split", 8,
                    "--k-y", 4, "--k-x", 4, "--h", 3, "--out", out])
        assert code == 0
        with open(out) as handle:
            rows = list(csv.reader(handle))
        assert len(rows) - 1 == 2

    def test_noiseless_autoregressive_recovery(self, tmp_path):
        series = make_ar_series(tmp_path, n_curves=12)
        out = tmp_path / "fc.csv"
        code = run(["forecast", "--series-file", series, "--split", 10,
                    "--k-y", 4, "--k-x", 4, "--h", 4, "--out", out])
        assert code == 0
        with open(out) as handle:
            rows = list(csv.reader(handle))
        rmspes = [float(r[1]) for r in rows[1:]]
        assert all(v <= 5.0 for v in rmspes)

    def test_deterministic(self, tmp_path):
        series = make_ar_series(tmp_path)
        out1 = tmp_path / "f1.csv"
        out2 = tmp_path / "f2.csv"
        for out in (out1, out2):
            assert run(["forecast", "--series-file", series, "--split", 9,
                        "--k-y", 4, "--k-x", 4, "--h", 2, "--out", out]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_too_short_series_exit_1(self, tmp_path):
        series = make_ar_series(tmp_path, n_curves=4)
        code = run(["forecast", "--series-file", series, "--split", 4,
                    "--k-y", 4, "--k-x", 4, "--h", 1, "--out", tmp_path / "f.csv"])
        assert code == 1


class TestEvaluate:
    def test_perfect_estimates_zero_metrics(self, simdir, tmp_path):
        out = tmp_path / "m.csv"
        code = run(["evaluate", "--y-true", simdir / "y.csv", "--y-pred", simdir / "y.csv",
                    "--alpha-true", simdir / "alpha_true.csv",
                    "--alpha-est", simdir / "alpha_true.csv",
                    "--beta-true", simdir / "beta_true.csv",
                    "--beta-est", simdir / "beta_true.csv",
                    "--out", out])
        assert code == 0
        with open(out) as handle:
            metrics = {row[0]: float(row[1]) for row in list(csv.reader(handle))[1:]}
        assert metrics["rmspe"] == 0.0
        assert metrics["rrispee_alpha"] == 0.0
        assert metrics["rrispee_beta"] == 0.0

    def test_full_coverage_cpd(self, simdir, tmp_path):
        y, _ = read_curves(simdir / "y.csv")
        lo = DiscreteCurveSet(grid=y.grid, values=y.values - 1.0)
        hi = DiscreteCurveSet(grid=y.grid, values=y.values + 1.0)
        write_curves(tmp_path / "lo.csv", lo)
        write_curves(tmp_path / "hi.csv", hi)
        out = tmp_path / "m.csv"
        code = run(["evaluate", "--y-true", simdir / "y.csv",
                    "--q-lo", tmp_path / "lo.csv", "--q-hi", tmp_path / "hi.csv",
                    "--out", out])
        assert code == 0
        with open(out) as handle:
            metrics = {row[0]: float(row[1]) for row in list(csv.reader(handle))[1:]}
        assert metrics["cpd"] == pytest.approx(-0.05, abs=1e-12)
        assert metrics["interval_score"] == pytest.approx(2.0, abs=1e-12)

    def test_crossed_bounds_swapped_and_reported(self, simdir, tmp_path):
        y, _ = read_curves(simdir / "y.csv")
        lo = y.values - 1.0
        hi = y.values + 1.0
        lo[0, 3], hi[0, 3] = hi[0, 3], lo[0, 3]  # one crossed point
        write_curves(tmp_path / "lo.csv", DiscreteCurveSet(grid=y.grid, values=lo))
        write_curves(tmp_path / "hi.csv", DiscreteCurveSet(grid=y.grid, values=hi))
        out = tmp_path / "m.csv"
        code = run(["evaluate", "--y-true", simdir / "y.csv",
                    "--q-lo", tmp_path / "lo.csv", "--q-hi", tmp_path / "hi.csv",
                    "--out", out])
        assert code == 0
        with open(out) as handle:
            metrics = {row[0]: float(row[1]) for row in list(csv.reader(handle))[1:]}
        assert metrics["crossing_fraction"] == pytest.approx(1.0 / y.values.size)
        assert metrics["cpd"] == pytest.approx(-0.05, abs=1e-12)

    def test_no_inputs_exit_1(self, tmp_path):
        assert run(["evaluate", "--out", tmp_path / "m.csv"]) == 1


class TestBench:
    def test_row_count(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = run(["bench", "--n-list", "30", "--h-list", "1,2", "--k", 5,
                    "--qcov-list", "li,dodge", "--reps", 1, "--out", out])
        assert code == 0
        with open(out) as handle:
            rows = list(csv.reader(handle))
        assert len(rows) - 1 == 4

    def test_zero_reps_exit_1(self, tmp_path):
        assert run(["bench", "--reps", 0, "--out", tmp_path / "b.csv"]) == 1


class TestMc:
    def test_smoke_rows_and_determinism(self, tmp_path):
        args = ["mc", "--n-list", "30", "--tau-list", "0.5", "--qcov-list", "li",
                "--reps", 2, "--seed", 5, "--n-test", 20,
                "--ky-grid", "5", "--kx-grid", "5", "--h-grid", "1,2",
                "--folds", 5]
        out1 = tmp_path / "mc1.csv"
        out2 = tmp_path / "mc2.csv"
        assert run(args + ["--out", out1]) == 0
        assert run(args + ["--out", out2]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        with open(out1) as handle:
            rows = list(csv.reader(handle))
        assert len(rows) - 1 == 2
        assert all(row[-1] == "ok" for row in rows[1:])


class TestConfigFile:
    def test_config_supplies_flags_and_cli_wins(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        outdir = tmp_path / "out_cfg"
        cfg.write_text(json.dumps({"n": 8, "seed": 11, "out_dir": str(outdir)}))
        assert run(["simulate", "--config", cfg]) == 0
        y, _ = read_curves(outdir / "y.csv")
        assert y.n_curves == 8
        # CLI flag overrides the config value
        outdir2 = tmp_path / "out_cli"
        assert run(["simulate", "--config", cfg, "--n", 5, "--out-dir", outdir2]) == 0
        y2, _ = read_curves(outdir2 / "y.csv")
        assert y2.n_curves == 5


class TestParsing:
    def test_unknown_command_exit_1(self):
        assert run(["frobnicate"]) == 1

    def test_bad_flag_value_exit_1(self, tmp_path):
        assert run(["simulate", "--n", "abc", "--out-dir", tmp_path]) == 1
