"""Command-line interface: simulation, fitting, prediction, intervals,
expanding-window forecasting, evaluation, and timing benchmarks.

Exit codes: 0 success, 1 usage or validation failure, 2 I/O failure,
3 numerical failure.  Every command is deterministic given its flags.

Curve files are CSV with a header row ``grid,<t1>,...,<tJ>`` giving the
sampling points and one row per curve, ``<id>,<v1>,...,<vJ>``.  Bivariate
surfaces use a header ``v\\u,<u1>,...`` and one row per predictor grid
point.  Floats are written with ``repr`` and therefore round-trip exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .basis import DiscreteCurveSet
from .estimator import FPQRRegression
from .exceptions import (
    DegenerateComponentError,
    IllConditionedError,
    InvalidInputError,
    NumericalError,
)
from .metrics import cpd, interval_score, rmspe, rrispee, rrispee_surface
from .model_io import load_model, save_model
from .model_selection import GridSpec, grid_search_cv
from .simulation import ERROR_DISTS, DgpSpec, generate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3

_WORKERS_ENV = "FPQR_WORKERS"


# ---------------------------------------------------------------------------
# file formats


def _fmt(x: float) -> str:
    return repr(float(x))


def write_curves(path, curves: DiscreteCurveSet, ids=None) -> None:
    ids = list(range(curves.n_curves)) if ids is None else list(ids)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["grid"] + [_fmt(t) for t in curves.grid])
        for ident, row in zip(ids, curves.values):
            writer.writerow([ident] + [_fmt(v) for v in row])


def read_curves(path) -> tuple[DiscreteCurveSet, list]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if len(rows) < 2:
        raise InvalidInputError(f"{path}: expected a grid header and at least one curve row")
    header = rows[0]
    if not header or header[0] != "grid":
        raise InvalidInputError(f"{path}: first header cell must be 'grid'")
    try:
        grid = np.array([float(t) for t in header[1:]])
        ids = [row[0] for row in rows[1:] if row]
        values = np.array(
            [[float(v) for v in row[1:]] for row in rows[1:] if row]
        )
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric field ({exc})") from exc
    if values.ndim != 2 or values.shape[1] != grid.size:
        raise InvalidInputError(f"{path}: row lengths do not match the grid header")
    if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(values)):
        raise InvalidInputError(f"{path}: non-finite values are not supported")
    return DiscreteCurveSet(grid=grid, values=values), ids


def write_surface(path, v_grid, u_grid, values) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["v\\u"] + [_fmt(u) for u in u_grid])
        for v, row in zip(v_grid, values):
            writer.writerow([_fmt(v)] + [_fmt(x) for x in row])


def read_surface(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if len(rows) < 2:
        raise InvalidInputError(f"{path}: expected a header and at least one row")
    try:
        u_grid = np.array([float(t) for t in rows[0][1:]])
        v_grid = np.array([float(row[0]) for row in rows[1:] if row])
        values = np.array([[float(v) for v in row[1:]] for row in rows[1:] if row])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric field ({exc})") from exc
    if values.shape != (v_grid.size, u_grid.size):
        raise InvalidInputError(f"{path}: inconsistent surface shape")
    return v_grid, u_grid, values


def _write_table(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) if isinstance(x, float) else x for x in row])


# ---------------------------------------------------------------------------
# argument plumbing


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits with code 1 on usage errors."""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _float_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _str_list(text: str) -> tuple[str, ...]:
    values = tuple(v.strip() for v in text.split(",") if v.strip())
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _add_model_params(sub, with_tau=True):
    if with_tau:
        sub.add_argument("--tau", type=float, default=0.5, help="quantile level in (0,1)")
    sub.add_argument("--qcov", default="li", choices=["dodge", "choi", "li"],
                     help="quantile-covariance estimator")
    sub.add_argument("--k-y", type=int, default=None, help="response basis size")
    sub.add_argument("--k-x", type=int, default=None, help="predictor basis size")
    sub.add_argument("--h", type=int, default=None, help="number of components")
    sub.add_argument("--order", type=int, default=4, help="B-spline order (4 = cubic)")


def _add_grid_params(sub):
    sub.add_argument("--ky-grid", type=_int_list, default=(4, 5, 8, 10, 20))
    sub.add_argument("--kx-grid", type=_int_list, default=(4, 5, 8, 10, 20))
    sub.add_argument("--h-grid", type=_int_list, default=(1, 2, 3, 4, 5))
    sub.add_argument("--folds", type=int, default=5)
    sub.add_argument("--cv-seed", type=int, default=0, help="fold-assignment seed")
    sub.add_argument("--bic-total-n", action="store_true",
                     help="use the full sample size in the BIC penalty instead of the fold size")


def build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="fpqr", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version="fpqr 0.1.0")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", parents=[], help="generate a synthetic dataset")
    p.add_argument("--n", type=int, default=None, help="number of curves")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--error-dist", default="normal", choices=list(ERROR_DISTS))
    p.add_argument("--gamma", type=float, default=0.05, help="contamination level")
    p.add_argument("--no-predictor-noise", action="store_true")
    p.add_argument("--shared-error", action="store_true",
                   help="one error draw per curve instead of one per grid point")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("fit", help="fit a model, optionally with grid-search CV")
    p.add_argument("--y-file", default=None)
    p.add_argument("--x-file", default=None)
    _add_model_params(p)
    p.add_argument("--auto", action="store_true", help="select (K_y, K_x, h) by CV")
    _add_grid_params(p)
    p.add_argument("--model-out", default=None)
    p.add_argument("--cv-out", default=None,
                   help="CV table path (default: cv_table.csv beside the model)")
    p.set_defaults(func=cmd_fit)

    p = subs.add_parser("predict", help="predict quantile curves with a saved model")
    p.add_argument("--model", default=None)
    p.add_argument("--x-file", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("interval", help="pointwise prediction intervals from two fits")
    p.add_argument("--y-train", default=None)
    p.add_argument("--x-train", default=None)
    p.add_argument("--x-test", default=None)
    p.add_argument("--tau-lo", type=float, default=0.025)
    p.add_argument("--tau-hi", type=float, default=0.975)
    _add_model_params(p, with_tau=False)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_interval)

    p = subs.add_parser("forecast", help="expanding-window one-step-ahead evaluation")
    p.add_argument("--series-file", default=None)
    p.add_argument("--split", type=int, default=None,
                   help="index of the first curve to forecast")
    _add_model_params(p)
    p.add_argument("--tau-lo", type=float, default=0.025)
    p.add_argument("--tau-hi", type=float, default=0.975)
    p.add_argument("--refit-every", type=int, default=1,
                   help="refit cadence in steps (1 = every step)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_forecast)

    p = subs.add_parser("evaluate", help="compute error metrics from files")
    p.add_argument("--y-true", default=None)
    p.add_argument("--y-pred", default=None)
    p.add_argument("--q-lo", default=None)
    p.add_argument("--q-hi", default=None)
    p.add_argument("--alpha-true", default=None)
    p.add_argument("--alpha-est", default=None)
    p.add_argument("--beta-true", default=None)
    p.add_argument("--beta-est", default=None)
    p.add_argument("--nominal", type=float, default=0.95)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("bench", help="wall-clock fit timings per method")
    p.add_argument("--n-list", type=_int_list, default=(500,))
    p.add_argument("--h-list", type=_int_list, default=(1, 5))
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--qcov-list", type=_str_list, default=("dodge", "choi", "li"))
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)

    p = subs.add_parser("mc", help="Monte Carlo evaluation over replications")
    p.add_argument("--n-list", type=_int_list, default=(50, 100, 250))
    p.add_argument("--error-dist", default="normal", choices=list(ERROR_DISTS))
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--tau-list", type=_float_list, default=(0.5,))
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--qcov-list", type=_str_list, default=("li",))
    p.add_argument("--n-test", type=int, default=200)
    _add_grid_params(p)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--workers", type=int,
                   default=int(os.environ.get(_WORKERS_ENV, "1")),
                   help=f"parallel workers (env {_WORKERS_ENV})")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mc)

    for sub in subs.choices.values():
        sub.add_argument("--config", default=None,
                         help="JSON file of option values; explicit flags win")
    return parser, dict(subs.choices)


# ---------------------------------------------------------------------------
# commands


def _require(args, *names) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise InvalidInputError(f"missing required option(s): {', '.join(missing)}")


def cmd_simulate(args) -> int:
    _require(args, "n", "out_dir")
    spec = DgpSpec(
        n=args.n,
        seed=args.seed,
        error_dist=args.error_dist,
        gamma=args.gamma,
        predictor_noise=not args.no_predictor_noise,
        shared_error=args.shared_error,
    )
    out = generate(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    write_curves(os.path.join(args.out_dir, "y.csv"), out.y)
    write_curves(os.path.join(args.out_dir, "x.csv"), out.x_noisy)
    write_curves(os.path.join(args.out_dir, "x_clean.csv"), out.x_clean)
    write_curves(
        os.path.join(args.out_dir, "alpha_true.csv"),
        DiscreteCurveSet(grid=out.y.grid, values=out.alpha_true[None, :]),
        ids=["alpha"],
    )
    write_surface(
        os.path.join(args.out_dir, "beta_true.csv"),
        out.x_clean.grid,
        out.y.grid,
        out.beta_true,
    )
    print(f"wrote {args.n} curves to {args.out_dir}")
    return EXIT_OK


def _fit_estimator(y_set, x_set, tau, qcov, ky, kx, h, order):
    est = FPQRRegression(
        tau=tau,
        n_components=h,
        qcov_method=qcov,
        n_basis_y=ky,
        n_basis_x=kx,
        basis_order=order,
    )
    try:
        est.fit(x_set, y_set)
    except DegenerateComponentError as exc:
        raise NumericalError(f"stage component-extraction: {exc}") from exc
    except IllConditionedError as exc:
        raise NumericalError(f"stage back-projection: {exc}") from exc
    return est


def cmd_fit(args) -> int:
    _require(args, "y_file", "x_file", "model_out")
    y_set, _ = read_curves(args.y_file)
    x_set, _ = read_curves(args.x_file)
    if y_set.n_curves != x_set.n_curves:
        raise InvalidInputError(
            f"y has {y_set.n_curves} curves but x has {x_set.n_curves}"
        )
    if args.auto:
        spec = GridSpec(
            k_y_grid=args.ky_grid,
            k_x_grid=args.kx_grid,
            h_grid=args.h_grid,
            folds=args.folds,
            seed=args.cv_seed,
            bic_total_n=args.bic_total_n,
        )
        result = grid_search_cv(y_set, x_set, args.tau, args.qcov, spec, args.order)
        ky, kx, h = result.best
        cv_path = args.cv_out or os.path.join(
            os.path.dirname(os.path.abspath(args.model_out)), "cv_table.csv"
        )
        folds = result.fold_bic.shape[1]
        _write_table(
            cv_path,
            ["k_y", "k_x", "h", "mean_bic"] + [f"fold_{i}" for i in range(folds)],
            result.rows(),
        )
        print(f"selected k_y={ky} k_x={kx} h={h}")
    else:
        missing = [n for n, v in (("--k-y", args.k_y), ("--k-x", args.k_x), ("--h", args.h))
                   if v is None]
        if missing:
            raise InvalidInputError(
                f"{', '.join(missing)} required unless --auto is given"
            )
        ky, kx, h = args.k_y, args.k_x, args.h
    est = _fit_estimator(y_set, x_set, args.tau, args.qcov, ky, kx, h, args.order)
    save_model(est, args.model_out)
    print(f"model written to {args.model_out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    _require(args, "model", "x_file", "out")
    est = load_model(args.model)
    x_set, ids = read_curves(args.x_file)
    preds = est.predict(x_set)
    write_curves(args.out, DiscreteCurveSet(grid=est.y_grid_, values=preds), ids=ids)
    print(f"wrote {preds.shape[0]} predicted curves to {args.out}")
    return EXIT_OK


def cmd_interval(args) -> int:
    _require(args, "y_train", "x_train", "x_test", "out_dir")
    if not args.tau_lo <= args.tau_hi:
        raise InvalidInputError("--tau-lo must not exceed --tau-hi")
    y_set, _ = read_curves(args.y_train)
    x_set, _ = read_curves(args.x_train)
    x_test, ids = read_curves(args.x_test)
    if args.k_y is None or args.k_x is None or args.h is None:
        raise InvalidInputError("--k-y, --k-x and --h are required")
    bounds = {}
    for name, tau in (("q_lo", args.tau_lo), ("q_hi", args.tau_hi)):
        est = _fit_estimator(
            y_set, x_set, tau, args.qcov, args.k_y, args.k_x, args.h, args.order
        )
        bounds[name] = est.predict(x_test)
        grid = est.y_grid_
    os.makedirs(args.out_dir, exist_ok=True)
    for name in ("q_lo", "q_hi"):
        write_curves(
            os.path.join(args.out_dir, f"{name}.csv"),
            DiscreteCurveSet(grid=grid, values=bounds[name]),
            ids=ids,
        )
    crossing = float(np.mean(bounds["q_lo"] > bounds["q_hi"]))
    print(f"crossing_fraction={crossing!r}")
    return EXIT_OK


def cmd_forecast(args) -> int:
    _require(args, "series_file", "split", "out")
    series, _ = read_curves(args.series_file)
    n = series.n_curves
    if args.split < 3 or n < args.split + 1:
        raise InvalidInputError(
            f"need at least split+1 curves with split >= 3, got n={n}, split={args.split}"
        )
    if args.k_y is None or args.k_x is None or args.h is None:
        raise InvalidInputError("--k-y, --k-x and --h are required")
    if args.refit_every < 1:
        raise InvalidInputError("--refit-every must be positive")

    grid = series.grid
    rows = []
    models = None
    for step, target in enumerate(range(args.split, n)):
        if models is None or step % args.refit_every == 0:
            past = series.values[:target]
            x_tr = DiscreteCurveSet(grid=grid, values=past[:-1])
            y_tr = DiscreteCurveSet(grid=grid, values=past[1:])
            models = {
                tau: _fit_estimator(
                    y_tr, x_tr, tau, args.qcov, args.k_y, args.k_x, args.h, args.order
                )
                for tau in (args.tau, args.tau_lo, args.tau_hi)
            }
        last = DiscreteCurveSet(grid=grid, values=series.values[target - 1][None, :])
        point = models[args.tau].predict(last)[0]
        lo = models[args.tau_lo].predict(last)[0]
        hi = models[args.tau_hi].predict(last)[0]
        realized = series.values[target]
        crossing = float(np.mean(lo > hi))
        lo_s, hi_s = np.minimum(lo, hi), np.maximum(lo, hi)
        rows.append(
            (
                target,
                rmspe(realized[None, :], point[None, :], grid),
                cpd(realized, lo_s, hi_s, nominal=0.95),
                interval_score(realized, lo_s, hi_s, level=args.tau_lo * 2),
                crossing,
            )
        )
    _write_table(
        args.out,
        ["target_index", "rmspe", "cpd", "interval_score", "crossing_fraction"],
        rows,
    )
    print(f"wrote {len(rows)} forecast rows to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    _require(args, "out")
    rows = []
    if args.y_true and args.y_pred:
        y, _ = read_curves(args.y_true)
        pred, _ = read_curves(args.y_pred)
        if not np.array_equal(y.grid, pred.grid):
            raise InvalidInputError("y-true and y-pred grids differ")
        rows.append(("rmspe", rmspe(y, pred)))
    if args.y_true and args.q_lo and args.q_hi:
        y, _ = read_curves(args.y_true)
        lo, _ = read_curves(args.q_lo)
        hi, _ = read_curves(args.q_hi)
        if y.values.shape != lo.values.shape or y.values.shape != hi.values.shape:
            raise InvalidInputError("interval files do not match y-true")
        # Fitted bounds can cross pointwise; swap them for scoring and report
        # how often it happened (mirrors the forecast command).
        crossing = float(np.mean(lo.values > hi.values))
        lo_s = np.minimum(lo.values, hi.values)
        hi_s = np.maximum(lo.values, hi.values)
        cpds = [
            cpd(y.values[i], lo_s[i], hi_s[i], nominal=args.nominal)
            for i in range(y.n_curves)
        ]
        scores = [
            interval_score(y.values[i], lo_s[i], hi_s[i], level=args.level)
            for i in range(y.n_curves)
        ]
        rows.append(("cpd", float(np.mean(cpds))))
        rows.append(("interval_score", float(np.mean(scores))))
        rows.append(("crossing_fraction", crossing))
    if args.alpha_true and args.alpha_est:
        a_true, _ = read_curves(args.alpha_true)
        a_est, _ = read_curves(args.alpha_est)
        if not np.array_equal(a_true.grid, a_est.grid):
            raise InvalidInputError("alpha grids differ")
        rows.append(
            ("rrispee_alpha", rrispee(a_true.values[0], a_est.values[0], a_true.grid))
        )
    if args.beta_true and args.beta_est:
        v1, u1, b_true = read_surface(args.beta_true)
        v2, u2, b_est = read_surface(args.beta_est)
        if not (np.array_equal(v1, v2) and np.array_equal(u1, u2)):
            raise InvalidInputError("beta grids differ")
        rows.append(("rrispee_beta", rrispee_surface(b_true, b_est, v1, u1)))
    if not rows:
        raise InvalidInputError("no metric inputs supplied")
    _write_table(args.out, ["metric", "value"], rows)
    for name, value in rows:
        print(f"{name}={value!r}")
    return EXIT_OK


def cmd_bench(args) -> int:
    _require(args, "out")
    if args.reps < 1:
        raise InvalidInputError("--reps must be at least 1")
    rows = []
    for n in args.n_list:
        data = generate(DgpSpec(n=n, seed=args.seed))
        for method in args.qcov_list:
            for h in args.h_list:
                times = []
                for _ in range(args.reps):
                    est = FPQRRegression(
                        tau=args.tau,
                        n_components=h,
                        qcov_method=method,
                        n_basis_y=args.k,
                        n_basis_x=args.k,
                    )
                    start = time.perf_counter()
                    est.fit(data.x_noisy, data.y)
                    times.append(time.perf_counter() - start)
                rows.append((method, n, h, args.k, args.reps, float(np.median(times))))
    _write_table(
        args.out, ["method", "n", "h", "k", "reps", "median_seconds"], rows
    )
    print(f"wrote {len(rows)} timing rows to {args.out}")
    return EXIT_OK


def _derived_seed(*parts) -> int:
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


def _mc_task(task) -> tuple:
    (rep, n, tau, method, error_dist, gamma, n_test, grid_cfg, order, seed) = task
    train_seed = _derived_seed(seed, rep, n, 1)
    test_seed = _derived_seed(seed, rep, n, 2)
    cv_seed = _derived_seed(seed, rep, n, 3)
    try:
        train = generate(
            DgpSpec(n=n, seed=train_seed, error_dist=error_dist, gamma=gamma)
        )
        test = generate(
            DgpSpec(n=n_test, seed=test_seed, error_dist=error_dist, gamma=gamma)
        )
        spec = GridSpec(
            k_y_grid=grid_cfg[0],
            k_x_grid=grid_cfg[1],
            h_grid=grid_cfg[2],
            folds=grid_cfg[3],
            seed=cv_seed,
            bic_total_n=grid_cfg[4],
        )
        result = grid_search_cv(train.y, train.x_noisy, tau, method, spec, order)
        ky, kx, h = result.best
        est = FPQRRegression(
            tau=tau, n_components=h, qcov_method=method,
            n_basis_y=ky, n_basis_x=kx, basis_order=order,
        ).fit(train.x_noisy, train.y)
        alpha_hat = est.intercept_function()
        surface = est.coefficient_surface().evaluate(train.x_noisy.grid, train.y.grid)
        preds = est.predict(test.x_noisy)
        r_alpha = rrispee(train.alpha_true, alpha_hat, train.y.grid)
        r_beta = rrispee_surface(
            train.beta_true, surface, train.x_noisy.grid, train.y.grid
        )
        r_pred = rmspe(test.y.values, preds, test.y.grid)
        return (rep, n, tau, method, error_dist, ky, kx, h,
                r_alpha, r_beta, r_pred, "ok")
    except (InvalidInputError, NumericalError) as exc:
        return (rep, n, tau, method, error_dist, -1, -1, -1,
                float("nan"), float("nan"), float("nan"),
                f"failed: {type(exc).__name__}")


def cmd_mc(args) -> int:
    _require(args, "out")
    if args.reps < 1:
        raise InvalidInputError("--reps must be at least 1")
    grid_cfg = (args.ky_grid, args.kx_grid, args.h_grid, args.folds, args.bic_total_n)
    tasks = [
        (rep, n, tau, method, args.error_dist, args.gamma, args.n_test,
         grid_cfg, args.order, args.seed)
        for rep in range(args.reps)
        for n in args.n_list
        for tau in args.tau_list
        for method in args.qcov_list
    ]
    workers = max(1, args.workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_task, tasks, chunksize=1))
    else:
        results = [_mc_task(t) for t in tasks]
    header = ["rep", "n", "tau", "method", "error_dist", "k_y", "k_x", "h",
              "rrispee_alpha", "rrispee_beta", "rmspe", "status"]
    _write_table(args.out, header, results)
    n_fail = sum(1 for r in results if r[-1] != "ok")
    print(f"wrote {len(results)} rows to {args.out} ({n_fail} failures)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _load_config(path):
    with open(path, "r", encoding="utf-8") as handle:
        cfg = json.load(handle)
    if not isinstance(cfg, dict):
        raise InvalidInputError("config file must hold a JSON object")
    return cfg


def _apply_config(args, argv, command_parsers) -> None:
    """Fill in option values from the config file, explicit flags winning."""
    config = _load_config(args.config)
    explicit = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
    actions = {
        act.dest: act for act in command_parsers[args.command]._actions
    }
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest == "config":
            continue
        if dest not in actions:
            raise InvalidInputError(f"config file sets unknown option {key!r}")
        if "--" + dest.replace("_", "-") in explicit:
            continue
        act = actions[dest]
        if isinstance(value, str) and act.type not in (None, str):
            value = act.type(value)
        elif isinstance(value, list):
            value = tuple(value)
        setattr(args, dest, value)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, command_parsers = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code) if exc.code else EXIT_OK
        if getattr(args, "config", None):
            _apply_config(args, argv, command_parsers)
        return args.func(args)
    except InvalidInputError as exc:
        print(f"fpqr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"fpqr: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"fpqr: io error: {exc}", file=sys.stderr)
        return EXIT_IO


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
