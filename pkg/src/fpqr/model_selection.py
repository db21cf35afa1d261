"""Grid search over basis sizes and component counts with k-fold CV.

Every grid cell ``(K_y, K_x, h)`` is scored by the mean, over folds, of an
information criterion computed on the held-out fold: the log of the
trapezoidal L2 norm of the pointwise summed check loss, plus
``(K_y + K_x + h) * ln(n)`` with ``n`` the fold size (a switch selects the
full sample size instead).  Cells that cannot be fitted receive ``+inf``
and are recorded with the reason, so the search always completes if any
cell is feasible.

The expensive stage (component extraction) is shared across the ``h`` axis:
components are extracted once per ``(K_y, K_x, fold)`` at the largest
requested ``h`` and truncated, which is exact because extraction is
sequential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_tau
from .basis import BSplineBasis, smooth_curves, to_half_coords
from .estimator import FPQRRegression, _backmap, _coerce_curves, _extract_upto
from .exceptions import (
    InvalidInputError,
    NoFeasibleModelError,
    NumericalError,
)
from .quantile import check_loss, qreg_fit_multi

_NORM_FLOOR = 1e-300


@dataclass(frozen=True)
class GridSpec:
    """Search grid and cross-validation controls."""

    k_y_grid: tuple = (4, 5, 8, 10, 20)
    k_x_grid: tuple = (4, 5, 8, 10, 20)
    h_grid: tuple = (1, 2, 3, 4, 5)
    folds: int = 5
    seed: int = 0
    bic_total_n: bool = False

    def __post_init__(self):
        for name, grid in (("k_y_grid", self.k_y_grid), ("k_x_grid", self.k_x_grid),
                           ("h_grid", self.h_grid)):
            vals = tuple(int(v) for v in grid)
            if not vals or any(v < 1 for v in vals):
                raise InvalidInputError(f"{name} must be a nonempty tuple of positive ints")
            object.__setattr__(self, name, vals)
        if self.folds < 2:
            raise InvalidInputError("folds must be at least 2")


@dataclass(frozen=True)
class CvResult:
    """Outcome of a grid search."""

    cells: list
    mean_bic: np.ndarray
    fold_bic: np.ndarray
    best: tuple
    failures: list = field(default_factory=list)

    def rows(self):
        """Iterate ``(K_y, K_x, h, mean_bic, fold bics...)`` tuples for CSV."""
        for cell, mean, per_fold in zip(self.cells, self.mean_bic, self.fold_bic):
            yield (*cell, float(mean), *[float(b) for b in per_fold])


def _bic_value(loss_curve: np.ndarray, grid: np.ndarray, omega: int, n: int) -> float:
    norm = math.sqrt(max(float(np.trapezoid(loss_curve**2, grid)), 0.0))
    return math.log(max(norm, _NORM_FLOOR)) + omega * math.log(n)


def bic(fit: FPQRRegression, y_test, x_test) -> float:
    """Information criterion of a fitted model on a held-out set.

    A zero residual norm is floored at 1e-300 rather than raised, so perfect
    fits produce a finite, strongly negative score.
    """
    y_set = _coerce_curves(y_test, None, "y_test")
    if not np.array_equal(y_set.grid, fit.y_grid_):
        raise InvalidInputError("y_test grid differs from the training response grid")
    preds = fit.predict(x_test)
    if preds.shape[0] != y_set.n_curves:
        raise InvalidInputError("y_test and x_test hold different numbers of curves")
    loss_curve = np.sum(check_loss(y_set.values - preds, fit.tau), axis=0)
    omega = int(fit.n_basis_y) + int(fit.n_basis_x) + int(fit.n_components)
    return _bic_value(loss_curve, y_set.grid, omega, y_set.n_curves)


def grid_search_cv(
    y,
    x,
    tau: float,
    qcov_method="li",
    spec: GridSpec | None = None,
    basis_order: int = 4,
) -> CvResult:
    """Exhaustive CV search over ``(K_y, K_x, h)`` cells.

    Folds are contiguous blocks of a seeded random permutation with sizes
    differing by at most one.  Returns the full score table and the best
    cell under the tie rule (smallest mean BIC, then smallest
    ``K_y + K_x + h``, then lexicographic).
    """
    tau = check_tau(tau)
    spec = spec or GridSpec()
    y_set = _coerce_curves(y, None, "y")
    x_set = _coerce_curves(x, None, "x")
    n = y_set.n_curves
    if x_set.n_curves != n:
        raise InvalidInputError("y and x hold different numbers of curves")
    if n < spec.folds:
        raise InvalidInputError(f"need at least as many curves as folds: n={n}")

    rng = np.random.default_rng(spec.seed)
    blocks = np.array_split(rng.permutation(n), spec.folds)

    # Shared per-K caches: bases, uncentered half-Gram coordinates on the
    # full data, and the linear map from response coordinates to grid values.
    y_cache = {}
    for k in sorted(set(spec.k_y_grid)):
        basis = BSplineBasis(y_set.domain, k, basis_order)
        coords = to_half_coords(smooth_curves(y_set, basis), basis, center=False).coords
        to_values = basis.gram_invsqrt @ basis.design_matrix(y_set.grid).T
        y_cache[k] = (coords, to_values)
    x_cache = {}
    for k in sorted(set(spec.k_x_grid)):
        basis = BSplineBasis(x_set.domain, k, basis_order)
        x_cache[k] = to_half_coords(smooth_curves(x_set, basis), basis, center=False).coords

    cells = [
        (ky, kx, h)
        for ky in spec.k_y_grid
        for kx in spec.k_x_grid
        for h in spec.h_grid
    ]
    index = {cell: i for i, cell in enumerate(cells)}
    fold_bic = np.full((len(cells), spec.folds), np.inf)
    failures = []

    h_max = max(spec.h_grid)
    for ky in spec.k_y_grid:
        y_coords, y_map = y_cache[ky]
        for kx in spec.k_x_grid:
            x_coords = x_cache[kx]
            for f, test_idx in enumerate(blocks):
                train_idx = np.concatenate([b for g, b in enumerate(blocks) if g != f])
                n_train = train_idx.size
                n_test = test_idx.size
                if n_train <= max(ky, kx):
                    for h in spec.h_grid:
                        failures.append(((ky, kx, h), f, "training fold smaller than basis"))
                    continue
                lam_mean = y_coords[train_idx].mean(axis=0)
                pi_mean = x_coords[train_idx].mean(axis=0)
                lam_tr = y_coords[train_idx] - lam_mean
                pi_tr = x_coords[train_idx] - pi_mean
                cap = min(h_max, kx, n_train - 1)
                try:
                    T, P, D, _, achieved = _extract_upto(lam_tr, pi_tr, tau, cap, qcov_method)
                except NumericalError as exc:
                    for h in spec.h_grid:
                        failures.append(((ky, kx, h), f, str(exc)))
                    continue
                pi_te_c = x_coords[test_idx] - pi_mean
                penalty_n = n if spec.bic_total_n else n_test
                for h in spec.h_grid:
                    cell = (ky, kx, h)
                    if h > kx:
                        failures.append((cell, f, "h exceeds K_x"))
                        continue
                    if h > achieved:
                        failures.append((cell, f, "degenerate component"))
                        continue
                    try:
                        sol = qreg_fit_multi(T[:, :h], lam_tr, tau, intercept=True)
                        omega_mat = _backmap(P[:, :h], D[:, :h], sol.coefficients[1:])
                    except (InvalidInputError, NumericalError) as exc:
                        failures.append((cell, f, str(exc)))
                        continue
                    coords_pred = sol.coefficients[0] + lam_mean + pi_te_c @ omega_mat
                    resid = y_set.values[test_idx] - coords_pred @ y_map
                    loss_curve = np.sum(check_loss(resid, tau), axis=0)
                    fold_bic[index[cell], f] = _bic_value(
                        loss_curve, y_set.grid, ky + kx + h, penalty_n
                    )

    mean_bic = fold_bic.mean(axis=1)
    feasible = np.isfinite(mean_bic)
    if not np.any(feasible):
        raise NoFeasibleModelError("no grid cell produced a finite score")
    best = min(
        (cell for i, cell in enumerate(cells) if feasible[i]),
        key=lambda c: (mean_bic[index[c]], sum(c), c),
    )
    return CvResult(
        cells=cells, mean_bic=mean_bic, fold_bic=fold_bic, best=best, failures=failures
    )
