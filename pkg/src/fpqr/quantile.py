"""Check-loss (pinball) quantile regression for one or many response columns.

The solver is iteratively reweighted least squares on a smoothed check loss:
the kink ``|x|`` is replaced by ``sqrt(x**2 + eps**2)`` inside the IRLS
weights, with ``eps`` annealed from 1e-2 down to 1e-6 across outer stages.
A final vertex-polish step re-solves the fit through the observations with
the smallest residuals, which recovers the exact linear-programming optimum
whenever the active set is identified; the polished point is kept only when
it lowers the true check loss, so reported losses never regress.

Extreme quantile levels on small samples are statistically fragile: with
``n < 10 / min(tau, 1 - tau)`` the fitted quantile rests on a handful of
order statistics and callers should treat the output with caution.  The
solver itself runs regardless.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, as_vector, check_tau
from .exceptions import InvalidInputError, NumericalError
from .linalg import solve_ls

_EPS_STAGES = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
_MAX_ITER_PER_STAGE = 200
_COEF_TOL = 1e-8
_RIDGE = 1e-10
_POLISH_POOL_EXTRA = 6
_POLISH_MAX_SUBSETS = 500
_POLISH_ROUNDS = 6


def check_loss(residual, tau: float):
    """Pinball loss ``x * (tau - 1[x < 0])``, elementwise."""
    tau = check_tau(tau)
    r = np.asarray(residual, dtype=np.float64)
    out = np.where(r >= 0.0, tau * r, (tau - 1.0) * r)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QregSolution:
    """Fitted quantile-regression coefficients and fit diagnostics.

    ``coefficients`` has one column per response column; when an intercept
    was requested its row comes first.  ``achieved_loss`` is the true
    (unsmoothed) check loss per column.
    """

    coefficients: np.ndarray
    achieved_loss: np.ndarray
    iterations: int
    converged: bool

    @property
    def loss(self) -> float:
        return float(np.sum(self.achieved_loss))


def _irls_multi(X: np.ndarray, Y: np.ndarray, tau: float) -> tuple[np.ndarray, int, bool]:
    """Smoothed IRLS for all columns of Y against a shared design X.

    Columns are independent, so a column whose update falls below the
    convergence tolerance is frozen and dropped from the working set; the
    remaining columns keep iterating until the per-stage cap.
    """
    n, p = X.shape
    q = Y.shape[1]
    shift = 2.0 * (tau - 0.5) * (X.T @ np.ones(n))

    # Least-squares start; raises if the design is singular even with jitter.
    B = solve_ls(X, Y)

    total_iter = 0
    converged = True
    for eps in _EPS_STAGES:
        eps2 = eps * eps
        active = np.arange(q)
        Ya = Y
        Ba = B[:, active].copy()
        for _ in range(_MAX_ITER_PER_STAGE):
            if active.size == 0:
                break
            total_iter += 1
            R = Ya - X @ Ba
            W = 1.0 / np.sqrt(R * R + eps2)
            # Per-column weighted normal equations, solved as a batch:
            # A[j] = X' diag(W[:, j]) X via a broadcasted product.
            A = (X.T[None, :, :] * W.T[:, None, :]) @ X
            tr = np.trace(A, axis1=1, axis2=2)
            A += (_RIDGE * tr / p)[:, None, None] * np.eye(p)
            rhs = (X.T @ (W * Ya)).T + shift
            try:
                B_new = np.linalg.solve(A, rhs[:, :, None])[:, :, 0].T
            except np.linalg.LinAlgError as exc:
                bad = _first_singular_column(A)
                label = int(active[bad]) if bad >= 0 else "unknown"
                raise NumericalError(
                    f"quantile regression normal equations singular (column {label})"
                ) from exc
            if not np.all(np.isfinite(B_new)):
                bad = int(np.flatnonzero(~np.all(np.isfinite(B_new), axis=0))[0])
                raise NumericalError(
                    "quantile regression produced non-finite coefficients "
                    f"(column {active[bad]})"
                )
            done = np.max(np.abs(B_new - Ba), axis=0) < _COEF_TOL
            B[:, active] = B_new
            if np.all(done):
                active = active[:0]
                break
            if np.any(done):
                keep = ~done
                active = active[keep]
                Ya = Y[:, active]
                Ba = B_new[:, keep].copy()
            else:
                Ba = B_new
        if active.size:
            converged = False
    return B, total_iter, converged


def _first_singular_column(A: np.ndarray) -> int:
    for j in range(A.shape[0]):
        if abs(float(np.linalg.det(A[j]))) < np.finfo(np.float64).tiny:
            return j
    return -1


def _subset_pool(p: int, pool: int) -> np.ndarray | None:
    """Index combinations for the vertex polish, or None when too many."""
    from itertools import combinations
    from math import comb

    if comb(pool, p) > _POLISH_MAX_SUBSETS:
        return None
    return np.array(list(combinations(range(pool), p)), dtype=np.intp)


def _polish_columns(X: np.ndarray, Y: np.ndarray, tau: float, B: np.ndarray) -> np.ndarray:
    """Vertex polish: refit through subsets of the smallest-residual points.

    Quantile-regression optima lie on basic solutions interpolating p
    observations.  Near the IRLS solution the optimal basis sits among the
    few smallest residuals, so every p-subset of that pool is tried (in one
    batched solve) and the best is kept whenever it strictly lowers the true
    check loss; otherwise the column falls back to the single nearest-residual
    subset.  Accepted moves only ever decrease the reported loss.
    """
    n, p = X.shape
    if n < p:
        return B
    pool_size = min(n, p + _POLISH_POOL_EXTRA)
    combos = _subset_pool(p, pool_size)
    B = B.copy()
    for j in range(Y.shape[1]):
        y = Y[:, j]
        b = B[:, j]
        loss = float(np.sum(check_loss(y - X @ b, tau)))
        for _ in range(_POLISH_ROUNDS):
            r = y - X @ b
            order = np.argsort(np.abs(r), kind="stable")
            if combos is None:
                subsets = order[None, :p]
            else:
                subsets = order[:pool_size][combos]
            A = X[subsets]  # (m, p, p)
            with np.errstate(all="ignore"):
                dets = np.linalg.det(A)
            ok = np.abs(dets) > 1e-12
            if not np.any(ok):
                break
            with np.errstate(all="ignore"):
                cands = np.linalg.solve(A[ok], y[subsets[ok]][:, :, None])[:, :, 0]
            losses = np.sum(check_loss(y[None, :] - cands @ X.T, tau), axis=1)
            losses = np.where(np.isfinite(losses), losses, np.inf)
            best = int(np.argmin(losses))
            if losses[best] < loss:
                b, loss = cands[best], float(losses[best])
            else:
                break
        B[:, j] = b
    return B


def _prepare_design(design: np.ndarray, intercept: bool, n_resp: int) -> np.ndarray:
    X = as_matrix(design, "design")
    if intercept:
        X = np.hstack([np.ones((X.shape[0], 1)), X])
    n, p = X.shape
    if n != n_resp:
        raise InvalidInputError(f"design has {n} rows but response has {n_resp}")
    if n <= p:
        raise InvalidInputError(f"need more observations than parameters: n={n}, p={p}")
    return X


def qreg_fit(design, response, tau: float, intercept: bool = True) -> QregSolution:
    """Fit one quantile regression by minimizing the summed check loss.

    With ``intercept=True`` the first coefficient is the intercept.  The
    achieved loss matches the global optimum to solver accuracy; the
    coefficients themselves need not be unique when the optimum is flat.
    """
    tau = check_tau(tau)
    y = as_vector(response, "response")
    X = _prepare_design(design, intercept, y.size)
    B, iters, conv = _irls_multi(X, y[:, None], tau)
    B = _polish_columns(X, y[:, None], tau, B)
    loss = np.array([float(np.sum(check_loss(y - X @ B[:, 0], tau)))])
    return QregSolution(
        coefficients=B[:, 0], achieved_loss=loss, iterations=iters, converged=conv
    )


def qreg_fit_multi(design, responses, tau: float, intercept: bool = True) -> QregSolution:
    """Fit every column of ``responses`` against a shared design.

    The check loss separates across columns, so this equals column-by-column
    :func:`qreg_fit` but shares the design factorizations.
    """
    tau = check_tau(tau)
    Y = as_matrix(responses, "responses", allow_1d=True)
    X = _prepare_design(design, intercept, Y.shape[0])
    B, iters, conv = _irls_multi(X, Y, tau)
    B = _polish_columns(X, Y, tau, B)
    loss = np.sum(check_loss(Y - X @ B, tau), axis=0)
    return QregSolution(coefficients=B, achieved_loss=loss, iterations=iters, converged=conv)


def univariate_slopes(x_cols, y_cols, tau: float) -> np.ndarray:
    """Slopes of all single-predictor quantile regressions ``y_j ~ 1 + x_k``.

    Returns a ``K_x x K_y`` matrix of fitted slopes.  The pairs are laid out
    as columns of one flattened problem and iterated jointly; each IRLS step
    solves the 2x2 weighted normal equations in closed form, and converged
    pairs are frozen and dropped from the working set.
    """
    tau = check_tau(tau)
    x = as_matrix(x_cols, "x_cols", allow_1d=True)
    y = as_matrix(y_cols, "y_cols", allow_1d=True)
    n = x.shape[0]
    if y.shape[0] != n:
        raise InvalidInputError("x_cols and y_cols must have the same number of rows")
    if n < 3:
        raise InvalidInputError("pairwise quantile regression needs at least 3 rows")
    k_x, k_y = x.shape[1], y.shape[1]

    # Pair p = (k, j) lives at flat index k * k_y + j.
    xf = np.repeat(x, k_y, axis=1)
    yf = np.tile(y, (1, k_x))
    m = k_x * k_y
    shift = 2.0 * (tau - 0.5)
    sum_xf = np.sum(xf, axis=0)

    # Unweighted least-squares start.
    xc = xf - xf.mean(axis=0)
    yc = yf - yf.mean(axis=0)
    sxx = np.sum(xc * xc, axis=0)
    sxx = np.where(sxx > 0.0, sxx, 1.0)
    slope = np.sum(xc * yc, axis=0) / sxx
    icept = yf.mean(axis=0) - slope * xf.mean(axis=0)

    for eps in _EPS_STAGES:
        eps2 = eps * eps
        active = np.arange(m)
        Xa, Ya, sxa = xf, yf, sum_xf
        ia, sa = icept.copy(), slope.copy()
        for _ in range(_MAX_ITER_PER_STAGE):
            if active.size == 0:
                break
            R = Ya - ia - sa * Xa
            W = 1.0 / np.sqrt(R * R + eps2)
            WX = W * Xa
            s0 = np.sum(W, axis=0)
            s1 = np.sum(WX, axis=0)
            s2 = np.sum(WX * Xa, axis=0)
            r0 = np.sum(W * Ya, axis=0) + shift * n
            r1 = np.sum(WX * Ya, axis=0) + shift * sxa
            jit = _RIDGE * 0.5 * (s0 + s2)
            s0j = s0 + jit
            s2j = s2 + jit
            det = s0j * s2j - s1 * s1
            ia_new = (r0 * s2j - r1 * s1) / det
            sa_new = (s0j * r1 - s1 * r0) / det
            done = np.maximum(np.abs(ia_new - ia), np.abs(sa_new - sa)) < _COEF_TOL
            icept[active] = ia_new
            slope[active] = sa_new
            if np.all(done):
                break
            if np.any(done):
                keep = ~done
                active = active[keep]
                Xa = xf[:, active]
                Ya = yf[:, active]
                sxa = sum_xf[active]
                ia = ia_new[keep]
                sa = sa_new[keep]
            else:
                ia, sa = ia_new, sa_new
    if not np.all(np.isfinite(slope)):
        bad = int(np.flatnonzero(~np.isfinite(slope))[0])
        raise NumericalError(
            f"pairwise quantile regression failed for predictor {bad // k_y}, "
            f"response {bad % k_y}"
        )
    return slope.reshape(k_x, k_y)
