"""Function-on-function linear quantile regression estimator.

The estimator projects response and predictor curves onto B-spline bases,
moves to half-Gram coordinates, and extracts latent components one at a
time: each component direction is the leading eigenvector of ``Q @ Q.T``
where ``Q`` is a quantile-covariance matrix between the current (deflated)
coordinate matrices.  A quantile regression of the response coordinates on
the retained component scores then yields the coefficient matrix, which is
mapped back through the component weights and the inverse Gram roots to the
bivariate coefficient surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_matrix, check_tau
from .basis import (
    BSplineBasis,
    CoeffMatrix,
    DiscreteCurveSet,
    from_half_coords,
    smooth_curves,
    to_half_coords,
)
from .exceptions import (
    DegenerateComponentError,
    IllConditionedError,
    InvalidInputError,
)
from .linalg import sym_eigen
from .qcov import QcovMatrix, get_qcov
from .quantile import qreg_fit_multi

_DEGENERATE_TOL = 1e-12
_COND_LIMIT = 1e10


@dataclass(frozen=True)
class CoefficientSurface:
    """Bivariate coefficient surface held in tensor B-spline coordinates.

    ``coeffs[k, l]`` multiplies the k-th predictor basis function (in v) and
    the l-th response basis function (in u).
    """

    coeffs: np.ndarray
    x_basis: BSplineBasis
    y_basis: BSplineBasis

    def evaluate(self, v_points, u_points) -> np.ndarray:
        """Surface values on the rectangle ``v_points x u_points``."""
        bx = self.x_basis.design_matrix(v_points)
        by = self.y_basis.design_matrix(u_points)
        return bx @ self.coeffs @ by.T


def _centered(coords) -> np.ndarray:
    if isinstance(coords, CoeffMatrix):
        return coords.coords
    return as_matrix(coords, "coords", allow_1d=True)


def _extract_upto(lam: np.ndarray, pi: np.ndarray, tau: float, n_components: int, qcov):
    """Extract up to ``n_components`` components, stopping at degeneracy.

    Returns ``(T, P, D, Q, achieved)``; arrays hold ``achieved`` columns.
    """
    qcov_fn = get_qcov(qcov)
    lam_work = lam.copy()
    pi_work = pi.copy()
    n, k_x = pi.shape
    k_y = lam.shape[1]
    scores = np.zeros((n, n_components))
    weights = np.zeros((k_x, n_components))
    x_loadings = np.zeros((k_x, n_components))
    y_loadings = np.zeros((k_y, n_components))

    achieved = 0
    for h in range(n_components):
        q = qcov_fn(lam_work, pi_work, tau)
        entries = q.entries if isinstance(q, QcovMatrix) else np.asarray(q, dtype=np.float64)
        direction = sym_eigen(entries @ entries.T).vectors[:, 0]
        t = pi_work @ direction
        t_ss = float(t @ t)
        pi_ss = float(np.sum(pi_work * pi_work))
        if not t_ss > _DEGENERATE_TOL * pi_ss:
            break
        d = pi_work.T @ t / t_ss
        qy = lam_work.T @ t / t_ss
        scores[:, h] = t
        weights[:, h] = direction
        x_loadings[:, h] = d
        y_loadings[:, h] = qy
        lam_work -= np.outer(t, qy)
        pi_work -= np.outer(t, d)
        achieved = h + 1

    return (
        scores[:, :achieved],
        weights[:, :achieved],
        x_loadings[:, :achieved],
        y_loadings[:, :achieved],
        achieved,
    )


def extract_components(lambda_c, pi_c, tau: float, n_components: int, qcov_method="li"):
    """Latent component extraction with deflation.

    Parameters
    ----------
    lambda_c, pi_c : CoeffMatrix or ndarray
        Centered response / predictor coordinate matrices (``n x K_y``,
        ``n x K_x``).
    tau : float
        Quantile level in (0, 1).
    n_components : int
        Number of components; must not exceed ``K_x`` or the rank the data
        actually supports.
    qcov_method : str or callable
        One of ``"dodge"``, ``"choi"``, ``"li"`` or a callable with the same
        signature as the built-in estimators.

    Returns
    -------
    (T, P, D, Q) : tuple of ndarray
        Scores ``n x h``, weights ``K_x x h``, predictor loadings
        ``K_x x h`` and response loadings ``K_y x h``.
    """
    tau = check_tau(tau)
    lam = _centered(lambda_c)
    pi = _centered(pi_c)
    if lam.shape[0] != pi.shape[0]:
        raise InvalidInputError("response and predictor coordinate rows differ")
    n_components = int(n_components)
    if n_components < 1:
        raise InvalidInputError("n_components must be positive")
    if n_components > pi.shape[1]:
        raise InvalidInputError(
            f"n_components={n_components} exceeds predictor dimension {pi.shape[1]}"
        )
    if pi.shape[0] <= n_components:
        raise InvalidInputError("need more observations than components")
    T, P, D, Q, achieved = _extract_upto(lam, pi, tau, n_components, qcov_method)
    if achieved < n_components:
        raise DegenerateComponentError(
            f"data exhausted at component {achieved + 1} of {n_components}"
        )
    return T, P, D, Q


def _backmap(P: np.ndarray, D: np.ndarray, b_slopes: np.ndarray) -> np.ndarray:
    """Map component-space slopes back to predictor coordinates."""
    m = D.T @ P
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond >= _COND_LIMIT:
        raise IllConditionedError(
            f"loading/weight system has condition number {cond:.3e}"
        )
    return P @ np.linalg.solve(m, b_slopes)


def _coerce_curves(data, grid, name: str) -> DiscreteCurveSet:
    if isinstance(data, DiscreteCurveSet):
        return data
    values = as_matrix(data, name, allow_1d=False)
    if grid is None:
        grid = np.linspace(0.0, 1.0, values.shape[1])
    return DiscreteCurveSet(grid=np.asarray(grid, dtype=np.float64), values=values)


class FPQRRegression(RegressorMixin, BaseEstimator):
    """Functional partial quantile regression for curve-on-curve models.

    Predicts the ``tau``-level conditional quantile of a response curve from
    a predictor curve via latent components chosen to maximize quantile
    covariance.

    Parameters
    ----------
    tau : float, default 0.5
        Quantile level of interest.
    n_components : int, default 2
        Number of latent components to extract.
    qcov_method : {"dodge", "choi", "li"} or callable, default "li"
        Quantile-covariance estimator driving the component directions.
        "li" is by far the fastest, "choi" typically the most accurate at
        small samples.
    n_basis_y, n_basis_x : int, default 8
        Number of B-spline basis functions for response and predictor.
    basis_order : int, default 4
        Spline order for both bases (4 = cubic).

    Attributes
    ----------
    x_weights_ : ndarray of shape (K_x, h)
        Component direction vectors in predictor coordinates.
    x_loadings_, y_loadings_ : ndarray
        Deflation loadings for predictor and response coordinates.
    x_scores_ : ndarray of shape (n, h)
        Training component scores (mutually orthogonal).
    component_coef_ : ndarray of shape (h + 1, K_y)
        Quantile-regression coefficients of the response coordinates on the
        scores; row 0 holds intercepts.
    omega_ : ndarray of shape (K_x, K_y)
        Back-projected coordinate-space coefficient matrix.
    """

    def __init__(
        self,
        tau: float = 0.5,
        n_components: int = 2,
        qcov_method="li",
        n_basis_y: int = 8,
        n_basis_x: int = 8,
        basis_order: int = 4,
    ):
        self.tau = tau
        self.n_components = n_components
        self.qcov_method = qcov_method
        self.n_basis_y = n_basis_y
        self.n_basis_x = n_basis_x
        self.basis_order = basis_order

    def fit(self, X, y, x_grid=None, y_grid=None):
        """Fit from predictor curves ``X`` and response curves ``y``.

        ``X`` and ``y`` are ``n x J`` arrays of curve values on shared grids
        (or :class:`DiscreteCurveSet` objects carrying their grids).  Grids
        default to equispaced points on [0, 1].
        """
        tau = check_tau(self.tau)
        x_set = _coerce_curves(X, x_grid, "X")
        y_set = _coerce_curves(y, y_grid, "y")
        if x_set.n_curves != y_set.n_curves:
            raise InvalidInputError(
                f"X has {x_set.n_curves} curves but y has {y_set.n_curves}"
            )
        n = x_set.n_curves
        k_max = max(int(self.n_basis_x), int(self.n_basis_y))
        if n <= k_max:
            raise InvalidInputError(
                f"need more curves than basis functions: n={n}, max K={k_max}"
            )

        self.x_basis_ = BSplineBasis(x_set.domain, self.n_basis_x, self.basis_order)
        self.y_basis_ = BSplineBasis(y_set.domain, self.n_basis_y, self.basis_order)
        pi = to_half_coords(smooth_curves(x_set, self.x_basis_), self.x_basis_, center=True)
        lam = to_half_coords(smooth_curves(y_set, self.y_basis_), self.y_basis_, center=True)
        self.x_coord_means_ = pi.col_means
        self.y_coord_means_ = lam.col_means

        T, P, D, Q = extract_components(
            lam, pi, tau, self.n_components, self.qcov_method
        )
        sol = qreg_fit_multi(T, lam.coords, tau, intercept=True)
        self.x_scores_ = T
        self.x_weights_ = P
        self.x_loadings_ = D
        self.y_loadings_ = Q
        self.component_coef_ = sol.coefficients
        self.omega_ = _backmap(P, D, sol.coefficients[1:, :])
        self.x_grid_ = x_set.grid
        self.y_grid_ = y_set.grid
        self.n_iter_ = sol.iterations
        return self

    def _new_half_coords(self, X, x_grid) -> np.ndarray:
        check_is_fitted(self, "omega_")
        x_set = _coerce_curves(X, x_grid if x_grid is not None else self.x_grid_, "X")
        if x_set.grid.size != self.x_grid_.size or not np.array_equal(
            x_set.grid, self.x_grid_
        ):
            raise InvalidInputError("prediction grid differs from the training grid")
        raw = smooth_curves(x_set, self.x_basis_)
        return to_half_coords(raw, self.x_basis_, center=False).coords

    def predict(self, X, x_grid=None) -> np.ndarray:
        """Predicted tau-quantile curves on the training response grid."""
        delta = self._new_half_coords(X, x_grid)
        coords = (
            self.component_coef_[0]
            + self.y_coord_means_
            + (delta - self.x_coord_means_) @ self.omega_
        )
        return from_half_coords(coords, self.y_basis_, self.y_grid_)

    def transform(self, X, x_grid=None) -> np.ndarray:
        """Component scores for new predictor curves.

        Scores are produced by the same deflation recursion used during
        fitting, so transforming the training curves reproduces
        ``x_scores_`` exactly.
        """
        delta = self._new_half_coords(X, x_grid)
        work = delta - self.x_coord_means_
        h = self.x_weights_.shape[1]
        scores = np.zeros((work.shape[0], h))
        for a in range(h):
            t = work @ self.x_weights_[:, a]
            scores[:, a] = t
            work = work - np.outer(t, self.x_loadings_[:, a])
        return scores

    def coefficient_surface(self) -> CoefficientSurface:
        """The fitted bivariate coefficient surface."""
        check_is_fitted(self, "omega_")
        coeffs = self.x_basis_.gram_invsqrt @ self.omega_ @ self.y_basis_.gram_invsqrt
        return CoefficientSurface(coeffs=coeffs, x_basis=self.x_basis_, y_basis=self.y_basis_)

    def intercept_function(self, points=None) -> np.ndarray:
        """The fitted intercept curve, by default on the training grid."""
        check_is_fitted(self, "omega_")
        coords = (
            self.component_coef_[0]
            + self.y_coord_means_
            - self.x_coord_means_ @ self.omega_
        )
        pts = self.y_grid_ if points is None else points
        return from_half_coords(coords, self.y_basis_, pts)
