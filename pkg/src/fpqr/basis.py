"""B-spline bases, curve smoothing, and half-Gram coordinates.

Curves observed on a shared grid are smoothed onto a clamped B-spline basis
by ordinary least squares.  The raw basis coefficients are then mapped
through the symmetric square root of the basis Gram matrix; in these
"half-Gram" coordinates the Euclidean geometry of coefficient rows matches
the L2 geometry of the fitted curves, which is what lets a multivariate
procedure stand in for the functional one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from ._validation import as_matrix, check_grid
from .exceptions import InvalidInputError
from .linalg import solve_ls, sym_sqrt_invsqrt


@dataclass(frozen=True)
class DiscreteCurveSet:
    """``n`` curves sampled at the same strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = check_grid(self.grid)
        values = as_matrix(self.values, "values", allow_1d=False)
        if grid.size < 4:
            raise InvalidInputError("grid must contain at least 4 points")
        if values.shape[1] != grid.size:
            raise InvalidInputError(
                f"values has {values.shape[1]} columns but grid has {grid.size} points"
            )
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def n_curves(self) -> int:
        return self.values.shape[0]

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])


@dataclass(frozen=True)
class CoeffMatrix:
    """Per-curve half-Gram coordinate rows, optionally column-centered."""

    coords: np.ndarray
    col_means: np.ndarray
    centered: bool


class BSplineBasis:
    """Clamped B-spline basis with equally spaced interior knots.

    Parameters
    ----------
    domain : (float, float)
        Interval ``[a, b]`` the basis lives on.
    n_basis : int
        Number of basis functions ``K``; the knot vector gets ``K - order``
        equally spaced interior knots.
    order : int, default 4
        Spline order (degree + 1); 4 gives cubics.
    """

    def __init__(self, domain, n_basis: int, order: int = 4):
        a, b = float(domain[0]), float(domain[1])
        if not np.isfinite(a) or not np.isfinite(b) or a >= b:
            raise InvalidInputError(f"domain must be a nondegenerate interval, got ({a}, {b})")
        n_basis = int(n_basis)
        order = int(order)
        if order < 2:
            raise InvalidInputError(f"order must be at least 2, got {order}")
        if n_basis < order:
            raise InvalidInputError(f"n_basis must be >= order, got K={n_basis}, order={order}")
        self.domain = (a, b)
        self.n_basis = n_basis
        self.order = order
        interior = np.linspace(a, b, n_basis - order + 2)[1:-1]
        self.knots = np.concatenate([np.full(order, a), interior, np.full(order, b)])
        self.gram = self._compute_gram()
        self.gram_sqrt, self.gram_invsqrt = sym_sqrt_invsqrt(self.gram)

    def __repr__(self) -> str:
        return (
            f"BSplineBasis(domain=({self.domain[0]:g}, {self.domain[1]:g}), "
            f"n_basis={self.n_basis}, order={self.order})"
        )

    def design_matrix(self, points) -> np.ndarray:
        """Evaluate all basis functions at ``points``; rows sum to one.

        Points must lie inside the domain (endpoints included).
        """
        a, b = self.domain
        t = np.atleast_1d(np.asarray(points, dtype=np.float64)).ravel()
        if t.size == 0:
            raise InvalidInputError("points must be nonempty")
        slack = 1e-12 * (b - a)
        if np.any(t < a - slack) or np.any(t > b + slack):
            raise InvalidInputError("evaluation points fall outside the basis domain")
        t = np.clip(t, a, b)

        degree = self.order - 1
        knots = self.knots
        # Span index mu with knots[mu] <= t < knots[mu+1]; the right endpoint
        # maps to the last nonempty span.
        mu = np.searchsorted(knots, t, side="right") - 1
        mu = np.clip(mu, degree, self.n_basis - 1)

        npts = t.size
        vals = np.zeros((npts, degree + 1))
        vals[:, 0] = 1.0
        left = np.zeros((npts, degree + 1))
        right = np.zeros((npts, degree + 1))
        for j in range(1, degree + 1):
            left[:, j] = t - knots[mu + 1 - j]
            right[:, j] = knots[mu + j] - t
            saved = np.zeros(npts)
            for r in range(j):
                temp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
                vals[:, r] = saved + right[:, r + 1] * temp
                saved = left[:, j - r] * temp
            vals[:, j] = saved

        out = np.zeros((npts, self.n_basis))
        cols = mu[:, None] - degree + np.arange(degree + 1)[None, :]
        np.put_along_axis(out, cols, vals, axis=1)
        return out

    def _compute_gram(self) -> np.ndarray:
        # Gauss-Legendre with `order` nodes per knot span is exact for the
        # degree 2*(order-1) piecewise-polynomial integrand.
        nodes, weights = leggauss(self.order)
        breaks = np.unique(self.knots)
        gram = np.zeros((self.n_basis, self.n_basis))
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            x = half * nodes + mid
            w = half * weights
            design = self.design_matrix(x)
            gram += design.T @ (w[:, None] * design)
        return 0.5 * (gram + gram.T)


def make_basis(domain, n_basis: int, order: int = 4) -> BSplineBasis:
    """Construct a :class:`BSplineBasis`; thin functional alias."""
    return BSplineBasis(domain, n_basis, order)


def eval_basis(basis: BSplineBasis, points) -> np.ndarray:
    """Design matrix of ``basis`` at ``points`` (one row per point)."""
    return basis.design_matrix(points)


def smooth_curves(curves: DiscreteCurveSet, basis: BSplineBasis) -> np.ndarray:
    """Least-squares basis coefficients for every curve, as an n x K matrix."""
    J = curves.grid.size
    if J < basis.n_basis:
        raise InvalidInputError(
            f"smoothing is underdetermined: {J} grid points < {basis.n_basis} basis functions"
        )
    design = basis.design_matrix(curves.grid)
    return solve_ls(design, curves.values.T).T


def to_half_coords(raw, basis: BSplineBasis, center: bool = True) -> CoeffMatrix:
    """Map raw basis coefficients to half-Gram coordinates ``raw @ gram_sqrt``."""
    raw = as_matrix(raw, "raw", allow_1d=True)
    if raw.shape[1] != basis.n_basis:
        raise InvalidInputError(
            f"raw has {raw.shape[1]} columns but basis has {basis.n_basis} functions"
        )
    coords = raw @ basis.gram_sqrt
    if center:
        means = coords.mean(axis=0)
        return CoeffMatrix(coords=coords - means, col_means=means, centered=True)
    return CoeffMatrix(coords=coords, col_means=np.zeros(basis.n_basis), centered=False)


def from_half_coords(coords, basis: BSplineBasis, points) -> np.ndarray:
    """Curve values at ``points`` for half-Gram coordinate rows.

    Accepts a single K-vector or an ``m x K`` matrix; returns values with
    matching leading shape.
    """
    coords = np.asarray(coords, dtype=np.float64)
    single = coords.ndim == 1
    rows = coords[None, :] if single else coords
    if rows.shape[1] != basis.n_basis:
        raise InvalidInputError(
            f"coords has {rows.shape[1]} entries per row, expected {basis.n_basis}"
        )
    design = basis.design_matrix(points)
    values = rows @ basis.gram_invsqrt @ design.T
    return values[0] if single else values
