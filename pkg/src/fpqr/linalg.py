"""Small dense symmetric linear-algebra kernels.

Everything here targets the matrix sizes this package actually produces
(Gram matrices and quantile-covariance products, at most a few dozen rows),
so the eigensolver is a cyclic Jacobi iteration: simple, deterministic and
robustly orthogonal at these sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError, NotPSDError, NumericalError

_SYM_RTOL = 1e-12
_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigenDecomp:
    """Full spectrum of a symmetric matrix.

    ``values`` are sorted descending and ``vectors[:, k]`` is the unit
    eigenvector for ``values[k]``, with its largest-magnitude entry made
    nonnegative so repeated runs produce identical output.
    """

    values: np.ndarray
    vectors: np.ndarray


def _check_symmetric(a: np.ndarray, name: str = "a") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    scale = float(np.max(np.abs(a)))
    if float(np.max(np.abs(a - a.T))) > _SYM_RTOL * max(scale, 1.0):
        raise InvalidInputError(f"{name} is not symmetric within tolerance")
    return 0.5 * (a + a.T)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry of each eigenvector made nonnegative; ties
    # resolve to the lowest index via argmax.
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.where(vectors[idx, np.arange(vectors.shape[1])] < 0.0, -1.0, 1.0)
    return vectors * signs


def sym_eigen(a: np.ndarray) -> EigenDecomp:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Raises
    ------
    InvalidInputError
        If ``a`` is not symmetric or contains non-finite entries.
    NumericalError
        If the off-diagonal mass has not vanished after the sweep cap.
    """
    a = _check_symmetric(a)
    n = a.shape[0]
    if n == 1:
        return EigenDecomp(values=a[0].copy(), vectors=np.ones((1, 1)))

    work = a.copy()
    vecs = np.eye(n)
    off_mask = 1.0 - np.eye(n)
    fro = float(np.linalg.norm(a))
    tol = _JACOBI_TOL * max(fro, np.finfo(np.float64).tiny)
    # Rotations with pivots below this threshold cannot move the off-diagonal
    # norm past the tolerance, so they are skipped.
    skip = tol / (2.0 * n)

    converged = False
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = math.sqrt(float(np.sum((work * off_mask) ** 2)))
        if off <= tol:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                work[p, q] = 0.0
                work[q, p] = 0.0
                vcol_p = vecs[:, p].copy()
                vcol_q = vecs[:, q].copy()
                vecs[:, p] = c * vcol_p - s * vcol_q
                vecs[:, q] = s * vcol_p + c * vcol_q
    if not converged:
        off = math.sqrt(float(np.sum((work * off_mask) ** 2)))
        if off > tol:
            raise NumericalError(
                f"Jacobi iteration did not converge in {_JACOBI_MAX_SWEEPS} sweeps"
            )

    values = np.diag(work).copy()
    order = np.argsort(-values, kind="stable")
    return EigenDecomp(values=values[order], vectors=_fix_signs(vecs[:, order]))


def sym_sqrt_invsqrt(
    a: np.ndarray, floor: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric square root and inverse square root of an SPD matrix.

    Eigenvalues are clamped below at ``floor`` before taking roots; the
    default floor is ``1e-10`` times the largest eigenvalue, which only
    engages for degenerate inputs.  An eigenvalue below ``-floor`` raises
    :class:`NotPSDError`.
    """
    dec = sym_eigen(a)
    lam_max = float(dec.values[0])
    if floor is None:
        floor = 1e-10 * max(lam_max, np.finfo(np.float64).tiny)
    elif floor <= 0.0:
        raise InvalidInputError("floor must be positive")
    if float(dec.values[-1]) < -floor:
        raise NotPSDError(
            f"matrix has eigenvalue {dec.values[-1]:.3e} below -floor ({-floor:.3e})"
        )
    lam = np.maximum(dec.values, floor)
    v = dec.vectors
    root = (v * np.sqrt(lam)) @ v.T
    inv_root = (v / np.sqrt(lam)) @ v.T
    return 0.5 * (root + root.T), 0.5 * (inv_root + inv_root.T)


def solve_ls(design: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Columnwise least-squares solve of ``design @ B ~= targets``.

    Uses the normal equations; exact rank deficiency is resolved by a ridge
    jitter of ``1e-10 * trace(X'X) / p``.
    """
    design = np.asarray(design, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if design.size == 0 or targets.size == 0:
        raise InvalidInputError("empty design or targets")
    if design.ndim != 2:
        raise InvalidInputError("design must be 2-D")
    squeeze = targets.ndim == 1
    t2 = targets[:, None] if squeeze else targets
    n, p = design.shape
    if t2.shape[0] != n:
        raise InvalidInputError(f"design has {n} rows but targets has {t2.shape[0]}")
    if n < p:
        raise InvalidInputError(f"underdetermined system: {n} rows < {p} columns")
    gram = design.T @ design
    rhs = design.T @ t2
    try:
        coef = np.linalg.solve(gram, rhs)
        if not np.all(np.isfinite(coef)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        jitter = 1e-10 * float(np.trace(gram)) / p
        try:
            coef = np.linalg.solve(gram + jitter * np.eye(p), rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("least-squares system singular even after jitter") from exc
        if not np.all(np.isfinite(coef)):
            raise NumericalError("least-squares solve produced non-finite values")
    return coef[:, 0] if squeeze else coef
