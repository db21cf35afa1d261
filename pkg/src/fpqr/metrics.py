"""Error metrics on discrete grids: trapezoidal L2 norms throughout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, as_vector, check_grid
from .basis import DiscreteCurveSet
from .exceptions import InvalidInputError, UndefinedMetricError


@dataclass(frozen=True)
class MetricReport:
    """A named metric value, as emitted by the evaluation command."""

    name: str
    value: float


def _trapz(values: np.ndarray, grid: np.ndarray) -> float:
    return float(np.trapezoid(values, grid))


def rrispee(true_vals, est_vals, grid) -> float:
    """Root relative integrated squared percentage error of a curve.

    ``100 * sqrt(||true - est||^2 / ||true||^2)`` with trapezoidal L2 norms
    on ``grid``.
    """
    t = as_vector(true_vals, "true_vals")
    e = as_vector(est_vals, "est_vals")
    g = check_grid(grid)
    if t.size != e.size or t.size != g.size:
        raise InvalidInputError("true_vals, est_vals and grid must have equal lengths")
    denom = _trapz(t * t, g)
    if denom <= 0.0:
        raise UndefinedMetricError("reference function has zero norm")
    num = _trapz((t - e) ** 2, g)
    return 100.0 * float(np.sqrt(num / denom))


def rrispee_surface(true_vals, est_vals, v_grid, u_grid) -> float:
    """RRISPEE for a bivariate surface sampled on ``v_grid x u_grid``."""
    t = as_matrix(true_vals, "true_vals")
    e = as_matrix(est_vals, "est_vals")
    vg = check_grid(v_grid, "v_grid")
    ug = check_grid(u_grid, "u_grid")
    if t.shape != e.shape or t.shape != (vg.size, ug.size):
        raise InvalidInputError("surface shapes must match the two grids")

    def norm2(m):
        inner = np.trapezoid(m, ug, axis=1)
        return float(np.trapezoid(inner, vg))

    denom = norm2(t * t)
    if denom <= 0.0:
        raise UndefinedMetricError("reference surface has zero norm")
    return 100.0 * float(np.sqrt(norm2((t - e) ** 2) / denom))


def rmspe(y_true, q_hat, grid=None) -> float:
    """Root mean squared percentage error between curves and predictions.

    Accepts two :class:`DiscreteCurveSet` objects or two ``n x J`` arrays
    plus a grid.  Squared residual and reference norms are pooled over all
    curves before the ratio is taken.
    """
    if isinstance(y_true, DiscreteCurveSet):
        grid = y_true.grid
        y = y_true.values
    else:
        y = as_matrix(y_true, "y_true", allow_1d=True)
    q = q_hat.values if isinstance(q_hat, DiscreteCurveSet) else np.asarray(q_hat, float)
    if q.ndim == 1:
        q = q[None, :]
    if grid is None:
        raise InvalidInputError("a grid is required when passing plain arrays")
    g = check_grid(grid)
    if y.shape != q.shape or y.shape[1] != g.size:
        raise InvalidInputError("y_true and q_hat shapes must match the grid")
    denom = float(np.sum(np.trapezoid(y * y, g, axis=1)))
    if denom <= 0.0:
        raise UndefinedMetricError("reference curves have zero norm")
    num = float(np.sum(np.trapezoid((y - q) ** 2, g, axis=1)))
    return 100.0 * float(np.sqrt(num / denom))


def cpd(y, q_lo, q_hi, nominal: float = 0.95) -> float:
    """Coverage probability deviance: nominal minus empirical coverage."""
    yv = as_vector(y, "y")
    lo = as_vector(q_lo, "q_lo")
    hi = as_vector(q_hi, "q_hi")
    if not yv.size == lo.size == hi.size:
        raise InvalidInputError("y, q_lo and q_hi must have equal lengths")
    if not 0.0 < nominal < 1.0:
        raise InvalidInputError("nominal coverage must lie in (0, 1)")
    covered = float(np.mean((lo <= yv) & (yv <= hi)))
    return nominal - covered


def interval_score(y, q_lo, q_hi, level: float = 0.05) -> float:
    """Mean interval score: width plus ``2/level``-scaled exceedance penalties.

    Requires ``q_lo <= q_hi`` pointwise; penalties apply only to strict
    exceedances, so an observation exactly on a bound is unpenalized.
    """
    yv = as_vector(y, "y")
    lo = as_vector(q_lo, "q_lo")
    hi = as_vector(q_hi, "q_hi")
    if not yv.size == lo.size == hi.size:
        raise InvalidInputError("y, q_lo and q_hi must have equal lengths")
    if not 0.0 < level < 1.0:
        raise InvalidInputError("level must lie in (0, 1)")
    crossed = np.flatnonzero(lo > hi)
    if crossed.size:
        raise InvalidInputError(f"interval bounds cross at index {int(crossed[0])}")
    width = hi - lo
    below = np.where(yv < lo, lo - yv, 0.0)
    above = np.where(yv > hi, yv - hi, 0.0)
    return float(np.mean(width + (2.0 / level) * (below + above)))
