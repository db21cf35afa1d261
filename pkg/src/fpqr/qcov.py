"""Quantile-covariance estimators between coefficient matrices.

All three estimators measure tau-level association between the columns of a
response coordinate matrix (``n x K_y``) and a predictor coordinate matrix
(``n x K_x``), and all return a ``K_x x K_y`` matrix with predictor
coordinates as rows, so that the product ``Q @ Q.T`` lives in predictor
space where components are extracted.

* ``dodge`` - slope of the quantile regression of each response column on
  each predictor column, scaled by the predictor variance.  One univariate
  fit per pair.
* ``choi`` - geometric mean of the two directed quantile-regression slopes
  for each pair, carrying the sign of the predictor-on-response slope and
  scaled by both standard deviations.  Two fits per pair.
* ``li`` - indicator-based construction: residual signs of each response
  column about its tau quantile are correlated with the standardized
  predictor columns.  No regression fits at all, hence much faster.

Inputs are expected to be column-centered (the component extraction always
passes centered matrices); the estimators do not enforce centering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, check_tau
from .basis import CoeffMatrix
from .exceptions import DegenerateColumnError, InvalidInputError
from .quantile import univariate_slopes

_METHODS = ("dodge", "choi", "li")


@dataclass(frozen=True)
class QcovMatrix:
    """A ``K_x x K_y`` quantile-covariance matrix with its provenance."""

    entries: np.ndarray
    method: str
    tau: float


def _coords(x, name: str) -> np.ndarray:
    if isinstance(x, CoeffMatrix):
        return x.coords
    return as_matrix(x, name, allow_1d=True)


def qcov_li(lambda_c, pi_c, tau: float) -> QcovMatrix:
    """Indicator-based quantile covariance (fast, covariance-like)."""
    tau = check_tau(tau)
    lam = _coords(lambda_c, "lambda_c")
    pi = _coords(pi_c, "pi_c")
    if lam.shape[0] != pi.shape[0]:
        raise InvalidInputError("lambda_c and pi_c must have the same number of rows")
    q = np.quantile(lam, tau, axis=0)  # linear-interpolation sample quantile
    gamma = tau - (lam - q < 0.0).astype(np.float64)
    sd = np.std(pi, axis=0, ddof=1)
    zero = np.flatnonzero(sd <= 0.0)
    if zero.size:
        raise DegenerateColumnError(f"predictor column {int(zero[0])} has zero variance")
    pi_std = (pi - pi.mean(axis=0)) / sd
    entries = (pi_std.T @ gamma) / pi.shape[1]
    return QcovMatrix(entries=entries, method="li", tau=tau)


def qcov_choi(lambda_c, pi_c, tau: float) -> QcovMatrix:
    """Two-directional regression quantile covariance."""
    tau = check_tau(tau)
    lam = _coords(lambda_c, "lambda_c")
    pi = _coords(pi_c, "pi_c")
    slopes_resp = univariate_slopes(pi, lam, tau)  # response-on-predictor, K_x x K_y
    slopes_pred = univariate_slopes(lam, pi, tau).T  # predictor-on-response, K_x x K_y
    var_pi = np.var(pi, axis=0, ddof=1)
    var_lam = np.var(lam, axis=0, ddof=1)
    # Opposite-signed slopes give a negative radicand in finite samples;
    # clamp to zero, keeping the predictor-on-response sign.
    magnitude = np.sqrt(np.maximum(slopes_pred * slopes_resp, 0.0))
    entries = np.sign(slopes_pred) * magnitude * np.sqrt(np.outer(var_pi, var_lam))
    return QcovMatrix(entries=entries, method="choi", tau=tau)


def qcov_dodge(lambda_c, pi_c, tau: float) -> QcovMatrix:
    """One-directional regression quantile covariance."""
    tau = check_tau(tau)
    lam = _coords(lambda_c, "lambda_c")
    pi = _coords(pi_c, "pi_c")
    slopes = univariate_slopes(pi, lam, tau)
    entries = slopes * np.var(pi, axis=0, ddof=1)[:, None]
    return QcovMatrix(entries=entries, method="dodge", tau=tau)


def get_qcov(method) -> callable:
    """Resolve a method name (or pass through a callable) to an estimator."""
    if callable(method):
        return method
    if method in _METHODS:
        return {"dodge": qcov_dodge, "choi": qcov_choi, "li": qcov_li}[method]
    raise ValueError(f"unknown quantile-covariance method {method!r}; choose from {_METHODS}")
