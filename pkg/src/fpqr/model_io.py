"""Versioned JSON persistence for fitted models.

Floats are serialized through ``repr`` (the json module's default), which
round-trips IEEE doubles exactly, so a saved-and-reloaded model reproduces
predictions bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .basis import BSplineBasis
from .estimator import FPQRRegression
from .exceptions import InvalidInputError

FORMAT_VERSION = "fpqr-model/1"

_ARRAY_FIELDS = (
    "x_weights_",
    "x_loadings_",
    "y_loadings_",
    "component_coef_",
    "omega_",
    "x_coord_means_",
    "y_coord_means_",
)


def save_model(fit: FPQRRegression, path) -> None:
    """Write a fitted estimator to ``path`` as versioned JSON."""
    if not hasattr(fit, "omega_"):
        raise InvalidInputError("model must be fitted before saving")
    if callable(fit.qcov_method) and not isinstance(fit.qcov_method, str):
        raise InvalidInputError("models fitted with a callable qcov_method cannot be saved")
    doc = {
        "format": FORMAT_VERSION,
        "params": {
            "tau": float(fit.tau),
            "n_components": int(fit.n_components),
            "qcov_method": str(fit.qcov_method),
            "n_basis_y": int(fit.n_basis_y),
            "n_basis_x": int(fit.n_basis_x),
            "basis_order": int(fit.basis_order),
        },
        "x_grid": fit.x_grid_.tolist(),
        "y_grid": fit.y_grid_.tolist(),
        "x_knots": fit.x_basis_.knots.tolist(),
        "y_knots": fit.y_basis_.knots.tolist(),
        "arrays": {name: getattr(fit, name).tolist() for name in _ARRAY_FIELDS},
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=1)
        handle.write("\n")


def load_model(path) -> FPQRRegression:
    """Reconstruct a fitted estimator saved by :func:`save_model`."""
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    if doc.get("format") != FORMAT_VERSION:
        raise InvalidInputError(
            f"unsupported model format {doc.get('format')!r}; expected {FORMAT_VERSION}"
        )
    est = FPQRRegression(**doc["params"])
    est.x_grid_ = np.asarray(doc["x_grid"], dtype=np.float64)
    est.y_grid_ = np.asarray(doc["y_grid"], dtype=np.float64)
    est.x_basis_ = BSplineBasis(
        (est.x_grid_[0], est.x_grid_[-1]), est.n_basis_x, est.basis_order
    )
    est.y_basis_ = BSplineBasis(
        (est.y_grid_[0], est.y_grid_[-1]), est.n_basis_y, est.basis_order
    )
    for name in _ARRAY_FIELDS:
        setattr(est, name, np.asarray(doc["arrays"][name], dtype=np.float64))
    return est
