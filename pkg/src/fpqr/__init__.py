"""Function-on-function linear quantile regression via partial quantile
regression components.

The central object is :class:`FPQRRegression`, a scikit-learn style
estimator mapping predictor curves to conditional-quantile response curves.
Supporting modules provide the B-spline machinery, the quantile-regression
solver, quantile-covariance estimators, model selection, a Monte Carlo data
generator, evaluation metrics, and a command-line interface.
"""

from .basis import (
    BSplineBasis,
    CoeffMatrix,
    DiscreteCurveSet,
    eval_basis,
    from_half_coords,
    make_basis,
    smooth_curves,
    to_half_coords,
)
from .estimator import CoefficientSurface, FPQRRegression, extract_components
from .exceptions import (
    DegenerateColumnError,
    DegenerateComponentError,
    IllConditionedError,
    InvalidInputError,
    NoFeasibleModelError,
    NotPSDError,
    NumericalError,
    UndefinedMetricError,
)
from .linalg import EigenDecomp, solve_ls, sym_eigen, sym_sqrt_invsqrt
from .metrics import MetricReport, cpd, interval_score, rmspe, rrispee, rrispee_surface
from .model_io import load_model, save_model
from .model_selection import CvResult, GridSpec, bic, grid_search_cv
from .qcov import QcovMatrix, qcov_choi, qcov_dodge, qcov_li
from .quantile import QregSolution, check_loss, qreg_fit, qreg_fit_multi
from .simulation import (
    DgpOutput,
    DgpSpec,
    generate,
    sample_error,
    true_coef_surface,
    true_intercept,
    true_quantile_curves,
)

__version__ = "0.1.0"

__all__ = [
    "BSplineBasis",
    "CoeffMatrix",
    "CoefficientSurface",
    "CvResult",
    "DegenerateColumnError",
    "DegenerateComponentError",
    "DgpOutput",
    "DgpSpec",
    "DiscreteCurveSet",
    "EigenDecomp",
    "FPQRRegression",
    "GridSpec",
    "IllConditionedError",
    "InvalidInputError",
    "MetricReport",
    "NoFeasibleModelError",
    "NotPSDError",
    "NumericalError",
    "QcovMatrix",
    "QregSolution",
    "UndefinedMetricError",
    "bic",
    "check_loss",
    "cpd",
    "eval_basis",
    "extract_components",
    "from_half_coords",
    "generate",
    "grid_search_cv",
    "interval_score",
    "load_model",
    "make_basis",
    "qcov_choi",
    "qcov_dodge",
    "qcov_li",
    "qreg_fit",
    "qreg_fit_multi",
    "rmspe",
    "rrispee",
    "rrispee_surface",
    "sample_error",
    "save_model",
    "smooth_curves",
    "solve_ls",
    "sym_eigen",
    "sym_sqrt_invsqrt",
    "to_half_coords",
    "true_coef_surface",
    "true_intercept",
    "true_quantile_curves",
]
