"""Monte Carlo data generator for curve-on-curve quantile regression.

Predictor curves are sums of ten damped sine/cosine harmonics with standard
normal amplitudes; response curves follow a linear functional model with a
known intercept curve and a known rank-one coefficient surface, plus
pointwise errors from a configurable distribution.  The integral of each
predictor against the coefficient surface is evaluated in closed form, so
generated responses are exact up to floating point.

Each curve draws from its own generator seeded by ``(seed, curve index)``;
outputs therefore do not depend on how curve generation is scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .basis import DiscreteCurveSet
from .exceptions import InvalidInputError

ERROR_DISTS = ("none", "normal", "t5", "chisq1", "contaminated")
_N_HARMONICS = 10
_OUTLIER_MEAN = 8.0
_SUPPORTED_GAMMAS = (0.05, 0.10)


def true_intercept(u) -> np.ndarray:
    """Intercept curve ``2 * exp(-(u - 1)^2)``."""
    u = np.asarray(u, dtype=np.float64)
    return 2.0 * np.exp(-((u - 1.0) ** 2))


def true_coef_surface(v, u) -> np.ndarray:
    """Coefficient surface ``4 * cos(2*pi*u) * sin(pi*v)`` on ``v x u``."""
    v = np.asarray(v, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    return 4.0 * np.outer(np.sin(np.pi * v), np.cos(2.0 * np.pi * u))


@dataclass(frozen=True)
class DgpSpec:
    """Configuration of one simulated dataset."""

    n: int
    seed: int = 0
    error_dist: str = "normal"
    gamma: float = 0.05
    predictor_noise: bool = True
    shared_error: bool = False
    response_points: int = 60
    predictor_points: int = 50

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError(f"n must be at least 1, got {self.n}")
        if self.seed < 0:
            raise InvalidInputError("seed must be nonnegative")
        if self.error_dist not in ERROR_DISTS:
            raise InvalidInputError(
                f"error_dist must be one of {ERROR_DISTS}, got {self.error_dist!r}"
            )
        if self.error_dist == "contaminated" and not any(
            math.isclose(self.gamma, g) for g in _SUPPORTED_GAMMAS
        ):
            raise InvalidInputError(
                f"contamination level must be one of {_SUPPORTED_GAMMAS}, got {self.gamma}"
            )
        if self.response_points < 4 or self.predictor_points < 4:
            raise InvalidInputError("grids need at least 4 points")

    @property
    def response_grid(self) -> np.ndarray:
        m = self.response_points
        return np.arange(1, m + 1) / m

    @property
    def predictor_grid(self) -> np.ndarray:
        m = self.predictor_points
        return np.arange(1, m + 1) / m


@dataclass(frozen=True)
class DgpOutput:
    """One simulated dataset plus the truth it was generated from."""

    y: DiscreteCurveSet
    x_clean: DiscreteCurveSet
    x_noisy: DiscreteCurveSet
    y_noiseless: DiscreteCurveSet
    alpha_true: np.ndarray
    beta_true: np.ndarray
    outlier_flags: np.ndarray


def _harmonic_integrals() -> np.ndarray:
    """Closed forms of ``int_0^1 sin(k pi v) sin(pi v) dv`` and the cosine
    analogue, stacked as a ``(2, 10)`` array (sine row first).

    The sine integrals vanish for ``k != 1`` by orthogonality and equal 1/2
    at ``k = 1``; the cosine integrals equal ``(1 + cos(k pi)) / (pi (1 -
    k^2))`` for ``k != 1`` and 0 at ``k = 1``.
    """
    k = np.arange(1, _N_HARMONICS + 1)
    sin_part = np.where(k == 1, 0.5, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos_part = (1.0 + np.cos(k * np.pi)) / (np.pi * (1.0 - k.astype(float) ** 2))
    cos_part[k == 1] = 0.0
    return np.vstack([sin_part, cos_part])


def sample_error(dist: str, rng: np.random.Generator, size=None):
    """Draw errors from one of the pointwise error distributions."""
    if dist == "none":
        return np.zeros(size if size is not None else ())
    if dist == "normal":
        return rng.standard_normal(size)
    if dist == "t5":
        return rng.standard_normal(size) / np.sqrt(rng.chisquare(5, size) / 5.0)
    if dist == "chisq1":
        return rng.standard_normal(size) ** 2
    raise InvalidInputError(
        f"sample_error handles pointwise distributions only, got {dist!r}"
    )


def generate(spec: DgpSpec) -> DgpOutput:
    """Generate one dataset according to ``spec``."""
    u = spec.response_grid
    v = spec.predictor_grid
    k = np.arange(1, _N_HARMONICS + 1)
    damp = 1.0 / k.astype(float) ** 2
    sin_kv = np.sqrt(2.0) * np.sin(np.pi * np.outer(k, v))  # 10 x J_x
    cos_kv = np.sqrt(2.0) * np.cos(np.pi * np.outer(k, v))
    integrals = np.sqrt(2.0) * _harmonic_integrals()  # harmonics carry sqrt(2)
    alpha_u = true_intercept(u)
    cos_u = 4.0 * np.cos(2.0 * np.pi * u)

    n, j_y, j_x = spec.n, u.size, v.size
    x_clean = np.zeros((n, j_x))
    x_noisy = np.zeros((n, j_x))
    y_clean = np.zeros((n, j_y))
    y_obs = np.zeros((n, j_y))
    outliers = np.zeros(n, dtype=bool)

    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence((spec.seed, i)))
        z1 = rng.standard_normal(_N_HARMONICS)
        z2 = rng.standard_normal(_N_HARMONICS)
        x_clean[i] = (damp * z1) @ sin_kv + (damp * z2) @ cos_kv
        factor = float(damp @ (z1 * integrals[0] + z2 * integrals[1]))
        y_clean[i] = alpha_u + factor * cos_u

        if spec.error_dist == "contaminated":
            outliers[i] = rng.random() < spec.gamma
            errs = rng.standard_normal(1 if spec.shared_error else j_y)
            if outliers[i]:
                errs = errs + _OUTLIER_MEAN
        else:
            errs = sample_error(spec.error_dist, rng, 1 if spec.shared_error else j_y)
        y_obs[i] = y_clean[i] + (errs if not spec.shared_error else errs[0])

        noise = rng.standard_normal(j_x) if spec.predictor_noise else 0.0
        x_noisy[i] = x_clean[i] + noise

    return DgpOutput(
        y=DiscreteCurveSet(grid=u, values=y_obs),
        x_clean=DiscreteCurveSet(grid=v, values=x_clean),
        x_noisy=DiscreteCurveSet(grid=v, values=x_noisy),
        y_noiseless=DiscreteCurveSet(grid=u, values=y_clean),
        alpha_true=alpha_u,
        beta_true=true_coef_surface(v, u),
        outlier_flags=outliers,
    )


def error_quantile(dist: str, tau: float, gamma: float = 0.05) -> float:
    """tau-quantile of the pointwise error distribution."""
    if not 0.0 < tau < 1.0:
        raise InvalidInputError("tau must lie in (0, 1)")
    if dist == "none":
        return 0.0
    if dist == "normal":
        return float(stats.norm.ppf(tau))
    if dist == "t5":
        return float(stats.t(5).ppf(tau))
    if dist == "chisq1":
        return float(stats.chi2(1).ppf(tau))
    if dist == "contaminated":
        def cdf(x):
            return (1.0 - gamma) * stats.norm.cdf(x) + gamma * stats.norm.cdf(
                x - _OUTLIER_MEAN
            ) - tau

        return float(optimize.brentq(cdf, -15.0, 25.0))
    raise InvalidInputError(f"unknown error distribution {dist!r}")


def true_quantile_curves(output: DgpOutput, spec: DgpSpec, tau: float) -> DiscreteCurveSet:
    """Exact tau-quantile response curves implied by the generating model."""
    shift = error_quantile(spec.error_dist, tau, spec.gamma)
    return DiscreteCurveSet(
        grid=output.y.grid, values=output.y_noiseless.values + shift
    )
