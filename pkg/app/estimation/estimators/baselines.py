"""
Spatial regression baselines with a constant exposure slope (or a
location-varying one for the SVC model). Each reports slope * delta.
"""

import logging

import numpy as np

from app.estimation.errors import DegenerateDesignError, DegenerateExposureError, InvalidArgumentError
from app.estimation.estimators.base import ShiftEstimate
from app.estimation.learners.gaussian_process import fit_gp_plm
from app.estimation.learners.outcome import LearnerConfig, spatial_basis_size
from app.estimation.learners.rbf import RadialBasis, fit_rbf_smoother, penalized_least_squares

logger = logging.getLogger(__name__)

MIN_RESIDUAL_FRACTION = 1e-8


def _columns(*parts):
    return np.column_stack([p for p in parts if p is not None])


def _require_variation(x):
    if np.var(x) == 0:
        raise DegenerateDesignError("Exposure has zero variance.")


def estimate_ols(dataset, delta, method="ols"):
    """
    Least-squares slope of Y on X (and covariates), times delta.

    Restricted spatial regression shares this point estimate and is reported
    under its own label with method="rsr".
    """
    if dataset.n < 3:
        raise InvalidArgumentError("OLS needs at least 3 units.")
    _require_variation(dataset.x)
    design = _columns(np.ones(dataset.n), dataset.x, dataset.covariates)
    coef, *_ = np.linalg.lstsq(design, dataset.y, rcond=None)
    residual = dataset.y - design @ coef
    dof = max(dataset.n - design.shape[1], 1)
    covariance = (residual @ residual / dof) * np.linalg.pinv(design.T @ design)
    slope = float(coef[1])
    estimate = ShiftEstimate(delta=float(delta), point=slope * delta, method=method,
                             diagnostics={"slope": slope})
    return estimate.with_se(abs(delta) * np.sqrt(covariance[1, 1]))


def estimate_rsr(dataset, delta):
    return estimate_ols(dataset, delta, method="rsr")


def estimate_plm(dataset, delta, smoother="rbf", config=None):
    """
    Partially linear model Y = a + b X + g(S) + e with g a penalized
    radial-basis smooth ("rbf") or a Gaussian process ("gp").

    The standard error is the analytic one: Bayesian for the penalized
    smooth, GLS for the Gaussian process.
    """
    config = config or LearnerConfig(kind="rbf_plm")
    _require_variation(dataset.x)
    linear = _columns(dataset.x, dataset.covariates)
    if smoother == "rbf":
        fit = fit_rbf_smoother(dataset.s, dataset.y, spatial_basis_size(dataset.n, config.k),
                               config.penalty, linear=linear)
        slope = float(fit.linear_coef[0])
        variance = float(fit.linear_covariance[0, 0])
        method = "plm_rbf"
    elif smoother == "gp":
        fit = fit_gp_plm(dataset.s, dataset.y, linear, config.gp_settings)
        slope = float(fit.coef[1])
        variance = float(fit.covariance[1, 1])
        method = "plm_gp"
    else:
        raise InvalidArgumentError(f"Unknown spatial smoother '{smoother}'.")
    estimate = ShiftEstimate(delta=float(delta), point=slope * delta, method=method,
                             diagnostics={"slope": slope})
    return estimate.with_se(abs(delta) * np.sqrt(max(variance, 0.0)))


def _spatial_residual(dataset, values, config):
    fit = fit_rbf_smoother(dataset.s, values, spatial_basis_size(dataset.n, config.k),
                           config.penalty, linear=dataset.covariates)
    return values - fit.predict(dataset.s, dataset.covariates)


def _residual_exposure(dataset, config):
    _require_variation(dataset.x)
    residual = _spatial_residual(dataset, dataset.x, config)
    if np.var(residual) <= MIN_RESIDUAL_FRACTION * np.var(dataset.x):
        raise DegenerateExposureError("Exposure has no variation left after removing its spatial smooth.")
    return residual


def estimate_gsem(dataset, delta, config=None):
    """Regress the spatial residuals of Y on the spatial residuals of X."""
    config = config or LearnerConfig(kind="rbf_plm")
    residual_x = _residual_exposure(dataset, config)
    residual_y = _spatial_residual(dataset, dataset.y, config)
    design = _columns(np.ones(dataset.n), residual_x)
    coef, *_ = np.linalg.lstsq(design, residual_y, rcond=None)
    slope = float(coef[1])
    return ShiftEstimate(delta=float(delta), point=slope * delta, method="gsem",
                         diagnostics={"slope": slope})


def estimate_spatial_plus(dataset, delta, config=None):
    """Partially linear model on the spatial residual of X."""
    config = config or LearnerConfig(kind="rbf_plm")
    residual_x = _residual_exposure(dataset, config)
    fit = fit_rbf_smoother(dataset.s, dataset.y, spatial_basis_size(dataset.n, config.k),
                           config.penalty, linear=_columns(residual_x, dataset.covariates))
    slope = float(fit.linear_coef[0])
    return ShiftEstimate(delta=float(delta), point=slope * delta, method="spatial_plus",
                         diagnostics={"slope": slope})


def estimate_svc(dataset, delta, config=None):
    """
    Spatially varying coefficients: Y = a(S) + b(S) X + e with a and b
    penalized smooths sharing one penalty. Reports mean_i b(S_i) * delta.
    """
    config = config or LearnerConfig(kind="rbf_plm")
    _require_variation(dataset.x)
    n = dataset.n
    k = max(2, min(spatial_basis_size(n, config.k), n // 4))
    basis = RadialBasis.build(dataset.s, k)
    affine = basis.affine(dataset.s)
    radial = basis.radial(dataset.s)
    x = dataset.x[:, None]
    blocks = [affine, radial, x * affine, x * radial]
    if dataset.covariates is not None:
        blocks.append(dataset.covariates)
    design = np.hstack(blocks)

    penalized = np.zeros(design.shape[1], dtype=bool)
    width = affine.shape[1] + k
    penalized[affine.shape[1]:width] = True
    penalized[width + affine.shape[1]:2 * width] = True

    fit = penalized_least_squares(design, dataset.y, penalized, config.penalty)
    slope_block = slice(width, 2 * width)
    slopes = np.hstack([affine, radial]) @ fit.coef[slope_block]
    gradient = np.hstack([affine, radial]).mean(axis=0)
    variance = float(fit.sigma2[0]) * gradient @ fit.covariance[slope_block, slope_block] @ gradient

    mean_slope = float(slopes.mean())
    estimate = ShiftEstimate(
        delta=float(delta),
        point=mean_slope * delta,
        method="svc",
        diagnostics={"slope": mean_slope, "slope_sd": float(slopes.std())},
    )
    return estimate.with_se(abs(delta) * np.sqrt(max(variance, 0.0)))
