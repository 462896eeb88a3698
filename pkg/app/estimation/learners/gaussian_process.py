"""
Exact Gaussian-process regression with an isotropic exponential kernel.

Built on scikit-learn's GaussianProcessRegressor. The exponential kernel
is the Matern kernel with nu = 1/2. Targets are centred and scaled before
fitting so the prior mean is the sample mean of the targets.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from sklearn.exceptions import ConvergenceWarning
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import ConstantKernel, Matern, WhiteKernel

from app.estimation.errors import (CapacityExceededError, DegenerateDesignError,
                                   InvalidArgumentError, NumericalFailureError)
from app.estimation.learners.rbf import Standardizer, _as_columns, _as_inputs

logger = logging.getLogger(__name__)

GP_EXACT_CAP = 2000
MIN_ALPHA = 1e-10
LENGTH_SCALE_GRID = (0.05, 0.1, 0.2, 0.4, 0.8, 1.6)
NOISE_RATIO_GRID = (0.01, 0.1, 0.3, 1.0)
KERNELS = ("exponential",)


@dataclass(frozen=True)
class GpSettings:
    """
    Kernel hyperparameters and how to choose them.

    In `fixed` mode the values below are used as given, on the standardized
    input and target scales. In `ml` mode they are ignored and chosen by
    maximum marginal likelihood over a coarse grid, then refined with
    L-BFGS.
    """

    kernel: str = "exponential"
    hyperparameters: str = "ml"
    length_scale: float = 0.5
    signal_variance: float = 1.0
    noise_variance: float = 0.1
    cap: int = GP_EXACT_CAP

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise InvalidArgumentError(f"Unsupported GP kernel '{self.kernel}'.")
        if self.hyperparameters not in ("ml", "fixed"):
            raise InvalidArgumentError("GP hyperparameters must be 'ml' or 'fixed'.")
        if self.length_scale <= 0 or self.signal_variance <= 0 or self.noise_variance < 0:
            raise InvalidArgumentError("GP hyperparameters must be positive.")


@dataclass(frozen=True)
class GpSmoother:
    """Posterior-mean predictor of a fitted Gaussian process."""

    standardizer: Standardizer
    regressor: GaussianProcessRegressor
    offset: float
    scale: float

    def predict(self, inputs):
        z = self.standardizer.transform(_as_inputs(inputs, len(self.standardizer.center)))
        return self.offset + self.scale * self.regressor.predict(z)

    def covariance(self, inputs):
        """Marginal covariance of the targets at the training inputs, nugget included."""
        z = self.standardizer.transform(inputs)
        kernel = self.regressor.kernel_(z)
        kernel[np.diag_indices_from(kernel)] += self.regressor.alpha
        return self.scale ** 2 * kernel

    def refit(self, inputs, targets):
        """Condition on new targets at the same inputs, hyperparameters held fixed."""
        z = self.standardizer.transform(_as_inputs(inputs))
        offset = float(np.mean(targets))
        regressor = GaussianProcessRegressor(kernel=self.regressor.kernel_, alpha=self.regressor.alpha,
                                             optimizer=None, normalize_y=False, copy_X_train=False)
        regressor.fit(z, (np.asarray(targets, dtype=float) - offset) / self.scale)
        return GpSmoother(standardizer=self.standardizer, regressor=regressor,
                          offset=offset, scale=self.scale)


def _regressor(settings, alpha, optimizer):
    if settings.hyperparameters == "fixed":
        kernel = (ConstantKernel(settings.signal_variance, "fixed")
                  * Matern(length_scale=settings.length_scale, length_scale_bounds="fixed", nu=0.5))
    else:
        kernel = (ConstantKernel(1.0, (1e-3, 1e3))
                  * Matern(length_scale=settings.length_scale, length_scale_bounds=(1e-3, 1e2), nu=0.5)
                  + WhiteKernel(settings.noise_variance, (1e-6, 1e1)))
    return GaussianProcessRegressor(kernel=kernel, alpha=alpha, optimizer=optimizer,
                                    normalize_y=False, copy_X_train=False)


def _grid_start(z, targets):
    """Start values (length scale, signal, noise) from a coarse marginal-likelihood grid."""
    reference = _regressor(GpSettings(), MIN_ALPHA, None).fit(z, targets)
    best = None
    for length_scale in LENGTH_SCALE_GRID:
        for ratio in NOISE_RATIO_GRID:
            signal = 1.0 / (1.0 + ratio)
            theta = np.log([signal, length_scale, signal * ratio])
            score = reference.log_marginal_likelihood(theta)
            if best is None or score > best[0]:
                best = (score, length_scale, signal, signal * ratio)
    return best[1:]


def fit_gp(inputs, targets, settings=None, isotropic=True):
    """
    Fit an exact Gaussian process to (inputs, targets).

    Args:
        inputs (ndarray): (n, d) inputs
        targets (ndarray): (n,) responses
        settings (GpSettings): kernel and hyperparameter mode
        isotropic (bool): one input scale for every column

    Returns:
        GpSmoother: the posterior-mean predictor

    Raises:
        CapacityExceededError: n above the exact-solve cap
    """
    settings = settings or GpSettings()
    inputs = _as_inputs(inputs)
    targets = np.asarray(targets, dtype=float)
    n = inputs.shape[0]
    if targets.shape != (n,):
        raise InvalidArgumentError("Targets must be a vector with one entry per input.")
    if n > settings.cap:
        raise CapacityExceededError(
            f"Exact Gaussian process limited to {settings.cap} points, got {n}."
        )

    standardizer = Standardizer.fit(inputs, isotropic)
    z = standardizer.transform(inputs)
    offset = float(targets.mean())
    scale = float(targets.std()) or 1.0
    scaled = (targets - offset) / scale

    try:
        if settings.hyperparameters == "fixed":
            alpha = max(settings.noise_variance / scale ** 2, MIN_ALPHA)
            regressor = _regressor(settings, alpha, None).fit(z, scaled)
        else:
            length_scale, signal, noise = _grid_start(z, scaled)
            start = GpSettings(length_scale=length_scale, noise_variance=noise, cap=settings.cap)
            regressor = _regressor(start, MIN_ALPHA, "fmin_l_bfgs_b")
            regressor.kernel = regressor.kernel.clone_with_theta(np.log([signal, length_scale, noise]))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                regressor.fit(z, scaled)
    except (linalg.LinAlgError, np.linalg.LinAlgError) as e:
        raise NumericalFailureError(f"Gaussian process kernel system is singular: {e}") from e

    logger.debug("GP kernel: %s", regressor.kernel_)
    return GpSmoother(standardizer=standardizer, regressor=regressor, offset=offset, scale=scale)


@dataclass(frozen=True)
class GpPlmFit:
    """GLS coefficients of the linear columns with a GP spatial effect."""

    coef: np.ndarray
    covariance: np.ndarray
    smoother: GpSmoother


def fit_gp_plm(points, targets, linear, settings=None):
    """
    Partially linear model Y = a + L b + g(S) + e with g a Gaussian process.

    Kernel hyperparameters are chosen on the residuals of an ordinary
    least-squares fit of Y on [1, L]; b is then the GLS slope under that
    covariance.

    Args:
        points (ndarray): (n, 2) locations
        targets (ndarray): (n,) outcome
        linear (ndarray): (n,) or (n, p) linear columns, exposure first
        settings (GpSettings): kernel settings

    Returns:
        GpPlmFit: coefficients for [1, L], their GLS covariance and the
        spatial effect conditioned on the GLS residuals
    """
    points = _as_inputs(points)
    targets = np.asarray(targets, dtype=float)
    linear = _as_columns(linear, len(points))
    design = np.column_stack([np.ones(len(points)), linear])
    if np.any(linear.std(axis=0) == 0):
        raise DegenerateDesignError("A linear column has zero variance.")

    ols, *_ = np.linalg.lstsq(design, targets, rcond=None)
    smoother = fit_gp(points, targets - design @ ols, settings)
    cov = smoother.covariance(points)
    try:
        factor = linalg.cho_factor(cov, lower=True)
        whitened_design = linalg.cho_solve(factor, design)
        information = design.T @ whitened_design
        coef = linalg.solve(information, whitened_design.T @ targets, assume_a="pos")
        covariance = linalg.inv(information)
    except linalg.LinAlgError as e:
        raise NumericalFailureError(f"GLS system is singular: {e}") from e
    smoother = smoother.refit(points, targets - design @ coef)
    return GpPlmFit(coef=coef, covariance=covariance, smoother=smoother)

