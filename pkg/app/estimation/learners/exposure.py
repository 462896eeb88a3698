"""
Exposure models X = h(S) + e and the density ratio they induce.

The residuals e are treated as i.i.d., so the conditional density of X
given S is the residual density evaluated at x - h(s). The residual
density is a Gaussian kernel density estimate tabulated on a log-density
grid.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from app.estimation.errors import DegenerateExposureError, InvalidArgumentError
from app.estimation.learners.outcome import spatial_basis_size
from app.estimation.learners.rbf import fit_rbf_smoother

logger = logging.getLogger(__name__)

MIN_EXPOSURE_SAMPLE = 50
# density ratios are clipped to these bounds; beyond the tabulated residual
# grid the kernel density is held at its lowest grid value
CLIP_BOUNDS = (1e-2, 1e2)
DENSITY_GRID_SIZE = 2048
GRID_PADDING_SDS = 6.0


def silverman_bandwidth(residuals):
    """0.9 * min(sd, IQR / 1.34) * n^(-1/5)."""
    residuals = np.asarray(residuals, dtype=float)
    spread = min(np.std(residuals, ddof=1), stats.iqr(residuals) / 1.34)
    if spread <= 0:
        spread = np.std(residuals, ddof=1)
    return 0.9 * spread * len(residuals) ** (-0.2)


@dataclass(frozen=True)
class ExposureConfig:
    """
    Settings of the exposure model.

    Attributes:
        k (int): basis size of the spatial mean, None for the default rule
        penalty: "gcv" or a fixed relative penalty
        clip_low (float): lower bound on density ratios
        clip_high (float): upper bound on density ratios
        grid_size (int): points in the tabulated residual density
        min_residual_fraction (float): residual to total variance ratio below
            which the exposure has no usable variation
    """

    k: int = None
    penalty: object = "gcv"
    clip_low: float = CLIP_BOUNDS[0]
    clip_high: float = CLIP_BOUNDS[1]
    grid_size: int = DENSITY_GRID_SIZE
    min_residual_fraction: float = 1e-3

    def __post_init__(self):
        if not 0 < self.clip_low <= 1 <= self.clip_high:
            raise InvalidArgumentError("Clip bounds must satisfy 0 < low <= 1 <= high.")
        if self.grid_size < 16:
            raise InvalidArgumentError("The density grid needs at least 16 points.")


class ExposureModel(ABC):
    """
    Conditional exposure density f(x | s) = g(x - h(s)).

    Subclasses provide the mean h and the log residual density log g.
    """

    @abstractmethod
    def mean(self, points, covariates=None):
        pass

    @abstractmethod
    def log_residual_density(self, residuals, points=None):
        pass

    def log_density(self, x, points, covariates=None):
        residuals = np.asarray(x, dtype=float) - self.mean(points, covariates)
        return self.log_residual_density(residuals, points)


class KernelExposureModel(ExposureModel):
    """
    Smoothed spatial mean plus a tabulated residual kernel density.

    Attributes:
        smoother (RbfSmoother): fitted h, covariates as linear columns
        residuals (ndarray): centred in-sample residuals
        residual_sd (float): their standard deviation
        bandwidth (float): kernel bandwidth
        grid (ndarray): residual values the log density is tabulated on
        log_values (ndarray): log density on the grid
    """

    def __init__(self, smoother, residuals, bandwidth, grid, log_values, centering):
        self.smoother = smoother
        self.residuals = residuals
        self.residual_sd = float(np.std(residuals, ddof=1))
        self.bandwidth = bandwidth
        self.grid = grid
        self.log_values = log_values
        self.centering = centering

    def mean(self, points, covariates=None):
        return self.smoother.predict(points, covariates) + self.centering

    def log_residual_density(self, residuals, points=None):
        floor = self.log_floor
        return np.interp(residuals, self.grid, self.log_values, left=floor, right=floor)

    @property
    def log_floor(self):
        return float(self.log_values.min())

    def density_mass(self):
        """Integral of the tabulated density over its grid."""
        return float(integrate.trapezoid(np.exp(self.log_values), self.grid))


class GaussianExposureModel(ExposureModel):
    """
    Known Gaussian exposure model: X | S ~ N(mean(s), sd(s)^2).

    `sd` is a number or a function of the locations.
    """

    def __init__(self, mean_function, sd):
        self.mean_function = mean_function
        self.sd = sd

    def mean(self, points, covariates=None):
        return np.asarray(self.mean_function(points), dtype=float)

    def log_residual_density(self, residuals, points=None):
        sd = self.sd(points) if callable(self.sd) else self.sd
        return stats.norm.logpdf(residuals, scale=sd)


def fit_exposure_model(dataset, config=None):
    """
    Fit h by a penalized spatial smoother and the residual density by KDE.

    Raises:
        InvalidArgumentError: fewer than 50 units
        DegenerateExposureError: the exposure has (almost) no variation
            beyond its fitted spatial mean
    """
    config = config or ExposureConfig()
    n = dataset.n
    if n < MIN_EXPOSURE_SAMPLE:
        raise InvalidArgumentError(f"Exposure models need at least {MIN_EXPOSURE_SAMPLE} units.")

    smoother = fit_rbf_smoother(dataset.s, dataset.x, spatial_basis_size(n, config.k),
                                config.penalty, linear=dataset.covariates)
    raw = dataset.x - smoother.predict(dataset.s, dataset.covariates)
    centering = float(raw.mean())
    residuals = raw - centering

    total = float(np.var(dataset.x))
    if total == 0 or np.var(residuals) <= config.min_residual_fraction * total:
        raise DegenerateExposureError(
            "Exposure has no variation beyond its spatial mean; positivity fails."
        )

    bandwidth = silverman_bandwidth(residuals)
    sd = float(np.std(residuals, ddof=1))
    grid = np.linspace(residuals.min() - GRID_PADDING_SDS * sd,
                       residuals.max() + GRID_PADDING_SDS * sd, config.grid_size)
    kde = stats.gaussian_kde(residuals, bw_method=bandwidth / sd)
    log_values = kde.logpdf(grid)
    logger.debug("Exposure model: residual sd %.4f, bandwidth %.4f", sd, bandwidth)
    return KernelExposureModel(smoother, residuals, bandwidth, grid, log_values, centering)


class DensityRatio:
    """
    lambda(x, s) = f(x - delta | s) / f(x | s), clipped to [low, high].

    With delta = 0 the ratio is identically 1.
    """

    def __init__(self, model, delta, clip=CLIP_BOUNDS):
        self.model = model
        self.delta = float(delta)
        self.clip = clip

    def raw(self, x, points, covariates=None):
        x = np.asarray(x, dtype=float)
        if self.delta == 0:
            return np.ones(x.shape)
        residuals = x - self.model.mean(points, covariates)
        log_ratio = (self.model.log_residual_density(residuals - self.delta, points)
                     - self.model.log_residual_density(residuals, points))
        with np.errstate(over="ignore"):
            return np.exp(log_ratio)

    def __call__(self, x, points, covariates=None):
        return np.clip(self.raw(x, points, covariates), *self.clip)

    def clipped(self, x, points, covariates=None):
        """Mask of units whose ratio hit a clip bound."""
        raw = self.raw(x, points, covariates)
        return (raw <= self.clip[0]) | (raw >= self.clip[1])


def lambda_ratio(model, delta, config=None):
    config = config or ExposureConfig()
    return DensityRatio(model, delta, clip=(config.clip_low, config.clip_high))
