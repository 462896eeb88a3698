"""
Penalized radial-basis regression.

A smoother is an unpenalized affine part in the standardized inputs plus k
polyharmonic basis functions centred on farthest-point samples of the data,
whose coefficients carry a ridge penalty chosen by generalized
cross-validation. Extra columns entering linearly (an exposure in a
partially linear model, covariates) join the unpenalized part.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from app.estimation.errors import InvalidArgumentError, NumericalFailureError

logger = logging.getLogger(__name__)

GCV_GRID_SIZE = 20
GCV_GRID_SPAN = (-9.0, 2.0)
JITTER = 1e-10


def radial_kernel(distance, dim):
    """r^2 log r in two dimensions, r^3 otherwise."""
    r = np.asarray(distance, dtype=float)
    if dim == 2:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(r > 0, r ** 2 * np.log(r), 0.0)
    return r ** 3


@dataclass(frozen=True)
class Standardizer:
    """Centre and scale inputs; isotropic scaling uses one scale for all columns."""

    center: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, inputs, isotropic):
        center = inputs.mean(axis=0)
        spread = inputs.std(axis=0)
        if isotropic:
            scale = np.full(inputs.shape[1], np.sqrt(np.mean(spread ** 2)))
        else:
            scale = spread
        scale = np.where(scale > 0, scale, 1.0)
        return cls(center=center, scale=scale)

    def transform(self, inputs):
        return (inputs - self.center) / self.scale


def farthest_point_centers(points, k):
    """
    Pick k rows by farthest-point sampling, starting from the row nearest
    the centroid.
    """
    chosen = np.empty(k, dtype=int)
    chosen[0] = int(np.argmin(np.sum((points - points.mean(axis=0)) ** 2, axis=1)))
    nearest = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for i in range(1, k):
        chosen[i] = int(np.argmax(nearest))
        nearest = np.minimum(nearest, np.sum((points - points[chosen[i]]) ** 2, axis=1))
    if len(np.unique(chosen)) < k:
        raise InvalidArgumentError(f"Only {len(np.unique(chosen))} distinct inputs for {k} centers.")
    return points[chosen]


@dataclass(frozen=True)
class RadialBasis:
    """Affine columns and radial columns for inputs of a fixed dimension."""

    standardizer: Standardizer
    centers: np.ndarray

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def size(self):
        return self.centers.shape[0]

    @classmethod
    def build(cls, inputs, k, isotropic=True):
        standardizer = Standardizer.fit(inputs, isotropic)
        z = standardizer.transform(inputs)
        return cls(standardizer=standardizer, centers=farthest_point_centers(z, k))

    def affine(self, inputs):
        z = self.standardizer.transform(inputs)
        return np.column_stack([np.ones(len(z)), z])

    def radial(self, inputs):
        z = self.standardizer.transform(inputs)
        return radial_kernel(cdist(z, self.centers), self.dim)


@dataclass(frozen=True)
class PenalizedFit:
    """
    Solution of a ridge-penalized least-squares problem.

    Attributes:
        coef (ndarray): coefficients, one column per target
        penalty (float): absolute ridge penalty used
        edf (float): effective degrees of freedom
        sigma2 (ndarray): residual variance per target
        covariance (ndarray): Bayesian covariance (G + penalty D)^-1 without sigma2
        gcv (float): GCV score at the chosen penalty
    """

    coef: np.ndarray
    penalty: float
    edf: float
    sigma2: np.ndarray
    covariance: np.ndarray
    gcv: float


def penalized_least_squares(design, targets, penalized, penalty="gcv"):
    """
    Minimise |y - Z b|^2 + penalty * |b_P|^2 over b, where P are the
    penalized columns.

    The problem is diagonalised once through the generalized eigenproblem
    D v = w G v with G = Z'Z, after which every candidate penalty costs a
    rescaling. With penalty="gcv" the penalty minimising
    n * RSS / (n - edf)^2 is picked from a log grid; a number is taken
    relative to the mean diagonal of G over the penalized columns.

    Args:
        design (ndarray): (n, p) design matrix Z
        targets (ndarray): (n,) or (n, t) responses
        penalized (ndarray): boolean mask of length p
        penalty: "gcv" or a non-negative relative penalty

    Returns:
        PenalizedFit: the solution

    Raises:
        NumericalFailureError: Z'Z is singular in its unpenalized directions
    """
    y = np.asarray(targets, dtype=float)
    single = y.ndim == 1
    y = y[:, None] if single else y
    n, p = design.shape
    penalized = np.asarray(penalized, dtype=bool)

    gram = design.T @ design
    scale = float(np.mean(np.diag(gram)[penalized])) if penalized.any() else 1.0
    gram = gram + JITTER * scale * np.eye(p)
    try:
        weights, vectors = linalg.eigh(np.diag(penalized.astype(float)), gram)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalFailureError(f"Penalized system could not be diagonalised: {e}") from e
    weights = np.clip(weights, 0.0, None)

    rotated = design @ vectors
    projections = rotated.T @ y

    def solve(lam):
        shrink = 1.0 / (1.0 + lam * weights)
        fitted = rotated @ (shrink[:, None] * projections)
        rss = np.sum((y - fitted) ** 2, axis=0)
        edf = float(shrink.sum())
        return shrink, rss, edf

    if penalty == "gcv":
        best = None
        for lam in scale * np.logspace(*GCV_GRID_SPAN, GCV_GRID_SIZE):
            shrink, rss, edf = solve(lam)
            score = n * float(rss.sum()) / max(n - edf, 1.0) ** 2
            if best is None or score < best[0]:
                best = (score, lam)
        lam = best[1]
    else:
        if float(penalty) < 0:
            raise InvalidArgumentError("Penalty must be non-negative.")
        lam = float(penalty) * scale

    shrink, rss, edf = solve(lam)
    gcv = n * float(rss.sum()) / max(n - edf, 1.0) ** 2
    coef = vectors @ (shrink[:, None] * projections)
    covariance = (vectors * shrink) @ vectors.T
    sigma2 = rss / max(n - edf, 1.0)
    if not np.all(np.isfinite(coef)):
        raise NumericalFailureError("Penalized least squares produced non-finite coefficients.")
    logger.debug("Penalty %.3e (edf %.1f, gcv %.4e)", lam, edf, gcv)
    return PenalizedFit(
        coef=coef[:, 0] if single else coef,
        penalty=lam,
        edf=edf,
        sigma2=sigma2,
        covariance=covariance,
        gcv=gcv,
    )


@dataclass(frozen=True)
class RbfSmoother:
    """
    Fitted penalized radial-basis smoother.

    Column order of the design is [1, z, linear columns, radial columns];
    `linear_coef` exposes the coefficients of the linear columns and
    `linear_covariance` their Bayesian covariance.
    """

    basis: RadialBasis
    fit: PenalizedFit
    n_linear: int

    @property
    def linear_slice(self):
        start = 1 + self.basis.dim
        return slice(start, start + self.n_linear)

    @property
    def linear_coef(self):
        return self.fit.coef[self.linear_slice]

    @property
    def linear_covariance(self):
        block = self.fit.covariance[self.linear_slice, self.linear_slice]
        return float(self.fit.sigma2[0]) * block

    def design(self, inputs, linear=None):
        inputs = _as_inputs(inputs, self.basis.dim)
        columns = [self.basis.affine(inputs)]
        if self.n_linear:
            linear = _as_columns(linear, len(inputs))
            if linear is None or linear.shape[1] != self.n_linear:
                raise InvalidArgumentError(f"Smoother expects {self.n_linear} linear column(s).")
            columns.append(linear)
        columns.append(self.basis.radial(inputs))
        return np.hstack(columns)

    def predict(self, inputs, linear=None):
        return self.design(inputs, linear) @ self.fit.coef

    def smooth_part(self, inputs):
        """The fitted function of the inputs alone, linear columns set to zero."""
        linear = np.zeros((len(_as_inputs(inputs, self.basis.dim)), self.n_linear)) if self.n_linear else None
        return self.predict(inputs, linear)


def _as_inputs(inputs, dim=None):
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs[:, None]
    if dim is not None and inputs.shape[1] != dim:
        raise InvalidArgumentError(f"Inputs must have {dim} column(s).")
    if not np.all(np.isfinite(inputs)):
        raise InvalidArgumentError("Inputs must be finite.")
    return inputs


def _as_columns(values, n):
    if values is None:
        return None
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != n:
        raise InvalidArgumentError("Linear columns must have one row per input.")
    return values


def fit_rbf_smoother(inputs, targets, k, penalty="gcv", linear=None, isotropic=True):
    """
    Fit a penalized radial-basis smoother.

    Args:
        inputs (ndarray): (n, d) inputs; spatial inputs use isotropic scaling
        targets (ndarray): (n,) responses
        k (int): number of basis centers, 2 <= k <= n
        penalty: "gcv" or a fixed relative penalty
        linear (ndarray): optional unpenalized columns entering linearly
        isotropic (bool): one scale for every input column

    Returns:
        RbfSmoother: the fitted smoother
    """
    inputs = _as_inputs(inputs)
    targets = np.asarray(targets, dtype=float)
    n = inputs.shape[0]
    if targets.shape != (n,):
        raise InvalidArgumentError("Targets must be a vector with one entry per input.")
    if not 2 <= k <= n:
        raise InvalidArgumentError(f"Basis size must satisfy 2 <= k <= n (k={k}, n={n}).")
    linear = _as_columns(linear, n)
    n_linear = 0 if linear is None else linear.shape[1]

    basis = RadialBasis.build(inputs, k, isotropic=isotropic)
    columns = [basis.affine(inputs)]
    if n_linear:
        columns.append(linear)
    columns.append(basis.radial(inputs))
    design = np.hstack(columns)
    penalized = np.zeros(design.shape[1], dtype=bool)
    penalized[-k:] = True

    fit = penalized_least_squares(design, targets, penalized, penalty)
    return RbfSmoother(basis=basis, fit=fit, n_linear=n_linear)
