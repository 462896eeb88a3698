"""
Outcome regressions m(x, s) = E[Y | X = x, S = s].

Every model is fitted once and then predicts at arbitrary exposures and
locations, which is what the shift estimators need: m at the observed
exposure and at the shifted one.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from app.estimation.errors import DegenerateDesignError, InvalidArgumentError
from app.estimation.learners.forest import FOREST_LEAF_MIN, FOREST_TREES, fit_forest
from app.estimation.learners.gaussian_process import (GP_EXACT_CAP, GpSettings, fit_gp,
                                                      fit_gp_plm)
from app.estimation.learners.rbf import fit_rbf_smoother

logger = logging.getLogger(__name__)

OUTCOME_KINDS = ("linear", "linear_interaction", "rbf_plm", "gp_plm",
                 "rbf_joint", "gp_joint", "forest_joint")
SPATIAL_BASIS_SIZE = 200


def spatial_basis_size(n, k=None):
    """Basis size for a smooth of location, at most half the sample."""
    return max(2, min(k or SPATIAL_BASIS_SIZE, n // 2))


def joint_basis_size(n, k=None):
    """Basis size for a joint smooth of exposure and location."""
    default = 500 if n <= 5000 else 1000
    return max(2, min(k or default, n // 2))


@dataclass(frozen=True)
class LearnerConfig:
    """
    Settings of an outcome learner.

    Attributes:
        kind (str): one of OUTCOME_KINDS
        k (int): basis size, None for the sample-size rule
        penalty: "gcv" or a fixed relative penalty
        hyperparameters (str): GP hyperparameter mode, "ml" or "fixed"
        length_scale (float): GP length scale in fixed mode
        noise_variance (float): GP noise variance in fixed mode
        gp_cap (int): largest exact GP
        trees (int): forest size
        leaf_min (int): forest minimum leaf size
        max_features (int): features tried per forest split
        smooth_features (bool): forest sees a fitted spatial smooth instead of raw locations
        n_jobs (int): forest worker threads
    """

    kind: str = "rbf_joint"
    k: int = None
    penalty: object = "gcv"
    kernel: str = "exponential"
    hyperparameters: str = "ml"
    length_scale: float = 0.5
    noise_variance: float = 0.1
    gp_cap: int = GP_EXACT_CAP
    trees: int = FOREST_TREES
    leaf_min: int = FOREST_LEAF_MIN
    max_features: int = 1
    smooth_features: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if self.kind not in OUTCOME_KINDS:
            raise InvalidArgumentError(
                f"Unknown outcome learner '{self.kind}'. Valid learners: {', '.join(OUTCOME_KINDS)}."
            )

    @property
    def gp_settings(self):
        return GpSettings(kernel=self.kernel, hyperparameters=self.hyperparameters,
                          length_scale=self.length_scale, noise_variance=self.noise_variance,
                          cap=self.gp_cap)


def _stack(*columns):
    present = [np.asarray(c, dtype=float).reshape(len(c), -1) for c in columns if c is not None]
    return np.hstack(present)


class OutcomeModel(ABC):
    """A fitted m(x, s); remembers the exposure range and domain it saw."""

    kind = None

    def __init__(self, x_range=None, bounds=None):
        self.x_range = x_range
        self.bounds = bounds

    @abstractmethod
    def predict(self, x, points, covariates=None):
        pass

    def outside_exposure_range(self, x):
        """Mask of exposures outside the training range."""
        x = np.asarray(x, dtype=float)
        if self.x_range is None:
            return np.zeros(x.shape, dtype=bool)
        return (x < self.x_range[0]) | (x > self.x_range[1])

    def outside_domain(self, points):
        """Mask of locations outside the training bounding box."""
        points = np.asarray(points, dtype=float)
        if self.bounds is None:
            return np.zeros(len(points), dtype=bool)
        low, high = self.bounds
        return np.any((points < low) | (points > high), axis=1)

    def remember_support(self, dataset):
        self.x_range = (float(dataset.x.min()), float(dataset.x.max()))
        self.bounds = (dataset.s.min(axis=0), dataset.s.max(axis=0))
        return self


class LinearOutcome(OutcomeModel):
    """Least squares on [1, x, covariates], optionally with x * s interactions."""

    def __init__(self, coef, interaction=False):
        super().__init__()
        self.coef = coef
        self.interaction = interaction
        self.kind = "linear_interaction" if interaction else "linear"

    @staticmethod
    def design(x, points, covariates, interaction):
        x = np.asarray(x, dtype=float)
        columns = [np.ones(len(x)), x]
        if interaction:
            columns += [points, x[:, None] * points]
        return _stack(*columns, covariates)

    def predict(self, x, points, covariates=None):
        return self.design(x, points, covariates, self.interaction) @ self.coef


class RbfPlmOutcome(OutcomeModel):
    kind = "rbf_plm"

    def __init__(self, smoother):
        super().__init__()
        self.smoother = smoother

    @property
    def slope(self):
        return float(self.smoother.linear_coef[0])

    def predict(self, x, points, covariates=None):
        return self.smoother.predict(points, _stack(x, covariates))


class GpPlmOutcome(OutcomeModel):
    kind = "gp_plm"

    def __init__(self, plm):
        super().__init__()
        self.plm = plm

    @property
    def slope(self):
        return float(self.plm.coef[1])

    def predict(self, x, points, covariates=None):
        linear = _stack(np.ones(len(x)), x, covariates)
        return linear @ self.plm.coef + self.plm.smoother.predict(points)


class JointOutcome(OutcomeModel):
    """A smoother or forest over the joint inputs (x, s, covariates)."""

    def __init__(self, kind, learner, feature_map=None):
        super().__init__()
        self.kind = kind
        self.learner = learner
        self.feature_map = feature_map

    def features(self, x, points, covariates=None):
        spatial = points if self.feature_map is None else self.feature_map(points)
        return _stack(x, spatial, covariates)

    def predict(self, x, points, covariates=None):
        return self.learner.predict(self.features(x, points, covariates))


class CallableOutcome(OutcomeModel):
    """Wraps a known function m(x, s); used for oracle and deliberately wrong models."""

    def __init__(self, function, kind="oracle"):
        super().__init__()
        self.function = function
        self.kind = kind

    def predict(self, x, points, covariates=None):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.function(x, points), dtype=float), x.shape).copy()


def constant_outcome(value):
    """m(x, s) = value everywhere."""
    return CallableOutcome(lambda x, points: np.full(len(x), float(value)), kind="constant")


def fit_outcome_model(dataset, config=None, rng=None):
    """
    Fit an outcome regression of the configured kind.

    Covariates enter linearly in the linear and partially linear kinds and
    as extra inputs in the joint kinds.

    Args:
        dataset (Dataset): training data
        config (LearnerConfig): learner settings
        rng (numpy.random.Generator): seed source for forests

    Returns:
        OutcomeModel: the fitted regression
    """
    config = config or LearnerConfig()
    x, s, y, covariates = dataset.x, dataset.s, dataset.y, dataset.covariates
    n = dataset.n
    kind = config.kind

    if kind in ("linear", "linear_interaction"):
        if np.var(x) == 0:
            raise DegenerateDesignError("Exposure has zero variance.")
        interaction = kind == "linear_interaction"
        design = LinearOutcome.design(x, s, covariates, interaction)
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        model = LinearOutcome(coef, interaction)
    elif kind == "rbf_plm":
        smoother = fit_rbf_smoother(s, y, spatial_basis_size(n, config.k), config.penalty,
                                    linear=_stack(x, covariates))
        model = RbfPlmOutcome(smoother)
    elif kind == "gp_plm":
        model = GpPlmOutcome(fit_gp_plm(s, y, _stack(x, covariates), config.gp_settings))
    elif kind == "rbf_joint":
        inputs = _stack(x, s, covariates)
        learner = fit_rbf_smoother(inputs, y, joint_basis_size(n, config.k), config.penalty,
                                   isotropic=False)
        model = JointOutcome(kind, learner)
    elif kind == "gp_joint":
        learner = fit_gp(_stack(x, s, covariates), y, config.gp_settings, isotropic=False)
        model = JointOutcome(kind, learner)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        feature_map = None
        if config.smooth_features:
            smoother = fit_rbf_smoother(s, y, spatial_basis_size(n, config.k), config.penalty,
                                        linear=_stack(x, covariates))
            feature_map = smoother.smooth_part
        model = JointOutcome(kind, None, feature_map)
        learner = fit_forest(model.features(x, s, covariates), y, rng, trees=config.trees,
                             leaf_min=config.leaf_min, max_features=config.max_features,
                             n_jobs=config.n_jobs)
        model.learner = learner

    logger.debug("Fitted %s outcome model on n=%d", kind, n)
    return model.remember_support(dataset)
