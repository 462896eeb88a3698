"""
Random-forest regression on scikit-learn's RandomForestRegressor.
"""

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import RandomForestRegressor

from app.estimation.errors import InvalidArgumentError
from app.estimation.learners.rbf import _as_inputs

logger = logging.getLogger(__name__)

FOREST_TREES = 500
FOREST_LEAF_MIN = 5


@dataclass(frozen=True)
class ForestModel:
    """Bagged regression trees; a model too small to split predicts the mean."""

    regressor: RandomForestRegressor = None
    constant: float = None

    def predict(self, inputs):
        inputs = _as_inputs(inputs)
        if self.regressor is None:
            return np.full(len(inputs), self.constant)
        return self.regressor.predict(inputs)


def fit_forest(inputs, targets, rng, trees=FOREST_TREES, leaf_min=FOREST_LEAF_MIN,
               max_features=1, n_jobs=1):
    """
    Fit a random forest with random feature subsetting at every split.

    When fewer than 2 * leaf_min targets are available no split is
    possible and the model is the sample mean.

    Args:
        inputs (ndarray): (n, d) features
        targets (ndarray): (n,) responses
        rng (numpy.random.Generator): source of the forest's seed
        trees (int): number of trees
        leaf_min (int): minimum samples per leaf
        max_features (int): features tried per split
        n_jobs (int): worker threads for tree building

    Returns:
        ForestModel: the fitted forest
    """
    inputs = _as_inputs(inputs)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (inputs.shape[0],):
        raise InvalidArgumentError("Targets must be a vector with one entry per input.")
    if trees < 1 or leaf_min < 1:
        raise InvalidArgumentError("Forests need at least one tree and leaf_min >= 1.")

    n = len(targets)
    if n < 2 * leaf_min:
        logger.debug("Forest with n=%d, leaf_min=%d cannot split; using the mean", n, leaf_min)
        return ForestModel(constant=float(targets.mean()))

    regressor = RandomForestRegressor(
        n_estimators=trees,
        min_samples_leaf=leaf_min,
        max_features=min(max_features, inputs.shape[1]),
        random_state=int(rng.integers(2 ** 31 - 1)),
        n_jobs=n_jobs,
    )
    regressor.fit(inputs, targets)
    return ForestModel(regressor=regressor)
