"""
Outcome-model shift estimator: average the difference between predictions
at the shifted and the observed exposures.
"""

import numpy as np

from app.estimation.estimators.base import ShiftEstimate
from app.estimation.learners.outcome import LearnerConfig, fit_outcome_model

FLEXIBLE_LEARNERS = {"rbf_joint": "flex_rbf", "gp_joint": "flex_gp", "forest_joint": "flex_forest"}


def estimate_flexible_shift(dataset, delta, config=None, rng=None, model=None):
    """
    mean_i [ m(X_i + delta, S_i) - m(X_i, S_i) ] for a fitted outcome model.

    Args:
        dataset (Dataset): data to fit on and average over
        delta (float): exposure shift
        config (LearnerConfig): outcome learner, a joint kind by default
        rng (numpy.random.Generator): seed source for forests
        model (OutcomeModel): an already fitted model, skipping the fit

    Returns:
        ShiftEstimate: the plug-in estimate
    """
    config = config or LearnerConfig(kind="rbf_joint")
    if model is None:
        model = fit_outcome_model(dataset, config, rng)
    shifted = dataset.x + delta
    observed = model.predict(dataset.x, dataset.s, dataset.covariates)
    counterfactual = model.predict(shifted, dataset.s, dataset.covariates)
    point = float(np.mean(counterfactual - observed))
    return ShiftEstimate(
        delta=float(delta),
        point=point,
        method=FLEXIBLE_LEARNERS.get(model.kind, f"flex_{model.kind}"),
        diagnostics={"extrapolated": int(model.outside_exposure_range(shifted).sum())},
    )
