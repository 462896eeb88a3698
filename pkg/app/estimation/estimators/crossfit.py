"""
Spatial cross-fitting for the doubly robust estimator.

Each fold fits the nuisances on a ball M of radius q and evaluates the
estimator on the points at distance >= r from all of M, so that under a
locally covariant process the two sets are independent.
"""

import logging
from dataclasses import dataclass

import numpy as np

from app.estimation.errors import CrossfitFailureError, DegenerateSplitError, InvalidArgumentError
from app.estimation.estimators.base import ShiftEstimate
from app.estimation.estimators.doubly_robust import estimate_dr_shift, fit_nuisances
from app.estimation.spatial_core import (SPLIT_ATTEMPTS, BlockSplit, block_radius_for_size,
                                         spatial_block_split)

logger = logging.getLogger(__name__)

WEIGHTINGS = ("equal", "size")


@dataclass(frozen=True)
class Fold:
    """A fold's block split, or the error that left it empty, and its learner stream."""

    index: int
    learner_rng: np.random.Generator
    split: BlockSplit = None
    error: DegenerateSplitError = None


def draw_folds(locations, q, r, folds, rng, max_attempts=SPLIT_ATTEMPTS):
    """One block split per fold, each from its own substream of `rng`."""
    drawn = []
    for index, fold_rng in enumerate(rng.spawn(folds)):
        split_rng, learner_rng = fold_rng.spawn(2)
        try:
            split = spatial_block_split(locations, q, r, split_rng, max_attempts)
        except DegenerateSplitError as e:
            logger.debug("Fold %d skipped: %s", index, e)
            drawn.append(Fold(index, learner_rng, error=e))
            continue
        drawn.append(Fold(index, learner_rng, split=split))
    return drawn


def spatial_crossfit(dataset, delta, r, q=None, folds=5, outcome_config=None, exposure_config=None,
                     rng=None, fraction=0.5, weighting="equal", allow_fallback=False,
                     max_attempts=SPLIT_ATTEMPTS):
    """
    Average doubly robust estimates over spatially separated folds.

    Args:
        dataset (Dataset): full sample
        delta (float): exposure shift
        r (float): dependence radius between fitting and evaluation sets
        q (float): ball radius; None picks the radius whose typical ball
            holds `fraction` of the sample
        folds (int): number of block splits
        outcome_config (LearnerConfig): outcome learner
        exposure_config (ExposureConfig): exposure model
        rng (numpy.random.Generator): seed source for splits and learners
        fraction (float): target share of the sample in M when q is None
        weighting (str): "equal" averages folds, "size" weights by |M^C|
        allow_fallback (bool): evaluate in-sample if every split is degenerate

    Returns:
        ShiftEstimate: cross-fitted estimate, se from the fold variances

    Raises:
        CrossfitFailureError: every fold had a degenerate split
    """
    if folds < 1:
        raise InvalidArgumentError("Cross-fitting needs at least one fold.")
    if weighting not in WEIGHTINGS:
        raise InvalidArgumentError(f"Fold weighting must be one of {', '.join(WEIGHTINGS)}.")
    rng = rng if rng is not None else np.random.default_rng(0)
    if q is None:
        q = block_radius_for_size(dataset.locations, fraction)

    estimates, sizes, last_error = [], [], None
    for fold in draw_folds(dataset.locations, q, r, folds, rng, max_attempts):
        if fold.split is None:
            last_error = fold.error
            continue
        nuisances = fit_nuisances(dataset.subset(fold.split.fit_indices), delta,
                                  outcome_config, exposure_config, fold.learner_rng)
        estimates.append(estimate_dr_shift(dataset.subset(fold.split.eval_indices), delta, nuisances))
        sizes.append(len(fold.split.eval_indices))

    if not estimates:
        if not allow_fallback:
            raise CrossfitFailureError(f"All {folds} cross-fitting folds were degenerate.") from last_error
        logger.warning("Every block split was degenerate; evaluating in-sample")
        nuisances = fit_nuisances(dataset, delta, outcome_config, exposure_config, rng)
        fallback = estimate_dr_shift(dataset, delta, nuisances, method="dml_crossfit")
        fallback.diagnostics["fallback"] = True
        return fallback

    weights = np.ones(len(estimates)) if weighting == "equal" else np.asarray(sizes, dtype=float)
    weights = weights / weights.sum()
    point = float(np.dot(weights, [e.point for e in estimates]))
    variance = float(np.dot(weights, [e.se ** 2 for e in estimates]))
    estimate = ShiftEstimate(
        delta=float(delta),
        point=point,
        method="dml_crossfit",
        diagnostics={
            "folds": len(estimates),
            "failed_folds": folds - len(estimates),
            "q": float(q),
            "r": float(r),
            "eval_sizes": sizes,
            "gamma": float(np.mean([e.diagnostics["gamma"] for e in estimates])),
        },
    )
    return estimate.with_se(np.sqrt(variance))
