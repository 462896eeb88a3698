"""
Doubly robust shift estimators.

Both forms combine an outcome model m(x, s) with the density ratio
lambda(x, s) = f(x - delta | s) / f(x | s). The default form solves the
estimating equation sum_i lambda_i (Y_i - m_i - gamma lambda_i) = 0 for a
fluctuation gamma, updates m to m + gamma * lambda and averages the updated
model at the shifted exposures. The plug-in form adds the weighted residual
mean to the outcome-model average directly. Both report the contrast with
the sample mean of Y.
"""

import logging

import numpy as np

from app.estimation.estimators.base import NuisancePair, ShiftEstimate
from app.estimation.learners.exposure import ExposureConfig, fit_exposure_model, lambda_ratio
from app.estimation.learners.outcome import LearnerConfig, fit_outcome_model

logger = logging.getLogger(__name__)


def fit_nuisances(dataset, delta, outcome_config=None, exposure_config=None, rng=None):
    """Fit the outcome model and the exposure density ratio on one dataset."""
    outcome_config = outcome_config or LearnerConfig(kind="rbf_joint")
    exposure_config = exposure_config or ExposureConfig()
    outcome = fit_outcome_model(dataset, outcome_config, rng)
    ratio = lambda_ratio(fit_exposure_model(dataset, exposure_config), delta, exposure_config)
    return NuisancePair(outcome=outcome, ratio=ratio)


def _evaluate(dataset, delta, nuisances):
    nuisances.check(delta)
    x, s, c = dataset.x, dataset.s, dataset.covariates
    shifted = x + delta
    return {
        "weight": nuisances.ratio(x, s, c),
        "weight_shifted": nuisances.ratio(shifted, s, c),
        "fitted": nuisances.outcome.predict(x, s, c),
        "fitted_shifted": nuisances.outcome.predict(shifted, s, c),
        "clipped": nuisances.ratio.clipped(x, s, c),
        "extrapolated": nuisances.outcome.outside_exposure_range(shifted),
    }


def _diagnostics(parts, gamma=None):
    weight = parts["weight"]
    diagnostics = {
        "ess": float(weight.sum() ** 2 / np.sum(weight ** 2)),
        "extrapolated": int(parts["extrapolated"].sum()),
        "clipped_fraction": float(parts["clipped"].mean()),
        "weight_degenerate": bool(parts["clipped"].all()),
    }
    if gamma is not None:
        diagnostics["gamma"] = float(gamma)
    if diagnostics["weight_degenerate"]:
        logger.warning("Every density ratio hit a clip bound; weights are degenerate")
    return diagnostics


def _influence(parts, y, mu_hat, contrast):
    psi = parts["weight"] * (y - parts["fitted"]) + parts["fitted_shifted"] - mu_hat
    if contrast:
        psi = psi - (y - y.mean())
    return psi


def influence_values(dataset, delta, nuisances, mu_hat, contrast=False):
    """
    psi_i = lambda_i (Y_i - m_i) + m(X_i + delta, S_i) - mu_hat, or its
    contrast version psi_i - (Y_i - mean(Y)).
    """
    return _influence(_evaluate(dataset, delta, nuisances), dataset.y, mu_hat, contrast)


def if_variance(dataset, delta, nuisances, mu_hat, contrast=False):
    """Empirical variance of the influence values divided by n."""
    psi = influence_values(dataset, delta, nuisances, mu_hat, contrast)
    return float(np.var(psi) / len(psi))


def estimate_dr_shift(dataset, delta, nuisances, method="dml"):
    """
    Estimating-equation form:
        gamma = sum lambda (Y - m) / sum lambda^2
        mu = mean[ m(X + delta, S) + gamma * lambda(X + delta, S) ]
        point = mu - mean(Y)
    """
    parts = _evaluate(dataset, delta, nuisances)
    weight = parts["weight"]
    residual = dataset.y - parts["fitted"]
    gamma = float(np.sum(weight * residual) / np.sum(weight ** 2))
    if delta == 0:
        mu_hat = float(dataset.y.mean())
        point = 0.0
    else:
        mu_hat = float(np.mean(parts["fitted_shifted"] + gamma * parts["weight_shifted"]))
        point = mu_hat - float(dataset.y.mean())
    estimate = ShiftEstimate(
        delta=float(delta),
        point=point,
        method=method,
        diagnostics={**_diagnostics(parts, gamma), "mu": mu_hat},
    )
    psi = _influence(parts, dataset.y, mu_hat, contrast=True)
    return estimate.with_se(np.sqrt(np.var(psi) / len(psi)))


def estimate_dr_plugin(dataset, delta, nuisances, method="dml_plugin"):
    """
    Plug-in form:
        mu = mean[ lambda (Y - m) + m(X + delta, S) ]
        point = mu - mean(Y)
    """
    parts = _evaluate(dataset, delta, nuisances)
    if delta == 0:
        mu_hat = float(dataset.y.mean())
        point = 0.0
    else:
        mu_hat = float(np.mean(parts["weight"] * (dataset.y - parts["fitted"]) + parts["fitted_shifted"]))
        point = mu_hat - float(dataset.y.mean())
    estimate = ShiftEstimate(delta=float(delta), point=point, method=method,
                             diagnostics={**_diagnostics(parts), "mu": mu_hat})
    psi = _influence(parts, dataset.y, mu_hat, contrast=True)
    return estimate.with_se(np.sqrt(np.var(psi) / len(psi)))


def estimate_dml(dataset, delta, outcome_config=None, exposure_config=None, rng=None, method="dml"):
    """Fit both nuisances in-sample and apply the estimating-equation form."""
    nuisances = fit_nuisances(dataset, delta, outcome_config, exposure_config, rng)
    return estimate_dr_shift(dataset, delta, nuisances, method=method)
