"""
Nuisance learners: outcome regressions, exposure models and density ratios.
"""

from app.estimation.learners.exposure import (DensityRatio, ExposureConfig, ExposureModel,
                                              GaussianExposureModel, KernelExposureModel,
                                              fit_exposure_model, lambda_ratio)
from app.estimation.learners.forest import fit_forest
from app.estimation.learners.gaussian_process import GpSettings, fit_gp, fit_gp_plm
from app.estimation.learners.outcome import (OUTCOME_KINDS, CallableOutcome, LearnerConfig,
                                             OutcomeModel, constant_outcome, fit_outcome_model)
from app.estimation.learners.rbf import fit_rbf_smoother, penalized_least_squares

__all__ = [
    'DensityRatio', 'ExposureConfig', 'ExposureModel', 'GaussianExposureModel',
    'KernelExposureModel', 'fit_exposure_model', 'lambda_ratio', 'fit_forest',
    'GpSettings', 'fit_gp', 'fit_gp_plm', 'OUTCOME_KINDS', 'CallableOutcome',
    'LearnerConfig', 'OutcomeModel', 'constant_outcome', 'fit_outcome_model',
    'fit_rbf_smoother', 'penalized_least_squares',
]
