"""
Shift-effect estimators: spatial regression baselines, outcome-model
plug-ins, doubly robust forms and spatial cross-fitting.
"""

from app.estimation.estimators.base import NuisancePair, ShiftEstimate
from app.estimation.estimators.baselines import (estimate_gsem, estimate_ols, estimate_plm,
                                                 estimate_rsr, estimate_spatial_plus, estimate_svc)
from app.estimation.estimators.crossfit import draw_folds, spatial_crossfit
from app.estimation.estimators.doubly_robust import (estimate_dml, estimate_dr_plugin,
                                                     estimate_dr_shift, fit_nuisances,
                                                     if_variance, influence_values)
from app.estimation.estimators.flexible import estimate_flexible_shift

__all__ = [
    'NuisancePair', 'ShiftEstimate', 'estimate_gsem', 'estimate_ols', 'estimate_plm',
    'estimate_rsr', 'estimate_spatial_plus', 'estimate_svc', 'draw_folds', 'spatial_crossfit',
    'estimate_dml', 'estimate_dr_plugin', 'estimate_dr_shift', 'fit_nuisances',
    'if_variance', 'influence_values', 'estimate_flexible_shift',
]
