"""
Numerical core: spatial primitives, simulation scenarios, nuisance learners,
shift-effect estimators and inference. Nothing here imports Flask.
"""
