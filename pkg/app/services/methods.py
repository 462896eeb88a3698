"""
Registry of named estimation methods.

Each method turns (dataset, delta, options, rng) into a ShiftEstimate.
Options come from a run configuration as strings or from JSON as typed
values and are coerced against the defaults of the learner settings.
"""

from dataclasses import dataclass, fields, replace

import numpy as np

from app.estimation.errors import ConfigError
from app.estimation.estimators import (estimate_dml, estimate_flexible_shift, estimate_gsem,
                                       estimate_ols, estimate_plm, estimate_rsr,
                                       estimate_spatial_plus, estimate_svc, spatial_crossfit)
from app.estimation.learners import ExposureConfig, LearnerConfig

LEARNER_KEYS = {f.name: f.default for f in fields(LearnerConfig) if f.name != "kind"}
EXPOSURE_KEYS = {f"exposure_{f.name}" if f.name in ("k", "penalty") else f.name: f.default
                 for f in fields(ExposureConfig)}
CROSSFIT_KEYS = {"r": 0.0, "q": None, "folds": 5, "fraction": 0.5, "weighting": "equal",
                 "allow_fallback": False}


def coerce(value, default):
    """Convert a configuration string to the type of `default`."""
    if not isinstance(value, str):
        return value
    text = value.strip()
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"Expected a boolean, got '{value}'.")
    if text.lower() == "none":
        return None
    try:
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError as e:
        raise ConfigError(f"Expected a number, got '{value}'.") from e
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


@dataclass(frozen=True)
class MethodDefinition:
    """
    A named estimator.

    Attributes:
        name (str): method label
        kind (str): default outcome learner kind
        groups (tuple): option groups the method accepts
        bootstrap (bool): whether row resamples can be refitted
        needs_positivity (bool): uses an exposure density model
        substitute (str): method to run when n exceeds the exact GP cap
    """

    name: str
    kind: str = "rbf_plm"
    groups: tuple = ("learner",)
    bootstrap: bool = True
    needs_positivity: bool = False
    substitute: str = None

    def allowed_keys(self):
        keys = {}
        if "learner" in self.groups:
            keys.update(LEARNER_KEYS)
            keys["kind"] = self.kind
        if "exposure" in self.groups:
            keys.update(EXPOSURE_KEYS)
        if "crossfit" in self.groups:
            keys.update(CROSSFIT_KEYS)
        return keys

    def parse_options(self, options):
        """Typed options merged over the defaults; unknown keys are errors."""
        allowed = self.allowed_keys()
        unknown = sorted(set(options or {}) - set(allowed))
        if unknown:
            raise ConfigError(f"Method '{self.name}' does not accept option(s): {', '.join(unknown)}.")
        parsed = dict(allowed)
        for key, value in (options or {}).items():
            parsed[key] = coerce(value, allowed[key])
        return parsed

    def learner_config(self, parsed):
        return LearnerConfig(**{key: parsed[key] for key in ("kind", *LEARNER_KEYS)})

    def exposure_config(self, parsed):
        values = {}
        for f in fields(ExposureConfig):
            key = f"exposure_{f.name}" if f.name in ("k", "penalty") else f.name
            values[f.name] = parsed[key]
        return ExposureConfig(**values)

    def run(self, dataset, delta, options=None, rng=None):
        """Estimate the shift effect on `dataset`."""
        parsed = self.parse_options(options)
        rng = rng if rng is not None else np.random.default_rng(0)
        try:
            return _RUNNERS[self.name](self, dataset, delta, parsed, rng)
        except TypeError as e:
            raise ConfigError(f"Invalid options for '{self.name}': {e}") from e


def _run_ols(definition, dataset, delta, parsed, rng):
    return estimate_ols(dataset, delta)


def _run_rsr(definition, dataset, delta, parsed, rng):
    return estimate_rsr(dataset, delta)


def _run_plm(definition, dataset, delta, parsed, rng):
    smoother = "gp" if definition.name == "plm_gp" else "rbf"
    return estimate_plm(dataset, delta, smoother, definition.learner_config(parsed))


def _run_gsem(definition, dataset, delta, parsed, rng):
    return estimate_gsem(dataset, delta, definition.learner_config(parsed))


def _run_spatial_plus(definition, dataset, delta, parsed, rng):
    return estimate_spatial_plus(dataset, delta, definition.learner_config(parsed))


def _run_svc(definition, dataset, delta, parsed, rng):
    return estimate_svc(dataset, delta, definition.learner_config(parsed))


def _run_flexible(definition, dataset, delta, parsed, rng):
    estimate = estimate_flexible_shift(dataset, delta, definition.learner_config(parsed), rng)
    return _relabel(estimate, definition.name)


def _run_dml(definition, dataset, delta, parsed, rng):
    return estimate_dml(dataset, delta, definition.learner_config(parsed),
                        definition.exposure_config(parsed), rng, method=definition.name)


def _run_crossfit(definition, dataset, delta, parsed, rng):
    return spatial_crossfit(
        dataset, delta, r=parsed["r"], q=parsed["q"], folds=parsed["folds"],
        outcome_config=definition.learner_config(parsed),
        exposure_config=definition.exposure_config(parsed),
        rng=rng, fraction=parsed["fraction"], weighting=parsed["weighting"],
        allow_fallback=parsed["allow_fallback"],
    )


def _relabel(estimate, name):
    if estimate.method == name:
        return estimate
    return replace(estimate, method=name)


_RUNNERS = {
    "ols": _run_ols,
    "rsr": _run_rsr,
    "plm_rbf": _run_plm,
    "plm_gp": _run_plm,
    "gsem": _run_gsem,
    "spatial_plus": _run_spatial_plus,
    "svc": _run_svc,
    "flex_rbf": _run_flexible,
    "flex_gp": _run_flexible,
    "flex_forest": _run_flexible,
    "dml_rbf": _run_dml,
    "dml_forest": _run_dml,
    "dml_crossfit": _run_crossfit,
}

METHODS = {
    definition.name: definition
    for definition in (
        MethodDefinition("ols", groups=()),
        MethodDefinition("rsr", groups=()),
        MethodDefinition("plm_rbf"),
        MethodDefinition("plm_gp", kind="gp_plm", bootstrap=False, substitute="plm_rbf"),
        MethodDefinition("gsem"),
        MethodDefinition("spatial_plus"),
        MethodDefinition("svc"),
        MethodDefinition("flex_rbf", kind="rbf_joint"),
        MethodDefinition("flex_gp", kind="gp_joint", bootstrap=False, substitute="flex_rbf"),
        MethodDefinition("flex_forest", kind="forest_joint"),
        MethodDefinition("dml_rbf", kind="rbf_joint", groups=("learner", "exposure"),
                         needs_positivity=True),
        MethodDefinition("dml_forest", kind="forest_joint", groups=("learner", "exposure"),
                         needs_positivity=True),
        MethodDefinition("dml_crossfit", kind="rbf_joint",
                         groups=("learner", "exposure", "crossfit"), needs_positivity=True),
    )
}
METHOD_NAMES = tuple(METHODS)


def get_method(name):
    """Look up a method by name."""
    if name not in METHODS:
        raise ConfigError(f"Unknown method '{name}'. Valid methods: {', '.join(METHOD_NAMES)}.")
    return METHODS[name]
