"""
Simulation run configuration.

A run is described by an INI file:

    [run]
    scenarios = linear, simple
    sample_sizes = 1000, 10000
    replicates = 500, 250
    methods = rsr, plm_rbf, dml_rbf
    delta = 1
    master_seed = 2024
    bootstrap = 120

    [crossfit]
    r = 0.1
    folds = 5

    [method.plm_rbf]
    k = 200

    [scenario.simple]
    field_radius = 0.1
    field_sd = 1

or by the equivalent JSON mapping with keys run, crossfit, methods and
scenario_params.
"""

import configparser
import math
from dataclasses import asdict, dataclass, field

from app.estimation.dgp import SCENARIOS, TRUTH_MODES, ScenarioSpec
from app.estimation.errors import ConfigError, SpatialCausalError
from app.services.methods import CROSSFIT_KEYS, coerce, get_method

RUN_DEFAULTS = {
    "scenarios": ("linear",),
    "sample_sizes": (1000,),
    "replicates": (500,),
    "methods": ("rsr", "plm_rbf", "dml_rbf"),
    "delta": 1.0,
    "master_seed": 0,
    "bootstrap": 120,
    "oracle_n": 1_000_000,
    "truth_mode": "shift",
    "gp_cap": 2000,
    "workers": 1,
    "out": None,
}


@dataclass(frozen=True)
class MethodSpec:
    """A method name and its raw options."""

    name: str
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    """
    Everything that determines a simulation's output table.

    Attributes:
        scenarios (tuple): scenario names
        sample_sizes (tuple): sample sizes
        replicates (tuple): replicate count for each sample size
        methods (tuple): MethodSpec per method, in output order
        delta (float): exposure shift
        master_seed (int): root of every replicate's seed
        bootstrap (int): bootstrap resamples per estimate, 0 to skip
        crossfit (dict): default options for dml_crossfit
        scenario_overrides (dict): scenario name -> ScenarioSpec overrides
        oracle_n (int): Monte Carlo oracle size for the truth
        truth_mode (str): estimand the truth is computed for
        gp_cap (int): largest exact Gaussian process before substitution
        workers (int): parallel replicate workers
        out (str): output table path
    """

    scenarios: tuple = RUN_DEFAULTS["scenarios"]
    sample_sizes: tuple = RUN_DEFAULTS["sample_sizes"]
    replicates: tuple = RUN_DEFAULTS["replicates"]
    methods: tuple = tuple(MethodSpec(name) for name in RUN_DEFAULTS["methods"])
    delta: float = RUN_DEFAULTS["delta"]
    master_seed: int = RUN_DEFAULTS["master_seed"]
    bootstrap: int = RUN_DEFAULTS["bootstrap"]
    crossfit: dict = field(default_factory=dict)
    scenario_overrides: dict = field(default_factory=dict)
    oracle_n: int = RUN_DEFAULTS["oracle_n"]
    truth_mode: str = RUN_DEFAULTS["truth_mode"]
    gp_cap: int = RUN_DEFAULTS["gp_cap"]
    workers: int = RUN_DEFAULTS["workers"]
    out: str = RUN_DEFAULTS["out"]

    def __post_init__(self):
        if not self.scenarios or not self.sample_sizes or not self.methods:
            raise ConfigError("A run needs at least one scenario, sample size and method.")
        for name in self.scenarios:
            if name not in SCENARIOS:
                raise ConfigError(f"Unknown scenario '{name}'. Valid scenarios: {', '.join(SCENARIOS)}.")
        if len(self.replicates) == 1 and len(self.sample_sizes) > 1:
            object.__setattr__(self, "replicates", self.replicates * len(self.sample_sizes))
        if len(self.replicates) != len(self.sample_sizes):
            raise ConfigError("Give one replicate count, or one per sample size.")
        if any(r < 1 for r in self.replicates):
            raise ConfigError("Replicates must be at least 1.")
        if any(n < 1 for n in self.sample_sizes):
            raise ConfigError("Sample sizes must be at least 1.")
        if not math.isfinite(self.delta):
            raise ConfigError("delta must be finite.")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be non-negative.")
        if self.bootstrap < 0 or self.bootstrap == 1:
            raise ConfigError("bootstrap must be 0 or at least 2.")
        if self.truth_mode not in TRUTH_MODES:
            raise ConfigError(f"Unknown truth mode '{self.truth_mode}'.")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1.")
        unknown = sorted(set(self.crossfit) - set(CROSSFIT_KEYS))
        if unknown:
            raise ConfigError(f"Unknown crossfit option(s): {', '.join(unknown)}.")
        for spec in self.methods:
            get_method(spec.name).parse_options(self.options_for(spec))
        for name in self.scenario_overrides:
            self.scenario_spec(name)

    def options_for(self, spec):
        """Method options with run-level crossfit settings and the GP cap filled in."""
        definition = get_method(spec.name)
        options = {}
        if "crossfit" in definition.groups:
            options.update(self.crossfit)
        if "learner" in definition.groups:
            options["gp_cap"] = self.gp_cap
        options.update(spec.options)
        return options

    def scenario_spec(self, name):
        overrides = {key: coerce(value, None) for key, value in self.scenario_overrides.get(name, {}).items()}
        try:
            return ScenarioSpec.named(name, **overrides)
        except (TypeError, SpatialCausalError) as e:
            raise ConfigError(f"Invalid parameters for scenario '{name}': {e}") from e

    def cells(self):
        """(scenario, n, replicates) in output order."""
        return [(scenario, n, reps)
                for scenario in self.scenarios
                for n, reps in zip(self.sample_sizes, self.replicates)]

    def to_dict(self):
        data = asdict(self)
        data["methods"] = {spec.name: dict(spec.options) for spec in self.methods}
        data["scenarios"] = list(self.scenarios)
        data["sample_sizes"] = list(self.sample_sizes)
        data["replicates"] = list(self.replicates)
        return data

    @classmethod
    def from_mapping(cls, mapping):
        """
        Build a run from a mapping with optional keys run, crossfit, methods
        and scenario_params. Values may be strings (from INI) or typed (from JSON).
        """
        run = dict(mapping.get("run", {}))
        unknown = sorted(set(run) - set(RUN_DEFAULTS))
        if unknown:
            raise ConfigError(f"Unknown run option(s): {', '.join(unknown)}.")

        values = {}
        for key in ("scenarios", "sample_sizes", "replicates", "methods"):
            if key in run:
                values[key] = _as_list(run[key])
        for key in ("delta", "master_seed", "bootstrap", "gp_cap", "workers"):
            if key in run:
                values[key] = coerce(run[key], RUN_DEFAULTS[key])
        for key in ("truth_mode", "out"):
            if key in run:
                values[key] = run[key]
        try:
            values["sample_sizes"] = tuple(int(v) for v in values.get("sample_sizes", RUN_DEFAULTS["sample_sizes"]))
            values["replicates"] = tuple(int(v) for v in values.get("replicates", RUN_DEFAULTS["replicates"]))
            values["oracle_n"] = int(float(run.get("oracle_n", RUN_DEFAULTS["oracle_n"])))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Sample sizes and replicate counts must be integers: {e}") from e
        values["scenarios"] = tuple(values.get("scenarios", RUN_DEFAULTS["scenarios"]))

        methods = mapping.get("methods") or {}
        if isinstance(methods, (list, tuple)):
            methods = {name: {} for name in methods}
        options = {name: dict(opts or {}) for name, opts in methods.items()}
        names = values.pop("methods", None) or list(options) or list(RUN_DEFAULTS["methods"])
        values["methods"] = tuple(MethodSpec(name, options.get(name, {})) for name in names)
        unused = sorted(set(options) - set(names))
        if unused:
            raise ConfigError(f"Options given for method(s) not in the run: {', '.join(unused)}.")

        crossfit = dict(mapping.get("crossfit", {}))
        values["crossfit"] = {key: coerce(value, CROSSFIT_KEYS.get(key)) for key, value in crossfit.items()}
        values["scenario_overrides"] = {name: dict(params) for name, params in mapping.get("scenario_params", {}).items()}
        return cls(**values)

    @classmethod
    def from_ini(cls, path):
        """Read a run configuration file."""
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as handle:
                parser.read_file(handle)
        except (OSError, configparser.Error) as e:
            raise ConfigError(f"Cannot read run configuration '{path}': {e}") from e

        mapping = {"run": {}, "crossfit": {}, "methods": {}, "scenario_params": {}}
        for section in parser.sections():
            items = dict(parser.items(section))
            if section in ("run", "crossfit"):
                mapping[section] = items
            elif section.startswith("method."):
                mapping["methods"][section[len("method."):]] = items
            elif section.startswith("scenario."):
                mapping["scenario_params"][section[len("scenario."):]] = items
            else:
                raise ConfigError(f"Unknown section [{section}] in '{path}'.")
        return cls.from_mapping(mapping)


def _as_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]
