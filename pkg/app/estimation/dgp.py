"""
Structural data-generating processes for the simulation scenarios and Monte
Carlo oracles for their true shift effects.

Throughout, the second argument of N(mean, s) is a standard deviation.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.stats import qmc

from app.estimation.errors import InvalidArgumentError, UnsupportedDatasetError
from app.estimation.learners.exposure import GaussianExposureModel
from app.estimation.learners.outcome import CallableOutcome
from app.estimation.spatial_core import LocationSet, moving_average_field, sample_locations

logger = logging.getLogger(__name__)

ORACLE_SAMPLE_SIZE = 1_000_000
ORACLE_MINIMUM = 100_000
DERIVATIVE_STEP = 1e-4
TRUTH_MODES = ("shift", "derivative", "ols_slope")
LATENT_COLUMN = "u"

# name -> default parameters. The noisy rungs weight U by 5 in the outcome
# where the other scenarios use 3, so with confounder_sd=0 they match simple
# in U and X but not in Y.
SCENARIO_DEFAULTS = {
    "linear": {},
    "simple": {},
    "struct_het": {},
    "nonlinear": {},
    "random_het": {},
    "noisy": {"confounder_sd": 1.0, "confounder_effect": 5.0},
    "less_noisy": {"confounder_sd": 0.1, "confounder_effect": 5.0},
    "smooth_exposure": {},
    "random_slope": {},
    "exp_illustration": {},
}
SCENARIOS = tuple(SCENARIO_DEFAULTS)

# outcome equations linear in the exposure with unit average slope
_UNIT_SLOPE = {"linear", "simple", "struct_het", "random_het", "noisy",
               "less_noisy", "smooth_exposure", "random_slope"}


@dataclass(frozen=True)
class ScenarioSpec:
    """
    A named structural scenario and its scalar parameters.

    Attributes:
        name (str): one of SCENARIOS
        confounder_sd (float): SD of the noise added to the spatial confounder
        confounder_effect (float): coefficient of U in the outcome equation
        exposure_sd (float): base SD of the exposure around its mean
        outcome_sd (float): SD of the i.i.d. outcome noise
        field_radius (float): radius of optional locally covariant outcome noise
        field_sd (float): SD of that outcome noise field
    """

    name: str
    confounder_sd: float = 0.0
    confounder_effect: float = 3.0
    exposure_sd: float = 5.0
    outcome_sd: float = 1.0
    field_radius: float = None
    field_sd: float = 0.0

    def __post_init__(self):
        if self.name not in SCENARIO_DEFAULTS:
            raise InvalidArgumentError(
                f"Unknown scenario '{self.name}'. Valid scenarios: {', '.join(SCENARIOS)}."
            )
        if self.exposure_sd <= 0 or self.outcome_sd <= 0:
            raise InvalidArgumentError("Exposure and outcome SDs must be positive.")
        if self.confounder_sd < 0 or self.field_sd < 0:
            raise InvalidArgumentError("Noise SDs must be non-negative.")
        if self.field_radius is not None and self.field_radius <= 0:
            raise InvalidArgumentError("Outcome field radius must be positive.")

    @classmethod
    def named(cls, name, **overrides):
        """Build a scenario with its default parameters, optionally overridden."""
        if name not in SCENARIO_DEFAULTS:
            raise InvalidArgumentError(
                f"Unknown scenario '{name}'. Valid scenarios: {', '.join(SCENARIOS)}."
            )
        params = dict(SCENARIO_DEFAULTS[name])
        params.update(overrides)
        return cls(name=name, **params)

    @property
    def positivity(self):
        """False when the exposure has no variation beyond its spatial mean."""
        return self.name != "smooth_exposure"

    @property
    def spatial(self):
        return self.name not in ("random_slope", "exp_illustration")

    def to_dict(self):
        return {
            "name": self.name,
            "confounder_sd": self.confounder_sd,
            "confounder_effect": self.confounder_effect,
            "exposure_sd": self.exposure_sd,
            "outcome_sd": self.outcome_sd,
            "field_radius": self.field_radius,
            "field_sd": self.field_sd,
        }


@dataclass(frozen=True)
class StructuralNoise:
    """Exogenous draws kept with a synthetic dataset for counterfactuals."""

    spec: ScenarioSpec
    outcome_noise: np.ndarray
    heterogeneity: np.ndarray = None
    slope_correlation: float = None

    def take(self, indices):
        heterogeneity = None if self.heterogeneity is None else self.heterogeneity[indices]
        return replace(self, outcome_noise=self.outcome_noise[indices], heterogeneity=heterogeneity)


@dataclass(frozen=True)
class Dataset:
    """
    Locations, exposure and outcome for n units.

    Attributes:
        locations (LocationSet): unit locations
        x (ndarray): exposure
        y (ndarray): outcome
        u (ndarray): latent confounder, synthetic data only
        covariates (ndarray): optional (n, p) matrix entering models linearly
        noise (StructuralNoise): retained draws, synthetic data only
    """

    locations: LocationSet
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray = None
    covariates: np.ndarray = None
    noise: StructuralNoise = field(default=None, repr=False)

    def __post_init__(self):
        n = self.locations.n
        for name in ("x", "y", "u"):
            values = getattr(self, name)
            if values is None:
                continue
            values = np.asarray(values, dtype=float)
            if values.shape != (n,):
                raise InvalidArgumentError(f"'{name}' must have length {n}.")
            object.__setattr__(self, name, values)
        if self.covariates is not None:
            covariates = np.asarray(self.covariates, dtype=float)
            if covariates.ndim == 1:
                covariates = covariates[:, None]
            if covariates.shape[0] != n:
                raise InvalidArgumentError(f"Covariates must have {n} rows.")
            object.__setattr__(self, "covariates", covariates)

    @property
    def n(self):
        return self.locations.n

    @property
    def s(self):
        return self.locations.points

    def subset(self, indices):
        """Rows at `indices`, repeats allowed (bootstrap, cross-fitting)."""
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            locations=self.locations.take(indices),
            x=self.x[indices],
            y=self.y[indices],
            u=None if self.u is None else self.u[indices],
            covariates=None if self.covariates is None else self.covariates[indices],
            noise=None if self.noise is None else self.noise.take(indices),
        )

    def to_frame(self, include_latent=False):
        """Columns y, x, s1, s2, covariates c1..cp and optionally the latent u."""
        frame = pd.DataFrame({"y": self.y, "x": self.x, "s1": self.s[:, 0], "s2": self.s[:, 1]})
        if self.covariates is not None:
            for j in range(self.covariates.shape[1]):
                frame[f"c{j + 1}"] = self.covariates[:, j]
        if include_latent and self.u is not None:
            frame[LATENT_COLUMN] = self.u
        return frame

    def export_csv(self, path, include_latent=False):
        self.to_frame(include_latent=include_latent).to_csv(path, index=False)


@dataclass(frozen=True)
class TrueEffect:
    """Oracle value of a scenario's shift effect."""

    delta: float
    value: float
    method: str
    mc_se: float = None
    mode: str = "shift"

    def __post_init__(self):
        if self.method == "monte_carlo" and not (self.mc_se and self.mc_se > 0):
            raise InvalidArgumentError("Monte Carlo truths must carry a positive mc_se.")

    def to_dict(self):
        return {"delta": self.delta, "value": self.value, "method": self.method,
                "mc_se": self.mc_se, "mode": self.mode}


def spatial_confounder(points):
    """sin(2 pi s1 s2) + s1 + s2."""
    s1, s2 = points[:, 0], points[:, 1]
    return np.sin(2.0 * np.pi * s1 * s2) + s1 + s2


def outcome_mean(spec, x, u, heterogeneity=None):
    """Structural outcome mean E[Y | X=x, U=u] (given unit heterogeneity)."""
    name = spec.name
    if name in ("linear", "simple", "smooth_exposure", "noisy", "less_noisy"):
        return spec.confounder_effect * u + x
    if name == "struct_het":
        return spec.confounder_effect * u + (1.0 + u) * x
    if name == "nonlinear":
        return spec.confounder_effect * u + x + x ** 2
    if name == "random_het":
        return u + (1.0 + heterogeneity) * x
    if name == "random_slope":
        return x + u
    return np.exp(x)


def _exposure(spec, u, points, rng):
    name = spec.name
    if name == "linear":
        return u + spec.exposure_sd * rng.standard_normal(u.shape)
    if name in ("struct_het", "random_het"):
        return u ** 3 + spec.exposure_sd * np.exp(u / 2.0) * rng.standard_normal(u.shape)
    if name == "smooth_exposure":
        s1, s2 = points[:, 0], points[:, 1]
        return u ** 3 + np.cos(2.0 * np.pi * s1 * s2)
    return u ** 3 + spec.exposure_sd * rng.standard_normal(u.shape)


def generate(spec, n, rng, locations=None):
    """
    Draw a dataset from a scenario's structural equations.

    Draw order is locations, U, X, Y, each from its own child stream so that
    scenarios sharing equations share realisations on matched seeds.

    Args:
        spec (ScenarioSpec): scenario and parameters
        n (int): number of units
        rng (numpy.random.Generator): seeded generator
        locations (LocationSet): fixed design replacing the uniform draw

    Returns:
        Dataset: synthetic data with latent U and retained noise
    """
    if n < 1:
        raise InvalidArgumentError("Sample size must be at least 1.")
    loc_rng, conf_rng, exp_rng, out_rng, field_rng = rng.spawn(5)

    if locations is None:
        locations = sample_locations(n, loc_rng)
    elif locations.n != n:
        raise InvalidArgumentError("A fixed location design must have n points.")
    points = locations.points
    heterogeneity = None
    slope_correlation = None

    if spec.name == "random_slope":
        slope_correlation = float(conf_rng.uniform(-1.0, 1.0))
        z1 = exp_rng.standard_normal(n)
        z2 = conf_rng.standard_normal(n)
        x = z1
        u = slope_correlation * z1 + np.sqrt(1.0 - slope_correlation ** 2) * z2
    elif spec.name == "exp_illustration":
        u = np.zeros(n)
        x = exp_rng.uniform(0.0, 5.0, size=n)
    else:
        if spec.name == "linear":
            u = points[:, 0] + points[:, 1]
        else:
            u = spatial_confounder(points)
        if spec.confounder_sd > 0:
            u = u + spec.confounder_sd * conf_rng.standard_normal(n)
        x = _exposure(spec, u, points, exp_rng)
        if spec.name == "random_het":
            heterogeneity = conf_rng.standard_normal(n)

    outcome_noise = spec.outcome_sd * out_rng.standard_normal(n)
    if spec.field_radius is not None and spec.field_sd > 0:
        outcome_noise = outcome_noise + moving_average_field(
            locations, spec.field_radius, spec.field_sd, field_rng
        ).values

    noise = StructuralNoise(spec, outcome_noise, heterogeneity, slope_correlation)
    y = outcome_mean(spec, x, u, heterogeneity) + outcome_noise
    return Dataset(locations=locations, x=x, y=y, u=u, noise=noise)


def counterfactual_outcome(spec, dataset, x_new):
    """
    Outcomes under exposure `x_new` with every exogenous draw held fixed.

    Raises:
        UnsupportedDatasetError: the dataset carries no retained noise
    """
    if dataset.noise is None or dataset.u is None:
        raise UnsupportedDatasetError("Counterfactuals need a synthetic dataset with retained noise.")
    x_new = np.asarray(x_new, dtype=float)
    if x_new.shape != dataset.x.shape:
        raise InvalidArgumentError("x_new must match the dataset's exposure length.")
    return outcome_mean(spec, x_new, dataset.u, dataset.noise.heterogeneity) + dataset.noise.outcome_noise


def _antithetic_sample(spec, n, rng):
    """Half the exposure noise is mirrored so per-pair means cancel its odd moments."""
    exponent = int(np.ceil(np.log2(max((n + 1) // 2, 2))))
    design = qmc.Sobol(d=2, scramble=True, seed=rng).random_base2(exponent)
    data = generate(spec, len(design), rng, locations=LocationSet(2.0 * design - 1.0))
    if spec.name in ("smooth_exposure", "random_slope"):
        return data, data
    if spec.name == "exp_illustration":
        return data, replace(data, x=5.0 - data.x)
    mean = data.u if spec.name == "linear" else data.u ** 3
    return data, replace(data, x=2.0 * mean - data.x)


def true_shift_effect(spec, delta, oracle_n=ORACLE_SAMPLE_SIZE, rng=None, mode="shift"):
    """
    Oracle value of the scenario's effect.

    Modes:
        shift: E[Y(X + delta) - Y(X)]
        derivative: E[dE[Y | X, U] / dX], the average exposure slope
        ols_slope: population slope of the least-squares line of Y on X

    Scenarios whose outcome is linear in X with unit average slope get the
    analytic answer delta for the shift mode; everything else is simulated.

    Returns:
        TrueEffect: oracle value with Monte Carlo standard error when simulated
    """
    if mode not in TRUTH_MODES:
        raise InvalidArgumentError(f"Unknown truth mode '{mode}'.")
    if mode == "shift" and spec.name in _UNIT_SLOPE:
        return TrueEffect(delta=float(delta), value=float(delta), method="analytic", mode=mode)
    if oracle_n < ORACLE_MINIMUM:
        raise InvalidArgumentError(f"Monte Carlo oracles need oracle_n >= {ORACLE_MINIMUM}.")
    rng = rng if rng is not None else np.random.default_rng(0)

    if mode == "ols_slope":
        data = generate(spec, oracle_n, rng)
        x, y = data.x, data.y
        slope = np.cov(x, y)[0, 1] / np.var(x, ddof=1)
        residual = (y - y.mean()) - slope * (x - x.mean())
        influence = residual * (x - x.mean()) / np.var(x)
        mc_se = float(np.std(influence) / np.sqrt(len(x)))
        return TrueEffect(delta=float(delta), value=float(slope), method="monte_carlo",
                          mc_se=max(mc_se, np.finfo(float).tiny), mode=mode)

    def unit_effect(data):
        het = None if data.noise is None else data.noise.heterogeneity
        if mode == "derivative":
            upper = outcome_mean(spec, data.x + DERIVATIVE_STEP, data.u, het)
            lower = outcome_mean(spec, data.x - DERIVATIVE_STEP, data.u, het)
            return (upper - lower) / (2.0 * DERIVATIVE_STEP)
        return outcome_mean(spec, data.x + delta, data.u, het) - outcome_mean(spec, data.x, data.u, het)

    first, second = _antithetic_sample(spec, oracle_n, rng)
    pair_means = 0.5 * (unit_effect(first) + unit_effect(second))
    value = float(pair_means.mean())
    mc_se = float(pair_means.std(ddof=1) / np.sqrt(len(pair_means)))
    logger.debug("Oracle %s/%s: %.5f (se %.2e)", spec.name, mode, value, mc_se)
    return TrueEffect(delta=float(delta), value=value, method="monte_carlo",
                      mc_se=max(mc_se, np.finfo(float).tiny), mode=mode)


def _location_confounder(spec):
    if not spec.spatial or spec.confounder_sd > 0:
        raise UnsupportedDatasetError(
            f"Scenario '{spec.name}' has no confounder that is a function of location."
        )
    if spec.name == "linear":
        return lambda points: points[:, 0] + points[:, 1]
    return spatial_confounder


def oracle_outcome_model(spec):
    """The true E[Y | X = x, S = s] as an outcome model."""
    confounder = _location_confounder(spec)

    def mean(x, points):
        return outcome_mean(spec, x, confounder(points), np.zeros(len(x)))

    return CallableOutcome(mean, kind="oracle")


def oracle_exposure_model(spec):
    """The true Gaussian law of X given S."""
    confounder = _location_confounder(spec)
    if not spec.positivity:
        raise UnsupportedDatasetError(f"Scenario '{spec.name}' has a deterministic exposure.")
    if spec.name == "linear":
        return GaussianExposureModel(confounder, spec.exposure_sd)
    if spec.name in ("struct_het", "random_het"):
        return GaussianExposureModel(lambda points: confounder(points) ** 3,
                                     lambda points: spec.exposure_sd * np.exp(confounder(points) / 2.0))
    return GaussianExposureModel(lambda points: confounder(points) ** 3, spec.exposure_sd)
