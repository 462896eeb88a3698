"""
Replicate engine for simulation studies and single-dataset analyses.

Every replicate draws fresh locations and data from its own seed, runs each
configured method (bootstrapping where asked) and reports one outcome per
method. Cells are reduced to MetricsRows in replicate order, so the table is
a pure function of the RunConfig whatever the number of workers.
"""

import json
import logging
import time
import zlib
from dataclasses import dataclass, field, replace
from functools import partial
from importlib import metadata

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from app.estimation.dgp import ScenarioSpec, generate, true_shift_effect
from app.estimation.errors import FIT_FAILURES, InvalidArgumentError
from app.estimation.inference import METRICS_COLUMNS, MetricsRow, bootstrap_ci, summarize
from app.services.ingest import IngestedDataset
from app.services.methods import get_method

logger = logging.getLogger(__name__)

FLAG_FAILURE_FRACTION = 0.1
POSITIVITY_NOTE = "not runnable: positivity violation"
TABLE_FORMAT = "%.3e"
TRUTH_STREAM = 0xFFFF
VERSIONED_PACKAGES = ("numpy", "scipy", "scikit-learn", "pandas", "joblib")


def _tag(text):
    return zlib.crc32(text.encode("utf-8"))


def replicate_seed(master_seed, scenario, n, replicate, method=None):
    """Seed for one replicate, or for one method within it."""
    entropy = [int(master_seed), _tag(scenario), int(n), int(replicate)]
    if method is not None:
        entropy.append(_tag(method))
    return np.random.SeedSequence(entropy)


@dataclass(frozen=True)
class MethodPlan:
    """How a method runs in one (scenario, n) cell."""

    name: str
    runner: str
    options: dict
    bootstrap: int
    runnable: bool = True
    note: str = ""


@dataclass(frozen=True)
class ReplicateOutcome:
    method: str
    estimate: object = None
    error: str = None


@dataclass
class SimulationResult:
    """MetricsRows of a run plus its manifest."""

    rows: list
    manifest: dict = field(default_factory=dict)

    def table(self):
        return format_table(self.rows)


def plan_methods(config, spec, n):
    """Resolve positivity markers, GP substitution and bootstrap use per method."""
    plans = []
    for method_spec in config.methods:
        definition = get_method(method_spec.name)
        options = config.options_for(method_spec)
        if definition.needs_positivity and not spec.positivity:
            plans.append(MethodPlan(definition.name, definition.name, options, 0,
                                    runnable=False, note=POSITIVITY_NOTE))
            continue
        runner, note = definition, ""
        if definition.substitute and n > config.gp_cap:
            runner = get_method(definition.substitute)
            options = {key: value for key, value in options.items() if key != "kind"}
            note = f"substituted {runner.name} (n > {config.gp_cap})"
            logger.warning("%s at n=%d exceeds the exact GP cap; running %s", definition.name, n, runner.name)
        resamples = config.bootstrap if runner.bootstrap else 0
        plans.append(MethodPlan(definition.name, runner.name, options, resamples, note=note))
    return plans


def _rerun(definition, delta, options, dataset, rng):
    return definition.run(dataset, delta, options, rng)


def _estimate(plan, dataset, delta, rng, bootstrap_jobs=1):
    definition = get_method(plan.runner)
    point_rng, boot_rng = rng.spawn(2)
    estimate = definition.run(dataset, delta, plan.options, point_rng)
    if plan.bootstrap:
        estimator = partial(_rerun, definition, delta, plan.options)
        result = bootstrap_ci(dataset, estimator, plan.bootstrap, boot_rng,
                              point=estimate.point, n_jobs=bootstrap_jobs)
        estimate = result.attach(estimate)
    if estimate.method != plan.name:
        estimate = replace(estimate, method=plan.name)
    return estimate


def run_replicate(config, spec, n, replicate, plans, strip_intervals=True):
    """
    Generate one dataset and estimate with every runnable method.

    Methods that cannot be bootstrapped report no interval when the run
    bootstraps, so their coverage stays empty rather than mixing analytic
    and bootstrap intervals.
    """
    seed = replicate_seed(config.master_seed, spec.name, n, replicate)
    dataset = generate(spec, n, np.random.default_rng(seed))
    outcomes = []
    for plan in plans:
        if not plan.runnable:
            continue
        rng = np.random.default_rng(replicate_seed(config.master_seed, spec.name, n, replicate, plan.name))
        try:
            estimate = _estimate(plan, dataset, config.delta, rng)
        except FIT_FAILURES as e:
            logger.debug("%s/%d/%s replicate %d failed: %s", spec.name, n, plan.name, replicate, e)
            outcomes.append(ReplicateOutcome(plan.name, error=str(e)))
            continue
        if strip_intervals and config.bootstrap and not plan.bootstrap and estimate.ci is not None:
            estimate = replace(estimate, se=None, ci=None)
        outcomes.append(ReplicateOutcome(plan.name, estimate))
    return outcomes


def _cell_rows(scenario, n, plans, replicates, truth):
    rows = []
    for plan in plans:
        if not plan.runnable:
            rows.append(MetricsRow(scenario=scenario, n=n, method=plan.name, replicates=0, note=plan.note))
            continue
        outcomes = [o for outcome in replicates for o in outcome if o.method == plan.name]
        estimates = [o.estimate for o in outcomes if o.estimate is not None]
        failures = len(outcomes) - len(estimates)
        notes = [plan.note] if plan.note else []
        if failures > FLAG_FAILURE_FRACTION * len(outcomes):
            notes.append(f"flagged: {failures} of {len(outcomes)} replicates failed")
            logger.warning("%s n=%d %s: %d of %d replicates failed", scenario, n, plan.name,
                           failures, len(outcomes))
        note = "; ".join(notes)
        if len(estimates) < 2:
            rows.append(MetricsRow(scenario=scenario, n=n, method=plan.name,
                                   replicates=len(estimates), failures=failures, note=note))
            continue
        rows.append(summarize(estimates, truth, scenario=scenario, n=n, method=plan.name,
                              failures=failures, note=note))
    return rows


def scenario_truth(config, spec):
    rng = np.random.default_rng(np.random.SeedSequence([config.master_seed, _tag(spec.name), TRUTH_STREAM]))
    return true_shift_effect(spec, config.delta, config.oracle_n, rng, mode=config.truth_mode)


def run_simulation(config, workers=None):
    """
    Run every (scenario, n) cell of a RunConfig.

    Args:
        config (RunConfig): the experiment
        workers (int): joblib workers over replicates, defaults to config.workers

    Returns:
        SimulationResult: one MetricsRow per (scenario, n, method) and a manifest
    """
    workers = workers or config.workers
    started = time.perf_counter()
    rows, truths, failures = [], {}, {}
    for scenario in config.scenarios:
        spec = config.scenario_spec(scenario)
        truth = scenario_truth(config, spec)
        truths[scenario] = truth.to_dict()
        logger.info("Scenario %s: truth %.5g (%s)", scenario, truth.value, truth.method)
        for n, count in zip(config.sample_sizes, config.replicates):
            plans = plan_methods(config, spec, n)
            outcomes = Parallel(n_jobs=workers)(
                delayed(run_replicate)(config, spec, n, replicate, plans) for replicate in range(count)
            )
            cell = _cell_rows(scenario, n, plans, outcomes, truth)
            for row in cell:
                failures[f"{scenario}/{n}/{row.method}"] = row.failures
            rows.extend(cell)
            logger.info("Finished %s n=%d (%d replicates)", scenario, n, count)

    manifest = {
        "config": config.to_dict(),
        "versions": package_versions(),
        "wall_time": time.perf_counter() - started,
        "failures": failures,
        "truths": truths,
    }
    return SimulationResult(rows=rows, manifest=manifest)


def package_versions():
    versions = {}
    for package in VERSIONED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = None
    return versions


def format_table(rows):
    """MetricsRows as a DataFrame with the table columns first."""
    frame = pd.DataFrame([row.to_dict() for row in rows])
    if frame.empty:
        return pd.DataFrame(columns=[*METRICS_COLUMNS, "failures", "note"])
    return frame[[*METRICS_COLUMNS, "failures", "note"]]


def write_table(rows, path):
    format_table(rows).to_csv(path, index=False, float_format=TABLE_FORMAT)


def write_manifest(manifest, path):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True, default=str)


def run_estimate(data, method, delta, B=0, seed=0, options=None, n_jobs=1):
    """
    Estimate the shift effect on an external dataset.

    Args:
        data (IngestedDataset | Dataset): the units
        method (str): method name
        delta (float): exposure shift
        B (int): bootstrap resamples, 0 for the method's own interval
        seed (int): root seed for learners and resamples
        options (dict): method options

    Returns:
        ShiftEstimate
    """
    dataset = data.dataset if isinstance(data, IngestedDataset) else data
    definition = get_method(method)
    if B and not definition.bootstrap:
        raise InvalidArgumentError(f"Method '{method}' does not support the bootstrap.")
    plan = MethodPlan(definition.name, definition.name, dict(options or {}), int(B))
    return _estimate(plan, dataset, float(delta), np.random.default_rng(seed), bootstrap_jobs=n_jobs)


def run_true_effect(scenario, delta, oracle_n, mode="shift", seed=0, **params):
    spec = ScenarioSpec.named(scenario, **params)
    return true_shift_effect(spec, delta, oracle_n, np.random.default_rng(seed), mode=mode)
