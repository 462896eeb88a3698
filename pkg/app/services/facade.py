"""
Spatial shift facade module.
Provides the single interface used by the CLI commands and the REST layer.
"""

import logging
import os

import numpy as np

from app.estimation.dgp import ORACLE_SAMPLE_SIZE, SCENARIO_DEFAULTS, SCENARIOS, ScenarioSpec
from app.estimation.spatial_core import SPLIT_ATTEMPTS, sample_locations, spatial_block_split
from app.models.metrics_record import MetricsRecord
from app.models.simulation_run import SimulationRun
from app.persistence.metrics_repository import MetricsRepository
from app.persistence.run_repository import RunRepository
from app.services import harness
from app.services.ingest import ColumnMap, ingest_csv, ingest_records
from app.services.methods import METHODS
from app.services.run_config import RunConfig

logger = logging.getLogger(__name__)


class SpatialShiftFacade:
    """
    Facade class over the replicate engine and the run registry.
    """

    def __init__(self):
        """Initialize repositories for each entity."""
        self.run_repo = RunRepository()
        self.metrics_repo = MetricsRepository()

    # =====================
    # Simulation runs
    # =====================

    def run_simulation(self, config, workers=None, out=None, persist=True):
        """
        Run a simulation study and optionally record it.

        Args:
            config (RunConfig | dict): the experiment, or its JSON mapping
            workers (int, optional): replicate workers
            out (str, optional): table path, overriding config.out; the
                manifest is written next to it with a .json suffix
            persist (bool): store the run and its rows in the registry

        Returns:
            tuple: (SimulationResult, SimulationRun or None)

        Raises:
            ValueError: If the configuration is invalid
        """
        if not isinstance(config, RunConfig):
            config = RunConfig.from_mapping(config)
        result = harness.run_simulation(config, workers)

        out = out or config.out
        if out:
            directory = os.path.dirname(os.path.abspath(out))
            os.makedirs(directory, exist_ok=True)
            harness.write_table(result.rows, out)
            harness.write_manifest(result.manifest, f"{os.path.splitext(out)[0]}.json")
            logger.info("Wrote %d rows to %s", len(result.rows), out)

        run = None
        if persist:
            run = SimulationRun(
                master_seed=config.master_seed,
                delta=config.delta,
                config=config.to_dict(),
                manifest=result.manifest,
                output_path=out,
                wall_time=result.manifest["wall_time"],
            )
            for position, row in enumerate(result.rows):
                run.metrics.append(MetricsRecord.from_row(row, position))
            self.run_repo.add(run)
        return result, run

    def get_run(self, run_id):
        return self.run_repo.get(run_id)

    def get_all_runs(self):
        return self.run_repo.get_all()

    def get_runs_by_seed(self, master_seed):
        return self.run_repo.get_runs_by_seed(master_seed)

    def get_run_metrics(self, run_id):
        """
        Retrieve a run's table rows.

        Returns:
            list: MetricsRecord instances, or None if the run does not exist
        """
        if self.get_run(run_id) is None:
            return None
        return self.metrics_repo.get_metrics_by_run(run_id)

    def delete_run(self, run_id):
        """Delete a run with its rows; False if it does not exist."""
        return self.run_repo.delete(run_id)

    def get_scenario_metrics(self, scenario, n=None):
        """Every recorded row for a scenario, run by run."""
        return self.metrics_repo.get_metrics_by_scenario(scenario, n)

    # =====================
    # Analyses
    # =====================

    def run_estimate(self, data, method, delta, bootstrap=0, seed=0, options=None,
                     columns=None, normalize=False):
        """
        Estimate a shift effect on an external dataset.

        Args:
            data (str | list): a dataset file path, or a list of row mappings
            method (str): method name
            delta (float): exposure shift
            bootstrap (int): resamples, 0 for the method's own interval
            seed (int): root seed
            options (dict, optional): method options
            columns (ColumnMap, optional): source column names
            normalize (bool): z-score quantitative columns on ingest

        Returns:
            ShiftEstimate: the estimate

        Raises:
            ValueError: If the data or the method options are invalid
        """
        columns = columns or ColumnMap()
        if isinstance(data, str):
            ingested = ingest_csv(data, columns, normalize)
        else:
            ingested = ingest_records(data, columns, normalize)
        logger.info("Ingested %d rows (%d dropped)", ingested.rows, ingested.dropped)
        return harness.run_estimate(ingested, method, delta, bootstrap, seed, options)

    def run_true_effect(self, scenario, delta, oracle_n=None, mode="shift", seed=0, **params):
        oracle_n = oracle_n or ORACLE_SAMPLE_SIZE
        return harness.run_true_effect(scenario, delta, oracle_n, mode, seed, **params)

    def split_check(self, n, q, r, seed=0, max_attempts=SPLIT_ATTEMPTS):
        """
        Draw uniform locations, split them and verify the geometry.

        Returns:
            tuple: (BlockSplit, SplitReport)
        """
        rng = np.random.default_rng(seed)
        locations = sample_locations(n, rng)
        split = spatial_block_split(locations, q, r, rng, max_attempts)
        return split, split.verify(locations)

    # =====================
    # Catalogue
    # =====================

    def list_scenarios(self):
        return [self.get_scenario(name) for name in SCENARIOS]

    def get_scenario(self, name):
        if name not in SCENARIO_DEFAULTS:
            return None
        spec = ScenarioSpec.named(name)
        return spec.to_dict() | {"positivity": spec.positivity}

    def list_methods(self):
        return [
            {
                "name": definition.name,
                "kind": definition.kind,
                "options": sorted(definition.allowed_keys()),
                "bootstrap": definition.bootstrap,
                "needs_positivity": definition.needs_positivity,
            }
            for definition in METHODS.values()
        ]

