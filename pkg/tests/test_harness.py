import json

import numpy as np
import pandas as pd
import pytest

from app.estimation.dgp import ScenarioSpec, generate
from app.estimation.errors import InvalidArgumentError
from app.services import harness, methods
from app.services.harness import (POSITIVITY_NOTE, plan_methods, replicate_seed, run_estimate,
                                  run_simulation, run_true_effect, write_manifest, write_table)
from app.services.ingest import ingest_csv
from app.services.run_config import MethodSpec, RunConfig


def small_config(**overrides):
    values = dict(
        scenarios=("linear",),
        sample_sizes=(120,),
        replicates=(4,),
        methods=(MethodSpec("ols"), MethodSpec("rsr"), MethodSpec("plm_rbf", {"k": 20})),
        bootstrap=0,
        master_seed=5,
        oracle_n=100_000,
    )
    values.update(overrides)
    return RunConfig(**values)


def row_values(rows):
    return [row.to_dict() for row in rows]


def test_replicate_seed_streams():
    first = np.random.default_rng(replicate_seed(1, "linear", 100, 0)).random(3)
    again = np.random.default_rng(replicate_seed(1, "linear", 100, 0)).random(3)
    other = np.random.default_rng(replicate_seed(1, "linear", 100, 1)).random(3)
    method = np.random.default_rng(replicate_seed(1, "linear", 100, 0, "ols")).random(3)
    np.testing.assert_array_equal(first, again)
    assert not np.allclose(first, other)
    assert not np.allclose(first, method)


def test_plan_marks_positivity_violations():
    config = small_config(scenarios=("smooth_exposure",),
                          methods=(MethodSpec("ols"), MethodSpec("dml_rbf")))
    plans = plan_methods(config, config.scenario_spec("smooth_exposure"), 120)
    assert plans[0].runnable
    assert not plans[1].runnable
    assert plans[1].note == POSITIVITY_NOTE


def test_plan_substitutes_gp_above_cap():
    config = small_config(methods=(MethodSpec("plm_gp"), MethodSpec("flex_gp")), gp_cap=100, bootstrap=10)
    plans = plan_methods(config, config.scenario_spec("linear"), 150)
    assert [plan.runner for plan in plans] == ["plm_rbf", "flex_rbf"]
    assert all("substituted" in plan.note for plan in plans)
    assert all(plan.bootstrap == 10 for plan in plans)
    assert all("kind" not in plan.options for plan in plans)


def test_plan_keeps_gp_below_cap_without_bootstrap():
    config = small_config(methods=(MethodSpec("plm_gp"),), gp_cap=500, bootstrap=10)
    (plan,) = plan_methods(config, config.scenario_spec("linear"), 150)
    assert plan.runner == "plm_gp"
    assert plan.bootstrap == 0
    assert plan.note == ""


def test_simulation_rows_and_manifest():
    config = small_config()
    result = run_simulation(config)
    assert [row.method for row in result.rows] == ["ols", "rsr", "plm_rbf"]
    for row in result.rows:
        assert row.scenario == "linear"
        assert row.n == 120
        assert row.replicates == 4
        assert row.failures == 0
        assert row.coverage is not None
    assert result.manifest["truths"]["linear"]["value"] == 1.0
    assert result.manifest["failures"] == {"linear/120/ols": 0, "linear/120/rsr": 0, "linear/120/plm_rbf": 0}
    assert result.manifest["config"]["master_seed"] == 5
    assert "numpy" in result.manifest["versions"]


def test_simulation_is_deterministic():
    config = small_config()
    assert row_values(run_simulation(config).rows) == row_values(run_simulation(config).rows)


def test_simulation_does_not_depend_on_workers():
    config = small_config(replicates=(3,))
    serial = run_simulation(config, workers=1).rows
    parallel = run_simulation(config, workers=2).rows
    for a, b in zip(serial, parallel):
        assert a.bias == pytest.approx(b.bias, rel=1e-10, abs=1e-14)
        assert a.sd == pytest.approx(b.sd, rel=1e-10)
        assert a.coverage == b.coverage


def test_seed_changes_results():
    first = run_simulation(small_config()).rows
    second = run_simulation(small_config(master_seed=6)).rows
    assert first[0].bias != second[0].bias


def test_ols_is_biased_in_the_linear_scenario():
    config = small_config(sample_sizes=(300,), replicates=(6,), methods=(MethodSpec("ols"),))
    (row,) = run_simulation(config).rows
    assert row.bias == pytest.approx(2.0 / 25.667, abs=0.05)


def test_positivity_row():
    config = small_config(scenarios=("smooth_exposure",), replicates=(2,),
                          methods=(MethodSpec("ols"), MethodSpec("dml_rbf")))
    rows = run_simulation(config).rows
    assert rows[1].method == "dml_rbf"
    assert rows[1].replicates == 0
    assert rows[1].bias is None
    assert rows[1].note == POSITIVITY_NOTE


def test_failing_cells_are_flagged():
    config = small_config(sample_sizes=(40,), replicates=(2,),
                          methods=(MethodSpec("ols"), MethodSpec("dml_rbf", {"k": 10})))
    rows = run_simulation(config).rows
    assert rows[0].failures == 0
    assert rows[1].failures == 2
    assert rows[1].replicates == 0
    assert rows[1].note.startswith("flagged")


def test_learner_value_errors_are_recorded_as_failures(monkeypatch):
    def failing_fit(dataset, delta):
        raise ValueError("Input contains NaN")

    monkeypatch.setattr(methods, "estimate_ols", failing_fit)
    config = small_config(methods=(MethodSpec("ols"), MethodSpec("rsr")))
    ols_row, rsr_row = run_simulation(config, workers=1).rows
    assert ols_row.failures == 4
    assert ols_row.replicates == 0
    assert ols_row.note == "flagged: 4 of 4 replicates failed"
    assert rsr_row.failures == 0
    assert rsr_row.replicates == 4


def test_bootstrap_intervals_in_simulation():
    config = small_config(replicates=(2,), bootstrap=5, methods=(MethodSpec("rsr"),))
    (row,) = run_simulation(config).rows
    assert row.coverage is not None


def test_non_bootstrap_methods_report_no_coverage_when_bootstrapping():
    config = small_config(sample_sizes=(60,), replicates=(2,), bootstrap=5,
                          methods=(MethodSpec("plm_gp", {"hyperparameters": "fixed"}),))
    (row,) = run_simulation(config).rows
    assert row.replicates == 2
    assert row.coverage is None


def test_write_table_and_manifest(tmp_path):
    result = run_simulation(small_config())
    table = tmp_path / "table.csv"
    write_table(result.rows, str(table))
    frame = pd.read_csv(table)
    assert list(frame.columns) == ["scenario", "n", "method", "replicates", "bias", "sd",
                                   "mse", "coverage", "failures", "note"]
    assert len(frame) == 3
    assert "e" in table.read_text().splitlines()[1].split(",")[4]

    manifest = tmp_path / "table.json"
    write_manifest(result.manifest, str(manifest))
    loaded = json.loads(manifest.read_text())
    assert loaded["config"]["scenarios"] == ["linear"]


def test_tables_are_identical_across_runs(tmp_path):
    for name in ("a.csv", "b.csv"):
        write_table(run_simulation(small_config()).rows, str(tmp_path / name))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_empty_table():
    assert list(harness.format_table([]).columns)[:3] == ["scenario", "n", "method"]


def test_estimate_from_exported_file_matches_in_memory(tmp_path):
    dataset = generate(ScenarioSpec.named("linear"), 300, np.random.default_rng(8))
    path = str(tmp_path / "linear.csv")
    dataset.export_csv(path)
    options = {"k": 30}
    from_file = run_estimate(ingest_csv(path), "plm_rbf", 1.0, options=options)
    in_memory = run_estimate(dataset, "plm_rbf", 1.0, options=options)
    assert from_file.point == pytest.approx(in_memory.point, abs=1e-10)


def test_zero_shift_with_bootstrap(linear_data):
    estimate = run_estimate(linear_data, "plm_rbf", 0.0, B=10, options={"k": 30})
    assert estimate.point == 0.0
    assert estimate.ci[0] <= 0.0 <= estimate.ci[1]


def test_bootstrap_estimate_is_reproducible(linear_data):
    first = run_estimate(linear_data, "rsr", 1.0, B=20, seed=3)
    second = run_estimate(linear_data, "rsr", 1.0, B=20, seed=3)
    assert first.se == second.se
    assert first.ci == second.ci


def test_gp_methods_refuse_the_bootstrap(linear_data):
    with pytest.raises(InvalidArgumentError):
        run_estimate(linear_data, "plm_gp", 1.0, B=10)


def test_true_effect_linear():
    truth = run_true_effect("linear", 1.0, 100_000)
    assert truth.value == 1.0
    assert truth.method == "analytic"


def test_true_effect_scales_with_delta():
    assert run_true_effect("simple", 2.5, 100_000).value == 2.5
