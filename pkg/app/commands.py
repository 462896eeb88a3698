"""
Flask CLI commands for batch simulation and analysis.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

import os
from dataclasses import replace

import click
from flask import current_app
from flask.cli import with_appcontext

from app.estimation.errors import (FIT_FAILURES, ConfigError, IngestionError,
                                   InvalidArgumentError, SpatialCausalError,
                                   UnsupportedDatasetError)
from app.services import facade
from app.services.harness import format_table
from app.services.ingest import ColumnMap
from app.services.methods import get_method
from app.services.run_config import RunConfig

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def exit_code(error):
    """Map an error to the command's exit status; anything unclassified is numerical."""
    if isinstance(error, (ConfigError, InvalidArgumentError)):
        return EXIT_CONFIG
    if isinstance(error, (IngestionError, UnsupportedDatasetError)):
        return EXIT_DATA
    return EXIT_NUMERICAL


def fail(error):
    click.echo(f"✗ Error: {error}", err=True)
    raise SystemExit(exit_code(error))


def parse_options(pairs):
    options = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"Options are key=value pairs, got '{pair}'.")
        options[key.strip()] = value.strip()
    return options


def default_table_path(config_path):
    """RESULTS_DIR/<config file stem>.csv"""
    stem = os.path.splitext(os.path.basename(config_path))[0]
    return os.path.join(current_app.config.get('RESULTS_DIR', 'results'), f"{stem}.csv")


@click.command('simulate')
@click.option('--config', 'config_path', required=True, type=click.Path(dir_okay=False),
              help='Run configuration file')
@click.option('--out', default=None, help='Output table path')
@click.option('--seed', type=int, default=None, help='Override the master seed')
@click.option('--workers', type=int, default=None, help='Parallel replicate workers')
@click.option('--record/--no-record', default=True, help='Store the run in the registry')
@with_appcontext
def simulate_command(config_path, out, seed, workers, record):
    """Run a simulation study and write its metrics table."""
    try:
        config = RunConfig.from_ini(config_path)
        if seed is not None:
            config = replace(config, master_seed=seed)
        workers = workers or current_app.config.get('DEFAULT_WORKERS') or config.workers
        out = out or config.out or default_table_path(config_path)
        click.echo(f"Running {len(config.cells())} cell(s) x {len(config.methods)} method(s)")
        result, run = facade.run_simulation(config, workers=workers, out=out, persist=record)
    except SpatialCausalError as e:
        fail(e)

    click.echo(format_table(result.rows).to_string(index=False, float_format=lambda v: f"{v:.3e}"))
    click.echo(f"✓ Simulation finished in {result.manifest['wall_time']:.1f}s")
    click.echo(f"  Table: {out}")
    if run is not None:
        click.echo(f"  Run ID: {run.id}")


@click.command('estimate')
@click.option('--data', 'data_path', required=True, type=click.Path(dir_okay=False),
              help='Dataset file with columns y, x, s1, s2 and covariates')
@click.option('--method', required=True, help='Method name')
@click.option('--delta', type=float, required=True, help='Exposure shift')
@click.option('--boot', type=int, default=None, help='Bootstrap resamples, 0 for analytic intervals')
@click.option('--seed', type=int, default=0, help='Root seed')
@click.option('--option', 'pairs', multiple=True, help='Method option as key=value')
@click.option('--normalize', is_flag=True, help='z-score quantitative columns')
@with_appcontext
def estimate_command(data_path, method, delta, boot, seed, pairs, normalize):
    """Estimate a shift effect on a dataset file."""
    if boot is None:
        boot = current_app.config.get('BOOTSTRAP_RESAMPLES', 0)
    try:
        options = parse_options(pairs)
        if boot and not get_method(method).bootstrap:
            click.echo(f"{method} cannot be bootstrapped; reporting its analytic interval")
            boot = 0
        estimate = facade.run_estimate(data_path, method, delta, bootstrap=boot, seed=seed,
                                       options=options, columns=ColumnMap(), normalize=normalize)
    except FIT_FAILURES as e:
        fail(e)

    click.echo(f"✓ {estimate.method}: {estimate.point:.6g}")
    if estimate.se is not None:
        click.echo(f"  SE: {estimate.se:.4g}")
        click.echo(f"  95% CI: [{estimate.ci[0]:.6g}, {estimate.ci[1]:.6g}]")
    for key, value in sorted(estimate.diagnostics.items()):
        click.echo(f"  {key}: {value}")


@click.command('true-effect')
@click.option('--scenario', required=True, help='Scenario name')
@click.option('--delta', type=float, default=1.0, help='Exposure shift')
@click.option('--oracle-n', type=int, default=None, help='Monte Carlo oracle size')
@click.option('--mode', type=click.Choice(['shift', 'derivative', 'ols_slope']), default='shift')
@click.option('--seed', type=int, default=0, help='Oracle seed')
@with_appcontext
def true_effect_command(scenario, delta, oracle_n, mode, seed):
    """Compute a scenario's oracle effect."""
    oracle_n = oracle_n or current_app.config.get('ORACLE_SAMPLE_SIZE')
    try:
        truth = facade.run_true_effect(scenario, delta, oracle_n, mode, seed)
    except SpatialCausalError as e:
        fail(e)

    click.echo(f"✓ {scenario} ({mode}, delta={delta:g}): {truth.value:.6g}")
    click.echo(f"  Method: {truth.method}")
    if truth.mc_se is not None:
        click.echo(f"  MC SE: {truth.mc_se:.2e}")


@click.command('split-check')
@click.option('--n', 'n', type=int, required=True, help='Number of uniform locations')
@click.option('--q', 'q', type=float, required=True, help='Ball radius')
@click.option('--r', 'r', type=float, required=True, help='Dependence radius')
@click.option('--seed', type=int, default=0, help='Location and split seed')
@with_appcontext
def split_check_command(n, q, r, seed):
    """Draw a block split and verify its geometry."""
    try:
        split, report = facade.split_check(n, q, r, seed)
    except SpatialCausalError as e:
        fail(e)

    marker = "✓" if report.satisfied else "✗"
    click.echo(f"{marker} Split geometry {'holds' if report.satisfied else 'violated'}")
    click.echo(f"  |M|: {report.fit_size}")
    click.echo(f"  |M^C|: {report.eval_size}")
    click.echo(f"  Disjoint: {report.disjoint}")
    click.echo(f"  Max distance to centre: {report.max_fit_distance:.4f} (q={report.q})")
    click.echo(f"  Min cross distance: {report.min_cross_distance:.4f} (r={report.r})")
    click.echo(f"  Attempts: {split.attempts}")
    if not report.satisfied:
        raise SystemExit(EXIT_NUMERICAL)


def init_app(app):
    """Register CLI commands with Flask app."""
    app.cli.add_command(simulate_command)
    app.cli.add_command(estimate_command)
    app.cli.add_command(true_effect_command)
    app.cli.add_command(split_check_command)
