import math

import numpy as np
import pytest

from app.estimation.errors import BootstrapFailureError, DegenerateDesignError, InvalidArgumentError
from app.estimation.estimators import ShiftEstimate, estimate_ols
from app.estimation.inference import (BootstrapResult, MetricsRow, bootstrap_ci,
                                      normality_diagnostics, summarize)


def ols(dataset, rng):
    return estimate_ols(dataset, 1.0)


def flaky(rate):
    def estimator(dataset, rng):
        if rng.random() < rate:
            raise DegenerateDesignError("resample failed")
        return estimate_ols(dataset, 1.0)
    return estimator


def test_bootstrap_sd_matches_classical_se(linear_data):
    result = bootstrap_ci(linear_data, ols, B=200, rng=np.random.default_rng(0))
    analytic = estimate_ols(linear_data, 1.0).se
    assert result.boot_sd == pytest.approx(analytic, rel=0.35)
    assert result.ci[0] < result.point < result.ci[1]
    assert result.resamples == 200


def test_bootstrap_is_reproducible(linear_data):
    a = bootstrap_ci(linear_data, ols, B=20, rng=np.random.default_rng(5))
    b = bootstrap_ci(linear_data, ols, B=20, rng=np.random.default_rng(5))
    assert a == b


def test_bootstrap_centres_on_given_point(linear_data):
    result = bootstrap_ci(linear_data, ols, B=20, rng=np.random.default_rng(1), point=0.5)
    assert (result.ci[0] + result.ci[1]) / 2 == pytest.approx(0.5)


def test_bootstrap_tolerates_a_few_failures(linear_data):
    result = bootstrap_ci(linear_data, flaky(0.1), B=100, rng=np.random.default_rng(2), point=1.0)
    assert 0 < result.failures <= 20
    assert result.resamples == 100 - result.failures


def test_bootstrap_gives_up_on_many_failures(linear_data):
    with pytest.raises(BootstrapFailureError) as info:
        bootstrap_ci(linear_data, flaky(0.6), B=50, rng=np.random.default_rng(3), point=1.0)
    assert info.value.failures > 10
    assert info.value.resamples == 50
    assert len(info.value.estimates) == 50 - info.value.failures


def test_bootstrap_needs_two_resamples(linear_data):
    with pytest.raises(InvalidArgumentError):
        bootstrap_ci(linear_data, ols, B=1)


def test_attach_replaces_interval():
    estimate = ShiftEstimate(delta=1.0, point=1.0, method="plm_rbf").with_se(0.1)
    attached = BootstrapResult(point=1.0, boot_sd=0.2, ci=(0.608, 1.392), resamples=10).attach(estimate)
    assert attached.se == 0.2
    assert attached.ci == (0.608, 1.392)
    assert attached.diagnostics["bootstrap_failures"] == 0


def estimates_at(points, half_width=None):
    return [ShiftEstimate(delta=1.0, point=p, method="m",
                          ci=None if half_width is None else (p - half_width, p + half_width))
            for p in points]


def test_summarize_moments():
    row = summarize(estimates_at([0.9, 1.0, 1.1, 1.2]), 1.0, scenario="linear", n=100)
    assert row.bias == pytest.approx(0.05)
    assert row.sd == pytest.approx(np.std([0.9, 1.0, 1.1, 1.2], ddof=1))
    assert row.mse == pytest.approx(np.mean([0.01, 0.0, 0.01, 0.04]))
    assert row.coverage is None
    assert row.method == "m"


def test_summarize_coverage():
    row = summarize(estimates_at([0.9, 1.0, 1.5, 2.0], half_width=0.2), 1.0)
    assert row.coverage == 0.5


def test_summarize_is_order_free():
    points = [0.3, 1.7, 0.9, 1.1, 1.4]
    a = summarize(estimates_at(points), 1.0)
    b = summarize(estimates_at(points[::-1]), 1.0)
    assert a == b


def test_summarize_needs_two_estimates():
    with pytest.raises(InvalidArgumentError):
        summarize(estimates_at([1.0]), 1.0)


def test_metrics_row_coverage_range():
    with pytest.raises(InvalidArgumentError):
        MetricsRow(scenario="linear", n=10, method="ols", replicates=2, coverage=1.5)


def test_normality_of_gaussian_estimates():
    values = np.random.default_rng(0).normal(1.0, 0.1, size=500)
    report = normality_diagnostics(values, truth=1.0)
    assert not report.non_normal
    assert abs(report.mean_standardized_error) < 0.2
    assert report.qq_deviation < 1.0


def test_normality_flags_skewed_estimates():
    values = np.random.default_rng(0).exponential(size=500)
    assert normality_diagnostics(values).non_normal


def test_normality_of_constant_estimates():
    report = normality_diagnostics(np.ones(200))
    assert report.degenerate
    assert math.isnan(report.skewness)


def test_normality_needs_enough_estimates():
    with pytest.raises(InvalidArgumentError):
        normality_diagnostics(np.zeros(50))


def test_bootstrap_counts_learner_value_errors(linear_data):
    def estimator(dataset, rng):
        if rng.random() < 0.1:
            raise ValueError("Input contains NaN")
        return estimate_ols(dataset, 1.0)

    result = bootstrap_ci(linear_data, estimator, B=100, rng=np.random.default_rng(2), point=1.0)
    assert 0 < result.failures <= 20
