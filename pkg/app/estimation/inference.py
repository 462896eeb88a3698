"""
Bootstrap intervals and replicate-level summaries.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from app.estimation.errors import FIT_FAILURES, BootstrapFailureError, InvalidArgumentError
from app.estimation.estimators.base import ShiftEstimate, normal_interval

logger = logging.getLogger(__name__)

BOOTSTRAP_RESAMPLES = 120
MAX_FAILURE_FRACTION = 0.2
MIN_NORMALITY_SAMPLE = 100
SKEW_LIMIT = 0.35
KURTOSIS_LIMIT = 0.7
METRICS_COLUMNS = ("scenario", "n", "method", "replicates", "bias", "sd", "mse", "coverage")


@dataclass(frozen=True)
class BootstrapResult:
    """Normal-approximation bootstrap interval centred at the full-data estimate."""

    point: float
    boot_sd: float
    ci: tuple
    resamples: int
    failures: int = 0

    def attach(self, estimate):
        """The estimate with this interval replacing any analytic one."""
        return ShiftEstimate(
            delta=estimate.delta,
            point=estimate.point,
            method=estimate.method,
            se=self.boot_sd,
            ci=self.ci,
            diagnostics={**estimate.diagnostics, "bootstrap_failures": self.failures},
        )


def _resample(dataset, estimator, rng):
    indices = rng.integers(dataset.n, size=dataset.n)
    try:
        return estimator(dataset.subset(indices), rng).point
    except FIT_FAILURES as e:
        logger.debug("Bootstrap resample failed: %s", e)
        return None


def bootstrap_ci(dataset, estimator, B=BOOTSTRAP_RESAMPLES, rng=None, point=None, n_jobs=1):
    """
    Row bootstrap of an estimator.

    Args:
        dataset (Dataset): full sample
        estimator (callable): (dataset, rng) -> ShiftEstimate
        B (int): number of resamples, at least 2
        rng (numpy.random.Generator): one independent substream per resample
        point (float): full-data estimate; computed when not given
        n_jobs (int): joblib workers

    Returns:
        BootstrapResult: interval point +/- 1.96 * boot_sd

    Raises:
        BootstrapFailureError: more than 20% of resamples failed
    """
    if B < 2:
        raise InvalidArgumentError("The bootstrap needs at least 2 resamples.")
    rng = rng if rng is not None else np.random.default_rng(0)
    point_rng, *resample_rngs = rng.spawn(B + 1)
    if point is None:
        point = estimator(dataset, point_rng).point

    draws = Parallel(n_jobs=n_jobs)(
        delayed(_resample)(dataset, estimator, child) for child in resample_rngs
    )
    estimates = [d for d in draws if d is not None]
    failures = B - len(estimates)
    if failures > MAX_FAILURE_FRACTION * B or len(estimates) < 2:
        raise BootstrapFailureError(
            f"{failures} of {B} bootstrap resamples failed.",
            estimates=estimates, failures=failures, resamples=B,
        )
    boot_sd = float(np.std(estimates, ddof=1))
    return BootstrapResult(point=float(point), boot_sd=boot_sd, ci=normal_interval(point, boot_sd),
                           resamples=len(estimates), failures=failures)


@dataclass(frozen=True)
class MetricsRow:
    """
    Bias, SD, MSE and coverage of one method in one (scenario, n) cell.

    Attributes:
        scenario (str): scenario name
        n (int): sample size
        method (str): estimator label
        replicates (int): successful replicates
        bias (float): mean(point) - truth
        sd (float): sample SD of the points
        mse (float): mean((point - truth)^2)
        coverage (float): share of intervals containing the truth, or None
        failures (int): failed replicates
        note (str): marker such as a positivity violation or a failure flag
    """

    scenario: str
    n: int
    method: str
    replicates: int
    bias: float = None
    sd: float = None
    mse: float = None
    coverage: float = None
    failures: int = 0
    note: str = ""

    def __post_init__(self):
        if self.coverage is not None and not 0.0 <= self.coverage <= 1.0:
            raise InvalidArgumentError("Coverage must lie in [0, 1].")

    def to_dict(self):
        return {
            "scenario": self.scenario,
            "n": self.n,
            "method": self.method,
            "replicates": self.replicates,
            "bias": self.bias,
            "sd": self.sd,
            "mse": self.mse,
            "coverage": self.coverage,
            "failures": self.failures,
            "note": self.note,
        }


def summarize(estimates, truth, scenario="", n=0, method=None, failures=0, note=""):
    """
    Reduce replicate estimates to a MetricsRow.

    Coverage is reported only when every estimate carries an interval.
    """
    if len(estimates) < 2:
        raise InvalidArgumentError("Summaries need at least 2 estimates.")
    target = truth.value if hasattr(truth, "value") else float(truth)
    points = np.sort(np.array([e.point for e in estimates], dtype=float))
    errors = points - target
    coverage = None
    if all(e.ci is not None for e in estimates):
        covered = sum(e.ci[0] <= target <= e.ci[1] for e in estimates)
        coverage = covered / len(estimates)
    return MetricsRow(
        scenario=scenario,
        n=n,
        method=method or estimates[0].method,
        replicates=len(estimates),
        bias=float(np.mean(errors)),
        sd=float(np.std(points, ddof=1)),
        mse=float(np.mean(errors ** 2)),
        coverage=coverage,
        failures=failures,
        note=note,
    )


@dataclass(frozen=True)
class NormalityReport:
    """Moment and quantile checks of standardized replicate estimates."""

    count: int
    skewness: float
    excess_kurtosis: float
    qq_deviation: float
    mean_standardized_error: float
    degenerate: bool
    non_normal: bool


def normality_diagnostics(estimates, truth=None):
    """
    Skewness, excess kurtosis and the largest gap between sorted standardized
    estimates and standard normal quantiles.

    Accepts ShiftEstimates or plain numbers.
    """
    values = np.array([getattr(e, "point", e) for e in estimates], dtype=float)
    if len(values) < MIN_NORMALITY_SAMPLE:
        raise InvalidArgumentError(f"Normality checks need at least {MIN_NORMALITY_SAMPLE} estimates.")
    sd = float(np.std(values, ddof=1))
    if sd == 0 or not math.isfinite(sd):
        return NormalityReport(count=len(values), skewness=math.nan, excess_kurtosis=math.nan,
                               qq_deviation=math.nan, mean_standardized_error=math.nan,
                               degenerate=True, non_normal=True)

    standardized = np.sort((values - values.mean()) / sd)
    levels = (np.arange(1, len(values) + 1) - 0.5) / len(values)
    qq_deviation = float(np.max(np.abs(standardized - stats.norm.ppf(levels))))
    skewness = float(stats.skew(values))
    excess_kurtosis = float(stats.kurtosis(values, fisher=True))
    target = None if truth is None else (truth.value if hasattr(truth, "value") else float(truth))
    mean_error = math.nan if target is None else float((values.mean() - target) / sd)
    return NormalityReport(
        count=len(values),
        skewness=skewness,
        excess_kurtosis=excess_kurtosis,
        qq_deviation=qq_deviation,
        mean_standardized_error=mean_error,
        degenerate=False,
        non_normal=abs(skewness) >= SKEW_LIMIT or abs(excess_kurtosis) >= KURTOSIS_LIMIT,
    )

