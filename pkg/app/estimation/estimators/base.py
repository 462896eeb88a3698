"""
Result types shared by every shift estimator.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from app.estimation.errors import InvalidArgumentError

Z_95 = 1.96


@dataclass(frozen=True)
class ShiftEstimate:
    """
    Estimate of the shift effect E[Y(X + delta) - Y(X)].

    Attributes:
        delta (float): exposure shift
        point (float): effect estimate
        method (str): estimator label
        se (float): standard error, when available
        ci (tuple): (lo, hi) 95% interval, when available
        diagnostics (dict): estimator-specific detail (gamma, ESS, extrapolation counts)
    """

    delta: float
    point: float
    method: str
    se: float = None
    ci: tuple = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.point):
            raise InvalidArgumentError(f"{self.method} produced a non-finite estimate.")
        if self.ci is not None:
            lo, hi = self.ci
            if not lo <= self.point <= hi:
                raise InvalidArgumentError("A confidence interval must contain its point estimate.")

    def with_se(self, se):
        """Attach a standard error and its normal-approximation interval."""
        se = float(se)
        if not math.isfinite(se) or se < 0:
            return self
        return replace(self, se=se, ci=normal_interval(self.point, se))

    def to_dict(self):
        return {
            "delta": self.delta,
            "point": self.point,
            "method": self.method,
            "se": self.se,
            "ci": list(self.ci) if self.ci is not None else None,
            "diagnostics": {key: _plain(value) for key, value in self.diagnostics.items()},
        }


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    return value


def normal_interval(point, se):
    return (point - Z_95 * se, point + Z_95 * se)


@dataclass(frozen=True)
class NuisancePair:
    """An outcome model and a density ratio built for the same shift."""

    outcome: object
    ratio: object

    def check(self, delta):
        if self.ratio.delta != float(delta):
            raise InvalidArgumentError(
                f"Density ratio was built for delta={self.ratio.delta}, not {delta}."
            )
