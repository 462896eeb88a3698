"""
Spatial primitives: location sampling, distances, locally covariant random
fields and spatial block splits for cross-fitting.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from app.estimation.errors import DegenerateSplitError, InvalidArgumentError

logger = logging.getLogger(__name__)

UNIT_SQUARE = ((-1.0, 1.0), (-1.0, 1.0))
DOMAIN_DIAMETER = 2.0 * math.sqrt(2.0)
SPLIT_ATTEMPTS = 50
FIELD_RESOLUTION = 200
FIELD_CHUNK = 2048


def _frozen(values, dtype=float):
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class LocationSet:
    """
    Two-dimensional point locations inside a rectangular domain.

    Attributes:
        points (ndarray): (n, 2) coordinates
        domain (tuple): ((xmin, xmax), (ymin, ymax)) bounds every point lies in
    """

    points: np.ndarray
    domain: tuple = UNIT_SQUARE

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise InvalidArgumentError("Locations must be an (n, 2) array.")
        if points.shape[0] < 1:
            raise InvalidArgumentError("A location set needs at least one point.")
        if not np.all(np.isfinite(points)):
            raise InvalidArgumentError("Location coordinates must be finite.")
        (xmin, xmax), (ymin, ymax) = self.domain
        inside = ((points[:, 0] >= xmin) & (points[:, 0] <= xmax)
                  & (points[:, 1] >= ymin) & (points[:, 1] <= ymax))
        if not np.all(inside):
            raise InvalidArgumentError("Every location must lie inside the declared domain.")
        object.__setattr__(self, "points", _frozen(points))

    @classmethod
    def bounding(cls, points):
        """Wrap arbitrary coordinates, declaring their bounding box as the domain."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] < 1:
            raise InvalidArgumentError("Locations must be a non-empty (n, 2) array.")
        domain = ((float(points[:, 0].min()), float(points[:, 0].max())),
                  (float(points[:, 1].min()), float(points[:, 1].max())))
        return cls(points, domain)

    @property
    def n(self):
        return self.points.shape[0]

    def take(self, indices):
        """Return the locations at the given indices (repeats allowed)."""
        return LocationSet(self.points[np.asarray(indices, dtype=int)], self.domain)


@dataclass(frozen=True)
class LocalField:
    """Values of a compactly correlated random field at a set of locations."""

    values: np.ndarray
    kernel_radius: float

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))


@dataclass(frozen=True)
class SplitReport:
    """Brute-force geometry check of a BlockSplit."""

    fit_size: int
    eval_size: int
    disjoint: bool
    max_fit_distance: float
    min_cross_distance: float
    q: float
    r: float

    @property
    def satisfied(self):
        return (self.disjoint
                and self.max_fit_distance <= self.q + 1e-12
                and self.min_cross_distance >= self.r)


@dataclass(frozen=True)
class BlockSplit:
    """
    A ball of fitting points and its independent complement.

    Attributes:
        fit_indices (ndarray): indices within distance q of the seed point
        eval_indices (ndarray): indices at distance >= r from every fitting point
        seed_point_index (int): index of the ball's centre
        q (float): ball radius
        r (float): dependence radius
    """

    fit_indices: np.ndarray
    eval_indices: np.ndarray
    seed_point_index: int
    q: float
    r: float
    attempts: int = field(default=1, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "fit_indices", _frozen(self.fit_indices, int))
        object.__setattr__(self, "eval_indices", _frozen(self.eval_indices, int))

    def verify(self, locs):
        """Check the split invariants against every (fit, eval) pair."""
        points = locs.points
        fit = points[self.fit_indices]
        held_out = points[self.eval_indices]
        seed = points[self.seed_point_index][None, :]
        max_fit = float(cdist(seed, fit).max()) if len(fit) else 0.0
        if len(fit) and len(held_out):
            min_cross = float(cdist(fit, held_out).min())
        else:
            min_cross = math.inf
        disjoint = not np.intersect1d(self.fit_indices, self.eval_indices).size
        return SplitReport(
            fit_size=len(fit),
            eval_size=len(held_out),
            disjoint=bool(disjoint),
            max_fit_distance=max_fit,
            min_cross_distance=min_cross,
            q=self.q,
            r=self.r,
        )


def sample_locations(n, rng, domain=UNIT_SQUARE):
    """
    Draw n i.i.d. uniform locations on a rectangular domain.

    Args:
        n (int): number of locations, at least 1
        rng (numpy.random.Generator): seeded generator

    Returns:
        LocationSet: the sampled locations
    """
    if n < 1:
        raise InvalidArgumentError("Number of locations must be at least 1.")
    (xmin, xmax), (ymin, ymax) = domain
    points = np.column_stack([
        rng.uniform(xmin, xmax, size=n),
        rng.uniform(ymin, ymax, size=n),
    ])
    return LocationSet(points, domain)


def pairwise_distance(a, b):
    """Euclidean distance between two points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.hypot(*(a - b)))


def quartic_kernel(distance, support):
    """Biweight bump, exactly zero at and beyond `support`."""
    u = np.asarray(distance, dtype=float) / support
    return np.where(u < 1.0, (1.0 - u ** 2) ** 2, 0.0)


def moving_average_field(locs, kernel_radius, noise_sd, rng, resolution=FIELD_RESOLUTION):
    """
    Spatial moving average of lattice white noise with a compact kernel.

    The kernel support is kernel_radius / 2, so two locations further apart
    than kernel_radius share no lattice cells and are independent. Each value
    is normalised by its own kernel mass, making every value N(0, noise_sd^2).

    Args:
        locs (LocationSet): where to evaluate the field
        kernel_radius (float): distance beyond which covariance is zero
        noise_sd (float): marginal standard deviation of the field
        rng (numpy.random.Generator): seeded generator
        resolution (int): lattice cells per unit length

    Returns:
        LocalField: field values at each location
    """
    if kernel_radius <= 0:
        raise InvalidArgumentError("Kernel radius must be positive.")
    if noise_sd < 0:
        raise InvalidArgumentError("Field noise SD must be non-negative.")
    cell = 1.0 / resolution
    if kernel_radius / cell < 10:
        raise InvalidArgumentError("Lattice needs at least 10 cells per kernel radius.")

    support = kernel_radius / 2.0
    points = locs.points
    reach = int(math.ceil(support / cell)) + 1
    nearest = np.floor(points / cell).astype(int)
    lower = nearest.min(axis=0) - reach
    upper = nearest.max(axis=0) + reach
    noise = rng.standard_normal(size=tuple(upper - lower + 1))

    offsets = np.arange(-reach, reach + 1)
    off_x, off_y = np.meshgrid(offsets, offsets, indexing="ij")
    off_x, off_y = off_x.ravel(), off_y.ravel()

    values = np.empty(locs.n)
    for start in range(0, locs.n, FIELD_CHUNK):
        block = slice(start, start + FIELD_CHUNK)
        cells_x = nearest[block, 0][:, None] + off_x[None, :]
        cells_y = nearest[block, 1][:, None] + off_y[None, :]
        dx = (cells_x + 0.5) * cell - points[block, 0][:, None]
        dy = (cells_y + 0.5) * cell - points[block, 1][:, None]
        weights = quartic_kernel(np.hypot(dx, dy), support)
        draws = noise[cells_x - lower[0], cells_y - lower[1]]
        mass = np.sqrt((weights ** 2).sum(axis=1))
        values[block] = noise_sd * (weights * draws).sum(axis=1) / mass
    return LocalField(values=values, kernel_radius=float(kernel_radius))


def spatial_block_split(locs, q, r, rng, max_attempts=SPLIT_ATTEMPTS):
    """
    Split locations into a ball M of radius q around a random point and its
    independent complement: every point at distance >= r from all of M.

    The seed point is redrawn up to `max_attempts` times when the complement
    comes out empty.

    Raises:
        InvalidArgumentError: q <= 0 or r < 0
        DegenerateSplitError: no seed point produced a non-empty complement
    """
    if q <= 0:
        raise InvalidArgumentError("Ball radius q must be positive.")
    if r < 0:
        raise InvalidArgumentError("Dependence radius r must be non-negative.")

    points = locs.points
    all_indices = np.arange(locs.n)
    for attempt in range(1, max_attempts + 1):
        seed_index = int(rng.integers(locs.n))
        to_seed = np.hypot(*(points - points[seed_index]).T)
        fit = all_indices[to_seed <= q]
        others = all_indices[to_seed > q]
        if others.size and r > 0:
            nearest, _ = cKDTree(points[fit]).query(points[others])
            held_out = others[nearest >= r]
        else:
            held_out = others
        if held_out.size:
            logger.debug("Block split after %d attempt(s): |M|=%d, |M^C|=%d",
                         attempt, fit.size, held_out.size)
            return BlockSplit(fit, held_out, seed_index, float(q), float(r), attempts=attempt)

    raise DegenerateSplitError(
        f"No seed point gave a non-empty complement after {max_attempts} attempts "
        f"(q={q}, r={r})."
    )


def block_radius_for_size(locs, fraction, anchors=25):
    """
    Ball radius whose typical ball holds about `fraction` of the locations.

    Takes the median, over evenly spaced anchor points, of the distance to the
    ceil(fraction * n)-th nearest neighbour.
    """
    if not 0 < fraction <= 1:
        raise InvalidArgumentError("Target fraction must lie in (0, 1].")
    k = max(1, int(math.ceil(fraction * locs.n)))
    anchor_indices = np.linspace(0, locs.n - 1, num=min(anchors, locs.n)).astype(int)
    distances, _ = cKDTree(locs.points).query(locs.points[anchor_indices], k=k)
    distances = np.asarray(distances).reshape(len(anchor_indices), -1)
    return float(np.median(distances[:, -1]))
