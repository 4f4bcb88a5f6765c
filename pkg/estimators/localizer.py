"""Alternating-projection multi-user localization for a fixed front end."""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from arrays.geometry import SourcePosition
from estimators.likelihood import PositionHypothesisSet, EffectiveSteering, ap_objective_batch, log_likelihood
from internal.errors import NumericalError

logger = logging.getLogger(__name__)

# points per searched axis in every refinement level (center included)
REFINE_POINTS = 7
# candidates evaluated per objective call
CHUNK_SIZE = 4096
# relative margin a candidate must beat the incumbent by
IMPROVEMENT_TOL = 1e-12


@dataclass(frozen=True)
class SearchGrid:
    """Coarse-to-fine search region.

    Args:
        distance_range (tuple): (min, max) distance in meters, min > 0.
        azimuth_range (tuple): (min, max) azimuth in radians.
        elevation_range (tuple, optional): (min, max) elevation; None fixes it to fix_elevation.
        n_distance (int): Coarse points along distance.
        n_azimuth (int): Coarse points along azimuth.
        n_elevation (int): Coarse points along elevation when it is searched.
        refine_levels (int): Refinement passes; each shrinks the window by 1/3.
        fix_elevation (float): Elevation used when elevation_range is None.
    """
    distance_range: tuple
    azimuth_range: tuple
    elevation_range: tuple = None
    n_distance: int = 60
    n_azimuth: int = 90
    n_elevation: int = 1
    refine_levels: int = 2
    fix_elevation: float = math.pi / 2

    def __post_init__(self):
        if not self.distance_range[0] > 0:
            raise ValueError("the search region must exclude the array reference point (d > 0)")
        for name, bounds, count in self._axes():
            if bounds is None:
                continue
            if not bounds[0] < bounds[1]:
                raise ValueError(f"{name} range {bounds} is empty")
            if int(count) < 2:
                raise ValueError(f"{name} needs at least 2 coarse points, got {count}")
        if int(self.refine_levels) < 0:
            raise ValueError("refine_levels must be non-negative")

    def _axes(self):
        return (("distance", tuple(self.distance_range), self.n_distance),
                ("azimuth", tuple(self.azimuth_range), self.n_azimuth),
                ("elevation", None if self.elevation_range is None else tuple(self.elevation_range),
                 self.n_elevation))

    def coarse_axes(self):
        axes = []
        for _, bounds, count in self._axes():
            if bounds is None:
                axes.append(np.array([float(self.fix_elevation)]))
            else:
                axes.append(np.linspace(bounds[0], bounds[1], int(count)))
        return axes

    @property
    def coarse_steps(self):
        steps = []
        for _, bounds, count in self._axes():
            steps.append(0.0 if bounds is None else (bounds[1] - bounds[0]) / (int(count) - 1))
        return np.array(steps)

    @property
    def final_resolution(self):
        """Per-axis (distance, azimuth, elevation) spacing of the finest level."""
        return self.coarse_steps / 3.0 ** int(self.refine_levels)

    def bounds(self):
        return [(ax[0], ax[-1]) for ax in self.coarse_axes()]


class Initialization(NamedTuple):
    hypotheses: PositionHypothesisSet
    objectives: tuple
    degenerate: bool


@dataclass(frozen=True)
class LocalizationResult:
    estimates: PositionHypothesisSet
    per_iteration_track: list = field(default_factory=list, repr=False)
    objective_track: list = field(default_factory=list, repr=False)
    iterations_used: int = 0
    converged: bool = False
    degenerate: bool = False


def pointwise(fn):
    """Lift a scalar objective SourcePosition -> float to the batch form grid_maximize expects."""
    def batch(distance, azimuth, elevation):
        return np.fromiter((fn(SourcePosition(float(d), float(a), float(e)))
                            for d, a, e in zip(distance, azimuth, elevation)),
                           dtype=float, count=len(distance))
    return batch


def _evaluate(objective, d, az, el):
    values = np.empty(d.size)
    for start in range(0, d.size, CHUNK_SIZE):
        stop = start + CHUNK_SIZE
        values[start:stop] = objective(d[start:stop], az[start:stop], el[start:stop])
    values[~np.isfinite(values)] = -np.inf
    return values


def _scan(objective, axes):
    d, az, el = (g.ravel() for g in np.meshgrid(*axes, indexing="ij"))
    values = _evaluate(objective, d, az, el)
    k = int(np.argmax(values))
    return np.array([d[k], az[k], el[k]]), values[k]


def _better(value, incumbent):
    return value > incumbent + IMPROVEMENT_TOL * abs(incumbent)


def grid_search(objective, grid, incumbent=None):
    """
    Coarse exhaustive scan followed by local refinement.

    Args:
        objective (callable): Batch objective (distance, azimuth, elevation arrays) -> values.
        grid (SearchGrid): Search region and resolution.
        incumbent (SourcePosition, optional): Kept unless a candidate is strictly better.

    Returns:
        tuple: (SourcePosition, objective value).
    """
    axes = grid.coarse_axes()
    best, best_value = _scan(objective, axes)
    if best_value == -np.inf:
        raise NumericalError("objective is non-finite at every grid point")

    steps = grid.coarse_steps
    lows, highs = zip(*grid.bounds())
    offsets = np.arange(-(REFINE_POINTS // 2), REFINE_POINTS // 2 + 1) / (REFINE_POINTS // 2)
    for level in range(int(grid.refine_levels)):
        window = steps / 3.0 ** level
        local = [np.unique(np.clip(best[i] + offsets * window[i], lows[i], highs[i])) if window[i] > 0
                 else np.array([best[i]]) for i in range(3)]
        candidate, value = _scan(objective, local)
        if _better(value, best_value):
            best, best_value = candidate, value

    if incumbent is not None:
        current = _evaluate(objective, np.array([incumbent.distance]), np.array([incumbent.azimuth]),
                            np.array([incumbent.elevation]))[0]
        if not _better(best_value, current):
            return incumbent, current
    return SourcePosition(float(best[0]), float(best[1]), float(best[2])), float(best_value)


def grid_maximize(objective, grid):
    """Best grid hypothesis of a batch objective; ties go to the smallest distance, then azimuth."""
    return grid_search(objective, grid)[0]


def _ap_batch(others_projector, batch, receiver):
    def objective(d, az, el):
        values, degenerate = ap_objective_batch(d, az, el, others_projector, batch, receiver)
        return np.where(degenerate, -np.inf, values)
    return objective


def initialize_positions(batch, receiver, n_users, grid):
    """
    Greedy initialization: add users one at a time against the accumulated projector.

    Args:
        batch (SnapshotBatch): Observations.
        receiver (Receiver): Front end in force.
        n_users (int): Number of users M.
        grid (SearchGrid): Search region.

    Returns:
        Initialization: Hypotheses, per-user objective values and a degeneracy flag.
    """
    if int(n_users) < 1:
        raise ValueError("at least one user is required")
    found = PositionHypothesisSet()
    projector = None
    objectives = []
    degenerate = False
    total_energy = batch.n_snapshots * float(np.real(np.trace(batch.covariance)))
    for m in range(int(n_users)):
        p, value = grid_search(_ap_batch(projector, batch, receiver), grid)
        if m > 0 and value <= 1e-10 * total_energy:
            degenerate = True
            logger.warning(f"user {m}: residual collapsed, data already explained by {m} hypotheses")
        column = receiver.effective_steering(p.distance, p.azimuth, p.elevation)
        residual = column if projector is None else column - projector @ column
        # P[S] <- P[S] + P[S_bar]
        update = residual @ residual.conj().T / float(np.real(residual.conj().T @ residual)[0, 0])
        projector = update if projector is None else projector + update
        found = found.append(p)
        objectives.append(value)
    return Initialization(found, tuple(objectives), degenerate)


def _moved(old, new, resolution):
    delta = np.abs(np.array([new.distance - old.distance, new.azimuth - old.azimuth,
                             new.elevation - old.elevation]))
    return bool(np.any(delta > resolution * (1.0 + 1e-9)))


def ap_localize(batch, receiver, n_users, grid, max_iters, init=None):
    """
    Alternating-projection localization with the front end held fixed.

    Args:
        batch (SnapshotBatch): Observations.
        receiver (Receiver): Front end in force.
        n_users (int): Number of users M.
        grid (SearchGrid): Search region.
        max_iters (int): Outer iteration cap K; 0 returns the initialization.
        init (Initialization or PositionHypothesisSet, optional): Skips the greedy initialization.

    Returns:
        LocalizationResult: Final estimates and the per-iteration track.
    """
    if int(max_iters) < 0:
        raise ValueError("max_iters must be non-negative")
    degenerate = False
    if init is None:
        init = initialize_positions(batch, receiver, n_users, grid)
    if isinstance(init, Initialization):
        degenerate = init.degenerate
        init = init.hypotheses
    if len(init) != int(n_users):
        raise ValueError(f"initialization holds {len(init)} hypotheses for {n_users} users")

    estimates = init
    track = [estimates]
    objective_track = [log_likelihood(estimates, receiver, batch)]
    resolution = grid.final_resolution
    converged = False
    iterations = 0
    for k in range(int(max_iters)):
        moved = False
        for m in range(len(estimates)):
            others = estimates.without(m)
            projector = EffectiveSteering.build(others, receiver).projector() if len(others) else None
            p, _ = grid_search(_ap_batch(projector, batch, receiver), grid, incumbent=estimates[m])
            moved = moved or _moved(estimates[m], p, resolution)
            estimates = estimates.replace(m, p)
        iterations = k + 1
        track.append(estimates)
        objective_track.append(log_likelihood(estimates, receiver, batch))
        logger.debug(f"AP iteration {iterations}: objective {objective_track[-1]:.6g}")
        if not moved:
            converged = True
            break
    return LocalizationResult(estimates, track, objective_track, iterations, converged, degenerate)
