"""Closed-form beam focusing: centroid phases and their projection onto the constraint set."""

import logging

import numpy as np

from arrays.frontend import AnalogWeights, ArchitectureKind, Constraint, lorentzian_project
from arrays.geometry import element_distances
from signals.channel import phase_shift, steering_vectors

logger = logging.getLogger(__name__)


def position_arrays(positions):
    """(distance, azimuth, elevation) arrays of any iterable of SourcePosition."""
    positions = list(positions)
    if not positions:
        raise ValueError("at least one focus position is required")
    return (np.array([p.distance for p in positions]),
            np.array([p.azimuth for p in positions]),
            np.array([p.elevation for p in positions]))


def centroid_phases(positions, layout, cfg, waveguide=None):
    """
    Per-element phases that co-phase the hypothesized users on average.

    psi_il = mean_m v_{m,il} + rho_il beta_i, where v is the unwrapped propagation
    phase. The waveguide term is dropped for hybrid arrays.

    Args:
        positions: Hypothesized user positions (M >= 1).
        layout (ArrayLayout): Array geometry.
        cfg (SimulationConfig): Carrier and propagation constants.
        waveguide (WaveguideModel, optional): Microstrip model of a DMA.

    Returns:
        np.ndarray: (N,) phases in radians, flat element order.
    """
    d = element_distances(layout, *position_arrays(positions))
    psi = phase_shift(d, cfg).mean(axis=1)
    if d.shape[1] > 1:
        logger.debug("centroid phases average unwrapped propagation phases")
    if waveguide is not None:
        psi = psi + waveguide.phase_offsets()
    return psi


def projection_tuning(positions, layout, cfg, architecture):
    """
    Phase-only weights exp(j psi*) for hybrid arrays, their Lorentzian image for DMAs.

    Args:
        positions: Hypothesized user positions.
        layout (ArrayLayout): Array geometry.
        cfg (SimulationConfig): Carrier and propagation constants.
        architecture (Architecture): Target front end.

    Returns:
        AnalogWeights: Feasible block-sparse weights (identity for fully digital).
    """
    if architecture.kind is ArchitectureKind.FULLY_DIGITAL:
        return AnalogWeights.identity(layout.n_elements)
    psi = centroid_phases(positions, layout, cfg, architecture.waveguide)
    taps = np.exp(1j * psi).reshape(layout.n_rows, layout.n_cols)
    if architecture.constraint is Constraint.LORENTZIAN:
        taps = lorentzian_project(taps)
    return AnalogWeights.from_taps(taps, architecture.constraint)


def beamfocus_objective(receiver, positions):
    """Relaxed tuning objective tr(Q H G G^H H^H Q^H) = sum_m ||Q H g_m||^2."""
    outputs = receiver.effective_steering(*position_arrays(positions))
    return float(np.sum(np.abs(outputs) ** 2))


def focusing_gain_map(receiver, xs, ys):
    """
    Normalized power ||Q H s(p)||^2 / ||s(p)||^2 over an XY grid in the z = 0 plane.

    Args:
        receiver (Receiver): Front end whose focus is inspected.
        xs (array-like): Grid x coordinates in meters.
        ys (array-like): Grid y coordinates in meters.

    Returns:
        np.ndarray: (len(ys), len(xs)) gains; cells with x <= 0 are NaN.
    """
    x, y = np.meshgrid(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    gain = np.full(x.shape, np.nan)
    valid = x > 0
    if not valid.any():
        return gain
    d = np.hypot(x[valid], y[valid])
    az = np.arctan2(y[valid], x[valid])
    outputs = receiver.effective_steering(d, az, np.pi / 2)
    elements = steering_vectors(receiver.layout, d, az, np.pi / 2, receiver.cfg)
    gain[valid] = np.sum(np.abs(outputs) ** 2, axis=0) / np.sum(np.abs(elements) ** 2, axis=0)
    return gain
