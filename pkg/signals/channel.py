"""Near-field spherical-wave channel synthesis and noisy snapshot generation."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from arrays.frontend import AnalogWeights, Constraint, apply_frontend
from arrays.geometry import element_distances
from internal.errors import DegenerateGeometryError

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SimulationConfig:
    carrier_frequency: float = 28e9
    speed_of_light: float = SPEED_OF_LIGHT
    pilot_symbol: complex = 1.0 + 0.0j
    n_snapshots: int = 50
    noise_variance: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if abs(abs(self.pilot_symbol) - 1.0) > 1e-12:
            raise ValueError(f"pilot symbol must have unit modulus, got |x0| = {abs(self.pilot_symbol)}")
        if int(self.n_snapshots) < 1:
            raise ValueError("at least one snapshot is required")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be non-negative")
        if self.carrier_frequency <= 0 or self.speed_of_light <= 0:
            raise ValueError("carrier frequency and speed of light must be positive")

    @property
    def carrier_wavelength(self):
        return self.speed_of_light / self.carrier_frequency


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """N x M matrix whose m-th column is the channel of user m."""
    entries: np.ndarray = field(repr=False)

    @property
    def n_users(self):
        return self.entries.shape[1]

    def column(self, m):
        return self.entries[:, m]

    def noiseless_signal(self, cfg):
        """Element-level superposition G x_0 1_M of the shared pilot."""
        return self.entries.sum(axis=1) * cfg.pilot_symbol


@dataclass(frozen=True, eq=False)
class SnapshotBatch:
    """Observed outputs (channels x N_T) and their sample covariance."""
    samples: np.ndarray = field(repr=False)
    covariance: np.ndarray = field(repr=False)
    noise_variance: float = 0.0

    @classmethod
    def from_samples(cls, samples, noise_variance=0.0):
        samples = np.array(samples, dtype=complex)
        covariance = samples @ samples.conj().T / samples.shape[1]
        # enforce exact Hermitian symmetry against round-off
        covariance = 0.5 * (covariance + covariance.conj().T)
        samples.setflags(write=False)
        covariance.setflags(write=False)
        return cls(samples, covariance, float(noise_variance))

    @property
    def channel_count(self):
        return self.samples.shape[0]

    @property
    def n_snapshots(self):
        return self.samples.shape[1]


def _check_distance(distance):
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("distances must be positive")
    return distance


def phase_shift(distance, cfg):
    """Propagation phase v = 2 pi f_p d / c (radians, unwrapped)."""
    d = _check_distance(distance)
    out = 2.0 * np.pi * cfg.carrier_frequency * d / cfg.speed_of_light
    return float(out) if out.ndim == 0 else out


def path_gain(distance, cfg):
    """Free-space amplitude a = c / (4 pi f_p d)."""
    d = _check_distance(distance)
    out = cfg.speed_of_light / (4.0 * np.pi * cfg.carrier_frequency * d)
    return float(out) if out.ndim == 0 else out


def steering_vectors(layout, distance, azimuth, elevation, cfg):
    """
    Near-field steering vectors for a batch of candidate positions.

    Args:
        layout (ArrayLayout): Array geometry.
        distance, azimuth, elevation (array-like): Candidate coordinates, broadcast to (P,).
        cfg (SimulationConfig): Carrier and propagation constants.

    Returns:
        np.ndarray: (N, P) complex matrix with entries a(d) exp(-j v(d)).
    """
    d = element_distances(layout, distance, azimuth, elevation)
    return path_gain(d, cfg) * np.exp(-1j * phase_shift(d, cfg))


def steering_vector(layout, p, cfg):
    return steering_vectors(layout, p.distance, p.azimuth, p.elevation, cfg)[:, 0]


def channel_matrix(layout, positions, cfg):
    """
    Build G from the true user positions.

    Args:
        layout (ArrayLayout): Array geometry.
        positions (list[SourcePosition]): True positions, at least one.
        cfg (SimulationConfig): Carrier and propagation constants.

    Returns:
        ChannelMatrix: Columns are the users' steering vectors.
    """
    positions = list(positions)
    if not positions:
        raise ValueError("at least one user position is required")
    if len(set(positions)) != len(positions):
        raise DegenerateGeometryError("duplicate user positions make the channel rank deficient")
    d = np.array([p.distance for p in positions])
    az = np.array([p.azimuth for p in positions])
    el = np.array([p.elevation for p in positions])
    entries = steering_vectors(layout, d, az, el, cfg)
    entries.setflags(write=False)
    return ChannelMatrix(entries)


def snr_to_noise_variance(snr_db, noiseless_signal):
    """
    Noise variance giving SNR = 10 log10(||x||^2 / (N sigma^2)).

    Args:
        snr_db (float): Target SNR in dB; +inf gives a noiseless scenario.
        noiseless_signal (np.ndarray): (N,) or (N, T) element-level noiseless signal.

    Returns:
        float: sigma^2, averaged over snapshots when several are given.
    """
    x = np.asarray(noiseless_signal)
    if x.ndim == 1:
        x = x[:, None]
    energy = np.sum(np.abs(x) ** 2, axis=0)
    if not np.any(energy > 0):
        raise ValueError("cannot calibrate noise against an all-zero signal")
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return float(np.mean(energy / (x.shape[0] * 10.0 ** (snr_db / 10.0))))


def simulate_snapshots(G, cfg, weights=None, response=None, seed=None):
    """
    Draw N_T noisy observations of the shared pilot.

    Noise is added per element before analog combining, so the outputs of
    hybrid and DMA receivers carry noise colored by Q H.

    Args:
        G (ChannelMatrix): True channel.
        cfg (SimulationConfig): Snapshot count, noise variance and seed.
        weights (AnalogWeights, optional): Combining weights; None for fully digital.
        response (np.ndarray, optional): Diagonal of H; None for H = I.
        seed (optional): Overrides cfg.rng_seed.

    Returns:
        SnapshotBatch: Outputs and their sample covariance.
    """
    n_elements = G.entries.shape[0]
    if weights is not None and weights.n_elements != n_elements:
        raise ValueError(f"weights expect {weights.n_elements} elements, channel has {n_elements}")
    rng = np.random.default_rng(cfg.rng_seed if seed is None else seed)
    signal = G.noiseless_signal(cfg)
    x = np.repeat(signal[:, None], cfg.n_snapshots, axis=1)
    if cfg.noise_variance > 0:
        scale = math.sqrt(cfg.noise_variance / 2.0)
        x = x + scale * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))
    if weights is None:
        weights = AnalogWeights.identity(n_elements)
    y = apply_frontend(weights, response, x)
    return SnapshotBatch.from_samples(y, cfg.noise_variance)


def check_wavelength(layout, cfg, tolerance=0.01):
    """Warn when the layout wavelength differs from c / f_p; phases always use c and f_p."""
    carrier = cfg.carrier_wavelength
    mismatch = abs(layout.wavelength - carrier) / carrier
    if mismatch > tolerance:
        logger.warning(f"layout wavelength {layout.wavelength:.4g} m differs from c/f_p = {carrier:.4g} m "
                       f"by {100 * mismatch:.1f}%; element counts follow the layout, phases follow c/f_p")
        return False
    return True


@dataclass(frozen=True, eq=False)
class Receiver:
    """A front end in force: geometry, propagation constants, Q and H."""
    layout: object
    cfg: SimulationConfig
    weights: AnalogWeights
    response: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.weights.n_elements != self.layout.n_elements:
            raise ValueError("weights do not match the array layout")
        if self.response is None:
            object.__setattr__(self, "response", np.ones(self.layout.n_elements, dtype=complex))

    @property
    def n_outputs(self):
        return self.weights.n_outputs

    def with_weights(self, weights):
        return Receiver(self.layout, self.cfg, weights, self.response)

    def effective_steering(self, distance, azimuth, elevation):
        """Q H s(p) for a batch of candidates, shape (n_outputs, P)."""
        s = steering_vectors(self.layout, distance, azimuth, elevation, self.cfg)
        return apply_frontend(self.weights, self.response, s)

    def observe(self, G, seed=None):
        return simulate_snapshots(G, self.cfg, self.weights, self.response, seed)


def output_noise_scale(weights, response=None):
    """
    Noise standard deviation of every output under unit element noise.

    Rows of a block-sparse Q see disjoint elements, so the output noise is
    uncorrelated and its scale is the row norm of Q H.

    Returns:
        np.ndarray: (n_outputs,) positive scales; all-zero rows map to 1.
    """
    if response is None:
        response = np.ones(weights.n_elements, dtype=complex)
    if weights.constraint is Constraint.IDENTITY:
        scale = np.abs(response)
    else:
        scale = np.linalg.norm(weights.values * np.asarray(response)[None, :], axis=1)
    return np.where(scale > 0, scale, 1.0)


@dataclass(frozen=True, eq=False)
class ObservationStack:
    """Snapshot batches taken under successive front ends, localized jointly.

    Each member's outputs are divided by their noise scale before stacking, so the
    joint noise is white with the element variance. The stack offers the
    `n_outputs` / `effective_steering` pair the AP estimator reads from a receiver.
    """
    receivers: tuple = ()
    batches: tuple = field(default=(), repr=False)
    scales: tuple = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if len(self.receivers) != len(self.batches):
            raise ValueError(f"{len(self.receivers)} receivers for {len(self.batches)} batches")
        for receiver, batch in zip(self.receivers, self.batches):
            if batch.channel_count != receiver.n_outputs:
                raise ValueError(f"batch has {batch.channel_count} channels, "
                                 f"receiver has {receiver.n_outputs} outputs")
        if len({b.n_snapshots for b in self.batches}) > 1:
            raise ValueError("stacked batches must hold the same number of snapshots")
        object.__setattr__(self, "scales",
                           tuple(output_noise_scale(r.weights, r.response) for r in self.receivers))

    def __len__(self):
        return len(self.receivers)

    def append(self, receiver, batch):
        return ObservationStack(self.receivers + (receiver,), self.batches + (batch,))

    @property
    def n_outputs(self):
        return sum(r.n_outputs for r in self.receivers)

    def effective_steering(self, distance, azimuth, elevation):
        """Whitened Q_k H s(p) of every member, stacked, shape (n_outputs, P)."""
        return np.vstack([r.effective_steering(distance, azimuth, elevation) / s[:, None]
                          for r, s in zip(self.receivers, self.scales)])

    @property
    def batch(self):
        """Whitened samples of every member as one SnapshotBatch."""
        if not self.batches:
            raise ValueError("an empty observation stack has no snapshots")
        samples = np.vstack([b.samples / s[:, None] for b, s in zip(self.batches, self.scales)])
        return SnapshotBatch.from_samples(samples, self.batches[-1].noise_variance)
