"""Analog front-end models: constraint sets, waveguide propagation, weights."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# tolerance used when checking unit modulus / Lorentzian membership
FEASIBILITY_TOL = 1e-9


class ArchitectureKind(Enum):
    FULLY_DIGITAL = "fully_digital"
    HYBRID = "hybrid"
    DMA = "dma"


class Constraint(Enum):
    PHASE_ONLY = "phase_only"
    LORENTZIAN = "lorentzian"
    IDENTITY = "identity"


@dataclass(frozen=True, eq=False)
class WaveguideModel:
    """Microstrip propagation h = exp(-rho (alpha + j beta)).

    Args:
        attenuation: alpha per meter, scalar or one value per microstrip.
        wavenumber: beta per meter, scalar or one value per microstrip.
        tap_positions: (n_rows, n_cols) distances of each element from the output port.
    """
    attenuation: np.ndarray
    wavenumber: np.ndarray
    tap_positions: np.ndarray = field(repr=False)

    def __post_init__(self):
        taps = np.atleast_2d(np.asarray(self.tap_positions, dtype=float))
        n_rows = taps.shape[0]
        alpha = np.broadcast_to(np.asarray(self.attenuation, dtype=float), (n_rows,)).copy()
        beta = np.broadcast_to(np.asarray(self.wavenumber, dtype=float), (n_rows,)).copy()
        if np.any(alpha < 0):
            raise ValueError("waveguide attenuation must be non-negative")
        if np.any(np.diff(taps, axis=1) < 0):
            raise ValueError("tap positions must be nondecreasing along each microstrip")
        object.__setattr__(self, "attenuation", alpha)
        object.__setattr__(self, "wavenumber", beta)
        object.__setattr__(self, "tap_positions", taps)

    @classmethod
    def for_layout(cls, layout, attenuation=0.6, wavenumber=827.67):
        """Taps at (l - 1) * col_spacing from the output port of every microstrip."""
        taps = np.tile(np.arange(layout.n_cols) * layout.col_spacing, (layout.n_rows, 1))
        return cls(attenuation, wavenumber, taps)

    def phase_offsets(self):
        """rho * beta per element, flat element order."""
        return (self.tap_positions * self.wavenumber[:, None]).ravel()


@dataclass(frozen=True)
class Architecture:
    kind: ArchitectureKind
    waveguide: WaveguideModel = None

    def __post_init__(self):
        if self.kind is ArchitectureKind.DMA and self.waveguide is None:
            raise ValueError("a DMA architecture needs a waveguide model")
        if self.kind is not ArchitectureKind.DMA and self.waveguide is not None:
            raise ValueError(f"{self.kind.value} arrays have no waveguide")

    @property
    def constraint(self):
        return {
            ArchitectureKind.FULLY_DIGITAL: Constraint.IDENTITY,
            ArchitectureKind.HYBRID: Constraint.PHASE_ONLY,
            ArchitectureKind.DMA: Constraint.LORENTZIAN,
        }[self.kind]

    def response(self, layout):
        """Diagonal of H as a vector (all ones without a waveguide)."""
        if self.waveguide is None:
            return np.ones(layout.n_elements, dtype=complex)
        return waveguide_response(layout, self.waveguide)


@dataclass(frozen=True, eq=False)
class AnalogWeights:
    """Block-sparse N_d x N combining matrix Q.

    Row n only touches the elements of microstrip n; `taps` holds those
    nonzero entries as an (N_d, N_e) array, so `taps.ravel()` is the reduced
    weight vector in flat element order.
    """
    values: np.ndarray = field(repr=False)
    constraint: Constraint
    n_cols: int

    @property
    def n_outputs(self):
        return self.values.shape[0]

    @property
    def n_elements(self):
        return self.values.shape[1]

    @property
    def taps(self):
        if self.constraint is Constraint.IDENTITY:
            return np.diag(self.values)[:, None].copy()
        n_rows = self.values.shape[0]
        blocks = self.values.reshape(n_rows, n_rows, self.n_cols)
        return blocks[np.arange(n_rows), np.arange(n_rows), :].copy()

    @classmethod
    def from_taps(cls, taps, constraint):
        taps = np.asarray(taps, dtype=complex)
        n_rows, n_cols = taps.shape
        values = np.zeros((n_rows, n_rows * n_cols), dtype=complex)
        for i in range(n_rows):
            values[i, i * n_cols:(i + 1) * n_cols] = taps[i]
        return cls(values, constraint, n_cols)

    @classmethod
    def identity(cls, n_elements):
        return cls(np.eye(n_elements, dtype=complex), Constraint.IDENTITY, 1)


def waveguide_response(layout, model):
    """Diagonal of H, flat element order."""
    if model.tap_positions.shape != (layout.n_rows, layout.n_cols):
        raise ValueError(f"tap positions {model.tap_positions.shape} do not match a "
                         f"{layout.n_rows}x{layout.n_cols} array")
    rho = model.tap_positions
    return np.exp(-rho * (model.attenuation[:, None] + 1j * model.wavenumber[:, None])).ravel()


def waveguide_response_matrix(layout, model):
    """
    The N x N diagonal waveguide matrix H.

    Args:
        layout (ArrayLayout): Array geometry.
        model (WaveguideModel): Waveguide constants and tap positions.

    Returns:
        np.ndarray: Diagonal matrix with entries exp(-rho (alpha + j beta)).
    """
    return np.diag(waveguide_response(layout, model))


def lorentzian_project(phase_only_weight):
    """Map unit-modulus weights onto the Lorentzian circle: (j + w) / 2."""
    w = np.asarray(phase_only_weight, dtype=complex)
    if np.any(np.abs(np.abs(w) - 1.0) > FEASIBILITY_TOL):
        raise ValueError("Lorentzian projection expects unit-modulus weights")
    out = (1j + w) / 2.0
    return out.item() if out.ndim == 0 else out


def validate_weights(w):
    """
    Check block sparsity and the constraint set of a weight matrix.

    Args:
        w (AnalogWeights): Weights to check.

    Returns:
        dict: {"ok": True} or a report of the first violated invariant.
    """
    values = w.values
    if w.constraint is Constraint.IDENTITY:
        off = np.argwhere(np.abs(values - np.eye(*values.shape)) > FEASIBILITY_TOL)
        if len(off):
            n, k = (int(v) for v in off[0])
            return _violation("identity", (n, k), values[n, k], "fully digital weights must be the identity")
        return {"ok": True}

    n_rows = values.shape[0]
    if values.shape[1] != n_rows * w.n_cols:
        return {
            "ok": False,
            "invariant": "shape",
            "index": None,
            "value": values.shape,
            "message": f"expected {n_rows}x{n_rows * w.n_cols} weights",
        }
    owner = np.repeat(np.arange(n_rows), w.n_cols)
    off_block = (owner[None, :] != np.arange(n_rows)[:, None]) & (np.abs(values) > 0)
    if off_block.any():
        n, k = (int(v) for v in np.argwhere(off_block)[0])
        return _violation("block_sparsity", (n, k), values[n, k],
                          f"entry ({n}, {k}) lies outside microstrip {n}")

    taps = w.taps
    if w.constraint is Constraint.PHASE_ONLY:
        bad = np.abs(np.abs(taps) - 1.0) > FEASIBILITY_TOL
        name, message = "phase_only", "phase-shifter weights must have unit modulus"
    else:
        bad = np.abs(np.abs(taps - 0.5j) - 0.5) > FEASIBILITY_TOL
        name, message = "lorentzian", "DMA weights must satisfy |q - j/2| = 1/2"
    if bad.any():
        i, l = (int(v) for v in np.argwhere(bad)[0])
        return _violation(name, (i, i * w.n_cols + l), taps[i, l], message)
    return {"ok": True}


def _violation(invariant, index, value, message):
    return {"ok": False, "invariant": invariant, "index": index, "value": complex(value), "message": message}


def random_weights(layout, constraint, seed):
    """
    Draw feasible weights with independent uniform phases.

    Args:
        layout (ArrayLayout): Array geometry.
        constraint (Constraint): Target constraint set.
        seed: Anything accepted by numpy.random.default_rng.

    Returns:
        AnalogWeights: Random feasible weights.
    """
    if constraint is Constraint.IDENTITY:
        return AnalogWeights.identity(layout.n_elements)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(layout.n_rows, layout.n_cols))
    taps = np.exp(1j * phases)
    if constraint is Constraint.LORENTZIAN:
        taps = lorentzian_project(taps)
    return AnalogWeights.from_taps(taps, constraint)


def apply_frontend(w, response, x):
    """
    Combine element signals: y = Q H x.

    Args:
        w (AnalogWeights): Combining weights.
        response (np.ndarray or None): Diagonal of H as a vector, or None for H = I.
        x (np.ndarray): (N,) or (N, T) element signals.

    Returns:
        np.ndarray: (N_d,) or (N_d, T) outputs.
    """
    x = np.asarray(x)
    if x.shape[0] != w.n_elements:
        raise ValueError(f"signal has {x.shape[0]} elements, weights expect {w.n_elements}")
    if response is not None:
        response = np.asarray(response)
        if response.shape != (w.n_elements,):
            raise ValueError("waveguide response must be a vector over the elements")
        x = response * x if x.ndim == 1 else response[:, None] * x
    if w.constraint is Constraint.IDENTITY:
        return x
    return w.values @ x
