"""Projection-based log-likelihood machinery shared by localization and tuning.

The log-likelihood of a hypothesis set p_M under a fixed front end is
proportional to sum_t ||P[S(p_M, Q)] y(t)||^2 = N_T tr(P[S] R), with
S(p_M, Q) = Q H S_a(p_M). Only argmax comparisons are made, so the
proportionality constant never matters.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from internal.errors import NumericalError

logger = logging.getLogger(__name__)

# relative ridge applied when no explicit ridge is requested
DEFAULT_RIDGE = 1e-12
# ||S_bar||^2 below this fraction of ||Q H s||^2 counts as a collapsed residual
DEGENERACY_TOL = 1e-10
# reciprocal condition number below which an unregularized Gram matrix is rejected
CONDITION_LIMIT = 1e-14


@dataclass(frozen=True)
class PositionHypothesisSet:
    """Ordered user position hypotheses; empty during initialization."""
    hypotheses: tuple = ()

    def __post_init__(self):
        hypotheses = tuple(self.hypotheses)
        if len(hypotheses) >= 2 and len(set(hypotheses)) != len(hypotheses):
            raise ValueError("duplicate hypotheses collapse the projector rank")
        object.__setattr__(self, "hypotheses", hypotheses)

    def __len__(self):
        return len(self.hypotheses)

    def __iter__(self):
        return iter(self.hypotheses)

    def __getitem__(self, m):
        return self.hypotheses[m]

    def without(self, m):
        return PositionHypothesisSet(self.hypotheses[:m] + self.hypotheses[m + 1:])

    def replace(self, m, p):
        return PositionHypothesisSet(self.hypotheses[:m] + (p,) + self.hypotheses[m + 1:])

    def append(self, p):
        return PositionHypothesisSet(self.hypotheses + (p,))

    def coordinates(self):
        """(distance, azimuth, elevation) arrays."""
        if not self.hypotheses:
            return np.empty(0), np.empty(0), np.empty(0)
        return tuple(np.array(v, dtype=float) for v in zip(*(
            (p.distance, p.azimuth, p.elevation) for p in self.hypotheses)))


@dataclass(frozen=True, eq=False)
class EffectiveSteering:
    """S(p_M, Q) = Q H S_a(p_M); column m belongs to hypothesis m."""
    matrix: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, hypotheses, receiver):
        if len(hypotheses) == 0:
            return cls(np.zeros((receiver.n_outputs, 0), dtype=complex))
        return cls(receiver.effective_steering(*hypotheses.coordinates()))

    def projector(self, ridge=None):
        return projection_operator(self.matrix, ridge)


def projection_operator(X, ridge=None):
    """
    Orthogonal projector onto the column space of X.

    Args:
        X (np.ndarray): (n, k) complex matrix.
        ridge (float, optional): Diagonal loading of X^H X. None applies the
            default relative ridge 1e-12 tr(X^H X) / k; 0 demands full column rank.

    Returns:
        np.ndarray: (n, n) Hermitian matrix X (X^H X + ridge I)^-1 X^H.
    """
    X = np.asarray(X, dtype=complex)
    n, k = X.shape
    if k == 0:
        return np.zeros((n, n), dtype=complex)
    gram = X.conj().T @ X
    if ridge is None:
        ridge = DEFAULT_RIDGE * np.real(np.trace(gram)) / k
    if ridge == 0:
        rcond = 1.0 / np.linalg.cond(gram) if np.all(np.isfinite(gram)) else 0.0
        if not rcond > CONDITION_LIMIT:
            raise NumericalError(f"projection onto a rank-deficient {n}x{k} matrix (rcond {rcond:.2e})")
    coeffs = linalg.solve(gram + ridge * np.eye(k), X.conj().T, assume_a="her")
    P = X @ coeffs
    return 0.5 * (P + P.conj().T)


def projected_energy(S, R, ridge=None):
    """tr(P[S] R), real part."""
    return float(np.real(np.trace(projection_operator(S, ridge) @ R)))


def _residual_columns(candidates, others_projector):
    if others_projector is None:
        return candidates
    return candidates - others_projector @ candidates


def residual_steering(p_m, others, receiver):
    """
    Residual of Q H s_m after projecting out the other hypotheses.

    Args:
        p_m (SourcePosition): Hypothesis being refreshed.
        others (PositionHypothesisSet): Fixed hypotheses (may be empty).
        receiver (Receiver): Front end in force.

    Returns:
        np.ndarray: S_bar = (I - P[S(others)]) Q H s_m.
    """
    candidate = receiver.effective_steering(p_m.distance, p_m.azimuth, p_m.elevation)
    projector = EffectiveSteering.build(others, receiver).projector() if len(others) else None
    return _residual_columns(candidate, projector)[:, 0]


def residual_energy(residuals, batch):
    """
    Batch form of the AP sub-problem objective.

    Args:
        residuals (np.ndarray): (C, P) residual steering columns.
        batch (SnapshotBatch): Observations.

    Returns:
        np.ndarray: sum_t |S_bar^H y(t)|^2 / ||S_bar||^2 per column.
    """
    norms = np.sum(np.abs(residuals) ** 2, axis=0)
    if batch.n_snapshots > batch.channel_count:
        numer = batch.n_snapshots * np.real(np.einsum("cp,cd,dp->p", residuals.conj(), batch.covariance, residuals))
    else:
        numer = np.sum(np.abs(residuals.conj().T @ batch.samples) ** 2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(norms > 0, numer / norms, 0.0)


def ap_objective_batch(distance, azimuth, elevation, others_projector, batch, receiver):
    """
    AP objective for many candidates sharing the same fixed hypotheses.

    Returns:
        tuple: (values, degenerate) arrays; degenerate candidates score 0.
    """
    candidates = receiver.effective_steering(distance, azimuth, elevation)
    residuals = _residual_columns(candidates, others_projector)
    reference = np.sum(np.abs(candidates) ** 2, axis=0)
    degenerate = np.sum(np.abs(residuals) ** 2, axis=0) <= DEGENERACY_TOL * reference
    values = residual_energy(residuals, batch)
    values = np.where(degenerate, 0.0, np.maximum(values, 0.0))
    return values, degenerate


def ap_objective(p_m, others, batch, receiver):
    """
    Single-hypothesis AP sub-problem objective sum_t ||P[S_bar] y(t)||^2.

    Args:
        p_m (SourcePosition): Candidate position for user m.
        others (PositionHypothesisSet): Hypotheses held fixed.
        batch (SnapshotBatch): Observations.
        receiver (Receiver): Front end in force.

    Returns:
        tuple: (value, degenerate) where a collapsed residual yields (0.0, True).
    """
    projector = EffectiveSteering.build(others, receiver).projector() if len(others) else None
    values, degenerate = ap_objective_batch(
        p_m.distance, p_m.azimuth, p_m.elevation, projector, batch, receiver)
    return float(values[0]), bool(degenerate[0])


def focusing_objective(p_set, receiver, batch, ridge=None):
    """f(p_M, Q) = tr(P[S(p_M, Q)] R)."""
    S = EffectiveSteering.build(p_set, receiver).matrix
    return projected_energy(S, batch.covariance, ridge)


def log_likelihood(p_set, receiver, batch):
    """Snapshot-sum likelihood, up to the unspecified positive constant."""
    return batch.n_snapshots * focusing_objective(p_set, receiver, batch)
