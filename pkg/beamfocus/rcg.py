"""Riemannian conjugate gradient tuning on the product of complex circles.

Feasible weights are an affine image q = kappa (b + mu 1) of a unit-modulus
vector b: kappa = 1, mu = 0 for phase shifters and kappa = 1/2, mu = j for the
Lorentzian circle |q - j/2| = 1/2. The relaxed objective
g(b) = sum_m ||W_m q(b)||^2 is maximized over |b_r| = 1.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from arrays.frontend import AnalogWeights, Constraint, waveguide_response
from arrays.geometry import element_distances
from beamfocus.projection import position_arrays, projection_tuning
from signals.channel import path_gain, phase_shift

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RcgSettings:
    """Armijo backtracking and Polak-Ribiere settings.

    Args:
        max_iters (int): Iteration cap.
        grad_tolerance (float): Stop once ||grad|| <= grad_tolerance * |f|.
        initial_step (float): First Armijo trial step.
        shrink (float): Backtracking factor in (0, 1).
        sufficient_decrease (float): Armijo constant in (0, 1).
        max_backtracks (int): Trial steps before the line search gives up.
        pr_restart_threshold (float): Polak-Ribiere coefficients at or below this restart
            the direction to steepest descent.
    """
    max_iters: int = 200
    grad_tolerance: float = 1e-8
    initial_step: float = 1.0
    shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 30
    pr_restart_threshold: float = 0.0

    def __post_init__(self):
        if not 0 < self.shrink < 1:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if not 0 < self.sufficient_decrease < 1:
            raise ValueError(f"sufficient_decrease must lie in (0, 1), got {self.sufficient_decrease}")
        if self.initial_step <= 0 or self.grad_tolerance < 0:
            raise ValueError("initial_step must be positive and grad_tolerance non-negative")
        if int(self.max_iters) < 0 or int(self.max_backtracks) < 1:
            raise ValueError("max_iters must be non-negative and max_backtracks positive")


@dataclass(frozen=True, eq=False)
class ReducedObjective:
    """Per-user reduced maps acting on the nonzero weights only.

    coefficients[m, i, l] = h_il g_{m,il}, so that (W_m q)_i = sum_l coefficients[m, i, l] q_il.
    The flat weight vector q follows element order (q = taps.ravel()).
    """
    coefficients: np.ndarray = field(repr=False)
    scale: float = 1.0
    offset: complex = 0.0

    @property
    def n_users(self):
        return self.coefficients.shape[0]

    @property
    def shape(self):
        return self.coefficients.shape[1:]

    @property
    def size(self):
        return self.shape[0] * self.shape[1]

    def outputs(self, q):
        """(M, N_d) row outputs W_m q."""
        return np.einsum("mil,il->mi", self.coefficients, np.reshape(q, self.shape))

    def value(self, q):
        return float(np.sum(np.abs(self.outputs(q)) ** 2))

    def apply_gram(self, q):
        """A q with A = sum_m W_m^H W_m, without forming A."""
        return np.einsum("mil,mi->il", self.coefficients.conj(), self.outputs(q)).ravel()

    def trace(self):
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def weights_of(self, b):
        return self.scale * (np.asarray(b) + self.offset)

    def circle_point(self, q):
        return np.asarray(q) / self.scale - self.offset


def build_reduced_objective(positions, layout, cfg, waveguide=None, constraint=None):
    """
    Reduced quadratic form of the relaxed tuning objective.

    Args:
        positions: Hypothesized user positions.
        layout (ArrayLayout): Array geometry.
        cfg (SimulationConfig): Carrier and propagation constants.
        waveguide (WaveguideModel, optional): Microstrip model; None means H = I.
        constraint (Constraint, optional): Defaults to Lorentzian with a waveguide, phase-only without.

    Returns:
        ReducedObjective: Coefficients and the affine circle map of the constraint.
    """
    if constraint is None:
        constraint = Constraint.LORENTZIAN if waveguide is not None else Constraint.PHASE_ONLY
    if constraint is Constraint.IDENTITY:
        raise ValueError("fully digital arrays have no analog weights to tune")
    d = element_distances(layout, *position_arrays(positions))
    g = path_gain(d, cfg) * np.exp(-1j * phase_shift(d, cfg))
    h = np.ones(layout.n_elements, dtype=complex) if waveguide is None else waveguide_response(layout, waveguide)
    coefficients = (h[:, None] * g).T.reshape(-1, layout.n_rows, layout.n_cols)
    if constraint is Constraint.LORENTZIAN:
        return ReducedObjective(coefficients, 0.5, 1j)
    return ReducedObjective(coefficients, 1.0, 0.0)


def euclidean_gradient(b, ro):
    """Gradient of g(b) = ||W q(b)||^2 with respect to (Re b, Im b), packed as a complex vector."""
    return 2.0 * ro.scale * ro.apply_gram(ro.weights_of(b))


def riemannian_gradient(b, euclid_grad):
    """Projection of a Euclidean gradient onto the tangent space of the circle product at b."""
    return euclid_grad - np.real(euclid_grad * np.conj(b)) * b


def _retract(b):
    modulus = np.abs(b)
    return np.where(modulus > 0, b / np.where(modulus > 0, modulus, 1.0), 1.0)


def _inner(u, v):
    return float(np.real(np.vdot(u, v)))


@dataclass(frozen=True)
class RcgOutcome:
    weights: AnalogWeights
    objective_track: list = field(default_factory=list, repr=False)
    accepted_steps: int = 0
    converged: bool = False


def rcg_tuning(positions, layout, cfg, architecture, settings=None, init=None):
    """
    Maximize the relaxed objective by Riemannian conjugate gradient.

    Minimizes f = -g / tr(A) with Armijo backtracking along Polak-Ribiere directions and
    per-entry normalization as the retraction.

    Args:
        positions: Hypothesized user positions.
        layout (ArrayLayout): Array geometry.
        cfg (SimulationConfig): Carrier and propagation constants.
        architecture (Architecture): Hybrid or DMA front end.
        settings (RcgSettings, optional): Line search and stopping settings.
        init (AnalogWeights, optional): Feasible start; defaults to projection_tuning.

    Returns:
        RcgOutcome: Final weights, objective per accepted step (init first) and a converged flag.
    """
    settings = settings or RcgSettings()
    constraint = architecture.constraint
    ro = build_reduced_objective(positions, layout, cfg, architecture.waveguide, constraint)
    if init is None:
        init = projection_tuning(positions, layout, cfg, architecture)
    if init.constraint is not constraint:
        raise ValueError(f"initial weights are {init.constraint.value}, architecture needs {constraint.value}")

    b = _retract(ro.circle_point(init.taps.ravel()))
    track = [ro.value(ro.weights_of(b))]
    normalizer = ro.trace()
    if normalizer == 0:
        return RcgOutcome(init, track, 0, True)

    def cost(point):
        return -ro.value(ro.weights_of(point)) / normalizer

    def gradient(point):
        return riemannian_gradient(point, -euclidean_gradient(point, ro) / normalizer)

    f = cost(b)
    grad = gradient(b)
    direction = -grad
    accepted = 0
    converged = False
    for t in range(int(settings.max_iters)):
        if np.linalg.norm(grad) <= settings.grad_tolerance * abs(f):
            converged = True
            break
        slope = _inner(grad, direction)
        if slope >= 0:
            direction = -grad
            slope = _inner(grad, direction)

        step = settings.initial_step
        for _ in range(int(settings.max_backtracks)):
            candidate = _retract(b + step * direction)
            f_candidate = cost(candidate)
            if f_candidate <= f + settings.sufficient_decrease * step * slope:
                break
            step *= settings.shrink
        else:
            logger.warning(f"RCG line search failed after {settings.max_backtracks} backtracks "
                           f"at iteration {t}; keeping the incumbent")
            break

        new_grad = gradient(candidate)
        # carry the previous gradient and direction into the tangent space at the new point
        old_grad = riemannian_gradient(candidate, grad)
        old_direction = riemannian_gradient(candidate, direction)
        zeta = _inner(new_grad, new_grad - old_grad) / max(_inner(grad, grad), np.finfo(float).tiny)
        if zeta <= settings.pr_restart_threshold:
            zeta = 0.0
        b, f, grad = candidate, f_candidate, new_grad
        direction = -grad + zeta * old_direction
        accepted += 1
        track.append(ro.value(ro.weights_of(b)))
    else:
        converged = np.linalg.norm(grad) <= settings.grad_tolerance * abs(f)

    taps = ro.weights_of(b).reshape(ro.shape)
    return RcgOutcome(AnalogWeights.from_taps(taps, constraint), track, accepted, bool(converged))
