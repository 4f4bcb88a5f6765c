"""Choose analog weights for an architecture by tuning rule: projection, RCG, random or keep."""

import logging
from enum import Enum

from arrays.frontend import AnalogWeights, ArchitectureKind, random_weights
from beamfocus.projection import projection_tuning
from beamfocus.rcg import rcg_tuning

logger = logging.getLogger(__name__)


class TuningMethod(Enum):
    PROJECTION = "projection"
    RCG = "rcg"
    RANDOM = "random"
    NONE = "none"


def tune(positions, architecture, method, layout, cfg, settings=None, seed=None, current=None):
    """
    Pick analog weights for the hypothesized positions.

    Args:
        positions: Hypothesized user positions (ignored by RANDOM and NONE).
        architecture (Architecture): Target front end.
        method (TuningMethod or str): Tuning rule.
        layout (ArrayLayout): Array geometry.
        cfg (SimulationConfig): Carrier and propagation constants.
        settings (RcgSettings, optional): Used by RCG.
        seed (optional): Used by RANDOM.
        current (AnalogWeights, optional): Weights kept by NONE.

    Returns:
        AnalogWeights: Feasible weights for the architecture.
    """
    try:
        method = TuningMethod(method)
    except ValueError:
        raise ValueError(f"unknown tuning method {method!r}") from None

    if architecture.kind is ArchitectureKind.FULLY_DIGITAL:
        if method is not TuningMethod.NONE:
            logger.info(f"fully digital array: {method.value} tuning ignored, weights stay the identity")
        return AnalogWeights.identity(layout.n_elements)

    if method is TuningMethod.NONE:
        if current is None:
            raise ValueError("tuning method 'none' needs the current weights")
        if current.constraint is not architecture.constraint:
            raise ValueError(f"current weights are {current.constraint.value}, "
                             f"{architecture.kind.value} needs {architecture.constraint.value}")
        return current
    if method is TuningMethod.RANDOM:
        return random_weights(layout, architecture.constraint, seed)

    positions = list(positions or ())
    if not positions:
        raise ValueError(f"{method.value} tuning needs at least one hypothesized position")
    if method is TuningMethod.PROJECTION:
        return projection_tuning(positions, layout, cfg, architecture)
    return rcg_tuning(positions, layout, cfg, architecture, settings).weights
