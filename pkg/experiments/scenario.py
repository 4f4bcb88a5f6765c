"""Experiment descriptions and the named comparison schemes."""

from dataclasses import dataclass, field, replace

import numpy as np

from arrays.frontend import Architecture, ArchitectureKind, WaveguideModel
from arrays.geometry import build_layout, fraunhofer_distance
from beamfocus.dispatch import TuningMethod
from beamfocus.rcg import RcgSettings


@dataclass(frozen=True)
class Scheme:
    """A front end plus the rule that picks its weights.

    Args:
        name (str): Registry key, also the `scheme` column of every table.
        kind (ArchitectureKind): Front-end family.
        method (TuningMethod): Weight rule; RANDOM keeps one random draw for the whole run.
        quarter (bool): lambda/4 element spacing at the same aperture.
        given_position (bool): Weights tuned once at the true positions and kept while re-observing.
    """
    name: str
    kind: ArchitectureKind
    method: TuningMethod
    quarter: bool = False
    given_position: bool = False

    @property
    def strategy(self):
        if self.kind is ArchitectureKind.FULLY_DIGITAL:
            return "digital"
        if self.given_position:
            return "given_position"
        if self.method is TuningMethod.RANDOM:
            return "fixed_random"
        return "alternating"

    def layout_for(self, base):
        if not self.quarter:
            return base
        return build_layout(base.n_rows, 2 * base.n_cols, base.wavelength, base.row_spacing, base.col_spacing / 2)

    def architecture_for(self, layout, spec):
        if self.kind is not ArchitectureKind.DMA:
            return Architecture(self.kind)
        waveguide = WaveguideModel.for_layout(layout, spec.waveguide_attenuation, spec.waveguide_wavenumber)
        return Architecture(self.kind, waveguide)


def _registry():
    schemes = [
        Scheme("fully_digital", ArchitectureKind.FULLY_DIGITAL, TuningMethod.NONE),
        Scheme("hybrid_projection", ArchitectureKind.HYBRID, TuningMethod.PROJECTION),
        Scheme("hybrid_rcg", ArchitectureKind.HYBRID, TuningMethod.RCG),
        Scheme("hybrid_random", ArchitectureKind.HYBRID, TuningMethod.RANDOM),
    ]
    for quarter in (False, True):
        suffix = "_quarter" if quarter else ""
        schemes += [
            Scheme(f"dma_projection{suffix}", ArchitectureKind.DMA, TuningMethod.PROJECTION, quarter),
            Scheme(f"dma_rcg{suffix}", ArchitectureKind.DMA, TuningMethod.RCG, quarter),
            Scheme(f"dma_random{suffix}", ArchitectureKind.DMA, TuningMethod.RANDOM, quarter),
            Scheme(f"dma_given_position{suffix}", ArchitectureKind.DMA, TuningMethod.RCG, quarter, True),
        ]
    return {s.name: s for s in schemes}


SCHEMES = _registry()


def get_scheme(name):
    try:
        return SCHEMES[name]
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}; known schemes: {', '.join(SCHEMES)}") from None


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a reproducible run needs.

    The base layout is the lambda/2 array; `_quarter` schemes derive theirs from it.
    The search grid and near-field radius always refer to the base layout.
    """
    layout: object
    cfg: object
    users: tuple
    snr_db: tuple
    grid: object
    monte_carlo_trials: int = 50
    base_seed: int = 0
    schemes: tuple = ("fully_digital",)
    max_iterations: int = 5
    rcg: RcgSettings = field(default_factory=RcgSettings)
    waveguide_attenuation: float = 0.6
    waveguide_wavenumber: float = 827.67
    near_field_radius: float = None

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not self.users:
            raise ValueError("at least one user is required")
        if not self.snr_db:
            raise ValueError("the SNR grid is empty")
        if len(set(self.snr_db)) != len(self.snr_db):
            raise ValueError(f"the SNR grid {self.snr_db} repeats a point")
        if int(self.monte_carlo_trials) < 1:
            raise ValueError("monte_carlo_trials must be at least 1")
        if int(self.max_iterations) < 0:
            raise ValueError("max_iterations must be non-negative")
        for name in self.schemes:
            get_scheme(name)
        if self.near_field_radius is None:
            object.__setattr__(self, "near_field_radius", fraunhofer_distance(self.layout))

    @property
    def n_users(self):
        return len(self.users)

    def with_users(self, users):
        return replace(self, users=tuple(users))

    def with_layout(self, layout):
        return replace(self, layout=layout)

    def trial_entropy(self, snr_index, trial):
        """Entropy of the generator shared by every scheme in one (SNR, trial) cell."""
        return (int(self.base_seed), int(snr_index), int(trial))


def trial_streams(entropy, count):
    """Independent child seeds of one cell: 0 draws Q^1, 1 the first observation, k + 1 re-observation k."""
    return np.random.SeedSequence(list(entropy)).spawn(count)
