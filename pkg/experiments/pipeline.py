"""Alternating localization and tuning, single trials and Monte-Carlo RMSE."""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from arrays.frontend import AnalogWeights, ArchitectureKind, random_weights
from beamfocus.dispatch import TuningMethod, tune
from estimators.likelihood import log_likelihood
from estimators.localizer import LocalizationResult, ap_localize, initialize_positions
from experiments.metrics import rmse, squared_errors, trial_error
from experiments.scenario import get_scheme, trial_streams
from experiments.workers import run_tasks
from signals.channel import ObservationStack, Receiver, channel_matrix, snr_to_noise_variance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialRecord:
    scheme: str
    snr_db: float
    trial: int
    squared_errors: np.ndarray = field(repr=False)
    iteration_errors: tuple = field(default=(), repr=False)
    iterations_used: int = 0
    result: LocalizationResult = field(default=None, repr=False)

    @property
    def error(self):
        """Per-trial e_n^2: squared XY error averaged over users."""
        return float(np.mean(self.squared_errors))


def alternating_localize(G, layout, cfg, architecture, method, n_users, grid, max_iters,
                         rcg_settings=None, entropy=(0,), initial_weights=None):
    """
    Alternate AP localization with retuning of the analog weights.

    Starts from random (or given) weights, initializes greedily, then for every outer
    iteration refreshes each user once against every observation gathered so far
    (whitened and stacked), retunes Q at the new estimates and re-observes with fresh
    noise. Tuning NONE keeps Q and only re-observes. Fully digital arrays skip tuning
    and run plain AP.

    Args:
        G (ChannelMatrix): True channel.
        layout (ArrayLayout): Array geometry.
        cfg (SimulationConfig): Carrier, snapshot count and noise variance.
        architecture (Architecture): Hybrid or DMA front end.
        method (TuningMethod): Retuning rule.
        n_users (int): Number of users M.
        grid (SearchGrid): Search region.
        max_iters (int): Outer iterations K (always all run).
        rcg_settings (RcgSettings, optional): Used by RCG retuning.
        entropy (tuple): Seed entropy of the trial.
        initial_weights (AnalogWeights, optional): Replaces the random starting weights.

    Returns:
        tuple: (LocalizationResult, AnalogWeights tuned at the final estimates).
    """
    K = int(max_iters)
    streams = trial_streams(entropy, 2 * K + 2)
    response = architecture.response(layout)
    if architecture.kind is ArchitectureKind.FULLY_DIGITAL:
        receiver = Receiver(layout, cfg, AnalogWeights.identity(layout.n_elements), response)
        return ap_localize(receiver.observe(G, streams[1]), receiver, n_users, grid, K), receiver.weights

    method = TuningMethod(method)
    if initial_weights is None:
        initial_weights = random_weights(layout, architecture.constraint, streams[0])
    receiver = Receiver(layout, cfg, initial_weights, response)
    stack = ObservationStack().append(receiver, receiver.observe(G, streams[1]))
    batch = stack.batch
    init = initialize_positions(batch, stack, n_users, grid)
    estimates = init.hypotheses
    track = [estimates]
    objective_track = [log_likelihood(estimates, stack, batch)]
    converged = False
    for k in range(K):
        step = ap_localize(batch, stack, n_users, grid, 1, init=estimates)
        estimates, converged = step.estimates, step.converged
        track.append(estimates)
        objective_track.append(step.objective_track[-1])
        weights = tune(estimates, architecture, method, layout, cfg, rcg_settings,
                       seed=streams[K + 2 + k], current=receiver.weights)
        receiver = receiver.with_weights(weights)
        if k + 1 < K:
            stack = stack.append(receiver, receiver.observe(G, streams[k + 2]))
            batch = stack.batch
    logger.debug(f"{architecture.kind.value}/{method.value}: {len(stack)} observations localized jointly")
    result = LocalizationResult(estimates, track, objective_track, K, converged, init.degenerate)
    return result, receiver.weights


def _pad(track, length):
    return list(track) + [track[-1]] * (length - len(track))


def run_trial(spec, scheme_name, snr_index, trial):
    """
    One Monte-Carlo trial of one scheme at one SNR point.

    Every scheme of a cell draws from the same seed streams, so comparisons are paired.

    Returns:
        TrialRecord: Final matched errors and the per-iteration error track.
    """
    scheme = get_scheme(scheme_name)
    layout = scheme.layout_for(spec.layout)
    architecture = scheme.architecture_for(layout, spec)
    snr_db = spec.snr_db[snr_index]
    G = channel_matrix(layout, spec.users, spec.cfg)
    cfg = replace(spec.cfg, noise_variance=snr_to_noise_variance(snr_db, G.noiseless_signal(spec.cfg)))
    entropy = spec.trial_entropy(snr_index, trial)
    K = int(spec.max_iterations)

    # fixed-Q schemes keep their weights and only re-observe
    method = scheme.method if scheme.strategy in ("digital", "alternating") else TuningMethod.NONE
    weights = None
    if scheme.strategy == "given_position":
        weights = tune(spec.users, architecture, scheme.method, layout, cfg, spec.rcg)
    result, _ = alternating_localize(G, layout, cfg, architecture, method, spec.n_users, spec.grid, K,
                                     spec.rcg, entropy, initial_weights=weights)

    track = _pad(result.per_iteration_track, K + 1)
    return TrialRecord(
        scheme=scheme_name,
        snr_db=snr_db,
        trial=int(trial),
        squared_errors=squared_errors(result.estimates, spec.users),
        iteration_errors=tuple(trial_error(estimates, spec.users) for estimates in track),
        iterations_used=result.iterations_used,
        result=result,
    )


def trial_task(args):
    return run_trial(*args)


def trial_records(spec, schemes=None, snr_indices=None, workers=None):
    """All (scheme, SNR, trial) records, ordered by scheme, then SNR index, then trial."""
    schemes = spec.schemes if schemes is None else tuple(schemes)
    snr_indices = range(len(spec.snr_db)) if snr_indices is None else snr_indices
    tasks = [(spec, name, s, t) for name in schemes for s in snr_indices
             for t in range(int(spec.monte_carlo_trials))]
    return run_tasks(trial_task, tasks, workers)


def rmse_frame(records, spec, extra=None):
    """Aggregate trial records into one row per (scheme, SNR)."""
    rows = []
    groups = {}
    seen = set()
    for record in records:
        cell = (record.scheme, record.snr_db, record.trial)
        if cell in seen:
            raise ValueError(f"trial {record.trial} of {record.scheme} at {record.snr_db:g} dB appears twice")
        seen.add(cell)
        groups.setdefault((record.scheme, record.snr_db), []).append(record.error)
    for (scheme, snr_db), errors in groups.items():
        value, ci95 = rmse(errors)
        row = dict(extra or {})
        row.update(scheme=scheme, snr_db=snr_db, rmse_m=value, ci95_m=ci95,
                   n_trials=len(errors), seed=int(spec.base_seed))
        rows.append(row)
    return pd.DataFrame(rows)


def monte_carlo_rmse(spec, schemes=None, workers=None):
    """
    RMSE over Monte-Carlo trials for each configured scheme and SNR point.

    Returns:
        pandas.DataFrame: Columns scheme, snr_db, rmse_m, ci95_m, n_trials, seed; rows ordered
            by scheme as configured, then SNR ascending.
    """
    schemes = spec.schemes if schemes is None else tuple(schemes)
    records = trial_records(spec, schemes, workers=workers)
    table = rmse_frame(records, spec)
    order = {name: i for i, name in enumerate(schemes)}
    table = table.sort_values(["snr_db"], kind="stable")
    table = table.sort_values("scheme", key=lambda col: col.map(order), kind="stable")
    return table.reset_index(drop=True)
