"""Experiment families built on the Monte-Carlo pipeline."""

import logging
from dataclasses import replace

import numpy as np
import pandas as pd

from arrays.frontend import AnalogWeights, ArchitectureKind
from arrays.geometry import SourcePosition, build_layout
from beamfocus.dispatch import TuningMethod, tune
from experiments.metrics import match_estimates, rmse, trial_error
from experiments.pipeline import alternating_localize, monte_carlo_rmse, run_trial, trial_records, trial_task
from experiments.scenario import get_scheme
from experiments.workers import run_tasks
from internal.errors import DegenerateGeometryError
from signals.channel import channel_matrix, snr_to_noise_variance

logger = logging.getLogger(__name__)

HEATMAP_MODES = ("localize-everywhere", "fixed-focus")


def snr_sweep(spec, workers=None):
    """RMSE against SNR for every configured scheme."""
    return monte_carlo_rmse(spec, workers=workers)


def _cells(xs, ys):
    """Row-major cells: y selects the row, x the column."""
    return [(float(x), float(y)) for y in ys for x in xs]


def _fixed_weights_trial(args):
    spec, scheme_name, weights, trial = args
    scheme = get_scheme(scheme_name)
    layout = scheme.layout_for(spec.layout)
    architecture = scheme.architecture_for(layout, spec)
    G = channel_matrix(layout, spec.users, spec.cfg)
    cfg = replace(spec.cfg, noise_variance=snr_to_noise_variance(spec.snr_db[0], G.noiseless_signal(spec.cfg)))
    result, _ = alternating_localize(G, layout, cfg, architecture, TuningMethod.NONE, spec.n_users, spec.grid,
                                     spec.max_iterations, entropy=spec.trial_entropy(0, trial),
                                     initial_weights=weights)
    return trial_error(result.estimates, spec.users)


def focus_weights(spec, scheme_name, focus):
    """Weights of a scheme tuned once for a declared focus point."""
    scheme = get_scheme(scheme_name)
    layout = scheme.layout_for(spec.layout)
    architecture = scheme.architecture_for(layout, spec)
    if architecture.kind is ArchitectureKind.FULLY_DIGITAL:
        return AnalogWeights.identity(layout.n_elements)
    method = scheme.method if scheme.method in (TuningMethod.PROJECTION, TuningMethod.RCG) else TuningMethod.RCG
    return tune([focus], architecture, method, layout, spec.cfg, spec.rcg)


def heatmap_sweep(spec, xs, ys, mode="localize-everywhere", focus=None, scheme=None, workers=None):
    """
    RMSE of a single user placed at every cell of an XY grid.

    In localize-everywhere mode each cell runs the scheme's full pipeline. In fixed-focus
    mode the weights are tuned once for `focus` and every cell is localized with them.

    Args:
        spec (ExperimentSpec): Scenario; its first SNR point is used.
        xs, ys (array-like): Grid coordinates in meters.
        mode (str): "localize-everywhere" or "fixed-focus".
        focus (SourcePosition, optional): Focus point, required in fixed-focus mode.
        scheme (str, optional): Scheme name; defaults to the first configured scheme.
        workers (int, optional): Process count.

    Returns:
        pandas.DataFrame: Columns x_m, y_m, rmse_m in row-major order; cells with x <= 0 are NaN.
    """
    if mode not in HEATMAP_MODES:
        raise ValueError(f"unknown heatmap mode {mode!r}; expected one of {', '.join(HEATMAP_MODES)}")
    scheme = scheme or spec.schemes[0]
    get_scheme(scheme)
    cells = _cells(xs, ys)
    valid = [(x, y) for x, y in cells if x > 0]
    trials = range(int(spec.monte_carlo_trials))

    if mode == "fixed-focus":
        if focus is None:
            raise ValueError("fixed-focus mode needs a focus position")
        weights = focus_weights(spec, scheme, focus)
        tasks = [(spec.with_users([SourcePosition.from_cartesian(x, y)]), scheme, weights, t)
                 for x, y in valid for t in trials]
        errors = run_tasks(_fixed_weights_trial, tasks, workers)
    else:
        tasks = [(spec.with_users([SourcePosition.from_cartesian(x, y)]), scheme, 0, t)
                 for x, y in valid for t in trials]
        errors = [record.error for record in run_tasks(trial_task, tasks, workers)]
    logger.info(f"heatmap: {len(valid)} cells x {len(trials)} trials done")

    per_cell = iter(np.reshape(errors, (len(valid), len(trials))) if valid else [])
    values = []
    for x, y in cells:
        values.append(rmse(next(per_cell))[0] if x > 0 else np.nan)
    return pd.DataFrame({"x_m": [c[0] for c in cells], "y_m": [c[1] for c in cells], "rmse_m": values})


def rf_layout(base, rf_count):
    """
    Layout with `rf_count` microstrips spread over the base aperture height.

    Raises:
        DegenerateGeometryError: When the count cannot tile the aperture.
    """
    rf_count = int(rf_count)
    if rf_count < 1:
        raise DegenerateGeometryError(f"RF-chain count must be positive, got {rf_count}")
    height = (base.n_rows - 1) * base.row_spacing
    if rf_count == 1:
        return build_layout(1, base.n_cols, base.wavelength, base.row_spacing, base.col_spacing)
    if height == 0:
        raise DegenerateGeometryError("a single-row aperture cannot hold several microstrips")
    spacing = height / (rf_count - 1)
    if spacing < base.col_spacing:
        raise DegenerateGeometryError(f"{rf_count} microstrips over {height:.4g} m are closer "
                                      f"than the element spacing {base.col_spacing:.4g} m")
    return build_layout(rf_count, base.n_cols, base.wavelength, spacing, base.col_spacing)


def rf_sweep(spec, rf_counts, workers=None):
    """RMSE against the number of RF chains at fixed aperture; adds an n_rf column."""
    layouts = [(int(c), rf_layout(spec.layout, c)) for c in rf_counts]
    tables = []
    for count, layout in layouts:
        table = monte_carlo_rmse(spec.with_layout(layout), workers=workers)
        table.insert(0, "n_rf", count)
        tables.append(table)
        logger.info(f"rf sweep: {count} RF chains done")
    return pd.concat(tables, ignore_index=True)


def convergence_track(spec, schemes=None, workers=None):
    """
    RMSE after every outer iteration at the first SNR point.

    Iteration 0 is the initialization; schemes that stop early repeat their final estimate.

    Returns:
        pandas.DataFrame: Columns scheme, snr_db, iteration, rmse_m.
    """
    schemes = tuple(schemes or spec.schemes)
    records = trial_records(spec, schemes, snr_indices=[0], workers=workers)
    rows = []
    for name in schemes:
        errors = np.array([r.iteration_errors for r in records if r.scheme == name])
        for iteration in range(errors.shape[1]):
            rows.append({"scheme": name, "snr_db": spec.snr_db[0], "iteration": iteration,
                         "rmse_m": rmse(errors[:, iteration])[0]})
    return pd.DataFrame(rows)


def single_run(spec, scheme=None, snr_index=0, trial=0):
    """
    One trial with its full estimate track.

    Returns:
        tuple: (summary DataFrame with one row per user, track DataFrame with columns
            iteration, user_index, d_m, theta_rad, x_m, y_m, objective).
    """
    scheme = scheme or spec.schemes[0]
    record = run_trial(spec, scheme, snr_index, trial)
    result = record.result
    track = []
    for iteration, (hypotheses, objective) in enumerate(zip(result.per_iteration_track, result.objective_track)):
        for m, p in enumerate(hypotheses):
            x, y = p.xy()
            track.append({"iteration": iteration, "user_index": m, "d_m": p.distance, "theta_rad": p.azimuth,
                          "x_m": x, "y_m": y, "objective": objective})
    summary = []
    for e, t in match_estimates(result.estimates, spec.users):
        est, truth = result.estimates[e].xy(), spec.users[t].xy()
        summary.append({"scheme": scheme, "snr_db": record.snr_db, "user_index": t,
                        "true_x_m": truth[0], "true_y_m": truth[1], "x_m": est[0], "y_m": est[1],
                        "error_m": float(np.linalg.norm(est - truth)),
                        "iterations_used": result.iterations_used, "converged": result.converged})
    return pd.DataFrame(summary), pd.DataFrame(track)
