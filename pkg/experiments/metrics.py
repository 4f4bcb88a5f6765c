"""Estimate-to-truth matching and error statistics."""

import math

import numpy as np
from scipy.optimize import linear_sum_assignment


def _xy(positions):
    return np.array([p.xy() for p in positions]).reshape(-1, 2)


def match_estimates(estimates, truths):
    """
    Minimum-total-distance assignment of estimates to true positions in the XY plane.

    Returns:
        list: (estimate index, truth index) pairs, sorted by truth index.
    """
    est, tru = _xy(estimates), _xy(truths)
    if len(est) != len(tru):
        raise ValueError(f"{len(est)} estimates for {len(tru)} users")
    cost = np.linalg.norm(est[:, None, :] - tru[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()), key=lambda pair: pair[1])


def squared_errors(estimates, truths):
    """Squared XY error per user, indexed by truth, after optimal matching."""
    est, tru = _xy(estimates), _xy(truths)
    out = np.empty(len(tru))
    for e, t in match_estimates(estimates, truths):
        out[t] = float(np.sum((est[e] - tru[t]) ** 2))
    return out


def trial_error(estimates, truths):
    """Mean squared XY error over users, the per-trial e_n^2."""
    return float(np.mean(squared_errors(estimates, truths)))


def rmse(trial_errors):
    """
    RMSE over trials and its 95% half-width.

    Args:
        trial_errors (array-like): Per-trial mean squared errors.

    Returns:
        tuple: (rmse, ci95); ci95 is the delta-method 1.96 std(e^2) / (2 rmse sqrt(n)),
            zero with fewer than two trials or a zero RMSE.
    """
    e2 = np.asarray(trial_errors, dtype=float)
    if e2.size == 0:
        raise ValueError("no trials to aggregate")
    value = math.sqrt(float(np.mean(e2)))
    if e2.size < 2 or value == 0:
        return value, 0.0
    return value, 1.96 * float(np.std(e2, ddof=1)) / (2.0 * value * math.sqrt(e2.size))
