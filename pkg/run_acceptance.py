#!/usr/bin/env python
"""
Opt-in acceptance run at desk scale. Each check runs a Monte-Carlo experiment on
the given configuration and compares the resulting RMSE figures:
1. SNR ordering: fully digital <= hybrid projection <= DMA RCG <= DMA projection
   <= DMA random, and lambda/4 DMA <= lambda/2 DMA, each with 10% slack
2. Convergence: alternating DMA RCG ends within 15% of the given-position scheme,
   at most one iteration later
3. Near-field advantage: median RMSE inside half the near-field radius is below
   the median beyond 1.5 times the radius

The runs take minutes, so they are not part of run_tests.sh.
"""

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

import main as cli
from experiments import sweeps
from internal.confighandler import ConfigHandler

ORDERING = ("fully_digital", "hybrid_projection", "dma_rcg", "dma_projection", "dma_random")
SPACING_PAIRS = (("dma_rcg_quarter", "dma_rcg"),)
ORDER_SLACK = 0.10
CONVERGENCE_SLACK = 0.15
NEAR_FRACTIONS = (0.1, 0.2, 0.3, 0.4)
FAR_FRACTIONS = (1.6, 1.7, 1.8, 1.9)


def not_above(a, b, slack):
    """a <= b with a one-sided slack of `slack` times the larger value."""
    return a <= b + slack * max(a, b)


def check_ordering(spec, workers):
    print("=== SNR ordering ===")
    schemes = tuple(dict.fromkeys(ORDERING + tuple(s for pair in SPACING_PAIRS for s in pair)))
    table = sweeps.snr_sweep(replace(spec, snr_db=(-15.0, -10.0, -5.0, 0.0), schemes=schemes), workers)
    print(table.to_string(index=False))
    mean = table.groupby("scheme")["rmse_m"].mean()
    ok = True
    for better, worse in list(zip(ORDERING, ORDERING[1:])) + list(SPACING_PAIRS):
        passed = not_above(mean[better], mean[worse], ORDER_SLACK)
        ok = ok and passed
        print(f"{'PASS' if passed else 'FAIL'}: {better} {mean[better]:.4f} m <= {worse} {mean[worse]:.4f} m")
    return ok


def first_within(track, target, slack):
    hits = np.flatnonzero(np.asarray(track) <= target * (1 + slack))
    return int(hits[0]) if hits.size else None


def check_convergence(spec, workers):
    print("\n=== Convergence at -5 dB ===")
    table = sweeps.convergence_track(replace(spec, snr_db=(-5.0,)), ["dma_rcg", "dma_given_position"], workers)
    print(table.to_string(index=False))
    alternating = table[table["scheme"] == "dma_rcg"]["rmse_m"].to_numpy()
    given = table[table["scheme"] == "dma_given_position"]["rmse_m"].to_numpy()
    final_ok = abs(alternating[-1] - given[-1]) <= CONVERGENCE_SLACK * given[-1]
    print(f"{'PASS' if final_ok else 'FAIL'}: final {alternating[-1]:.4f} m against given-position {given[-1]:.4f} m")
    reached = first_within(alternating, given[-1], CONVERGENCE_SLACK)
    settled = first_within(given, given[-1], CONVERGENCE_SLACK)
    speed_ok = reached is not None and reached <= settled + 1
    print(f"{'PASS' if speed_ok else 'FAIL'}: reached at iteration {reached}, given-position settles at {settled}")
    return final_ok and speed_ok


def check_near_field(spec, scheme, workers):
    print("\n=== Near-field advantage at -10 dB ===")
    radius = spec.near_field_radius
    xs = [f * radius for f in NEAR_FRACTIONS + FAR_FRACTIONS]
    table = sweeps.heatmap_sweep(replace(spec, snr_db=(-10.0,)), xs, [0.0], scheme=scheme, workers=workers)
    print(table.to_string(index=False))
    inside = table["rmse_m"][table["x_m"] < 0.5 * radius].median()
    beyond = table["rmse_m"][table["x_m"] > 1.5 * radius].median()
    passed = inside < beyond
    print(f"{'PASS' if passed else 'FAIL'}: median {inside:.4f} m inside 0.5 R, {beyond:.4f} m beyond 1.5 R")
    return passed


def main():
    parser = argparse.ArgumentParser(description="Run the desk-scale acceptance experiments")
    parser.add_argument("--config", default=None, help="JSON run configuration (default: config.cfg)")
    parser.add_argument("--workers", type=int, default=None, help="worker processes (default: available CPUs)")
    parser.add_argument("--trials", type=int, default=None, help="replace monte_carlo_trials")
    parser.add_argument("--near-field-scheme", default="dma_rcg", help="scheme of the radial sweep")
    parser.add_argument("--only", choices=("ordering", "convergence", "near-field"), default=None,
                        help="run a single check")
    args = parser.parse_args()

    script_dir = os.path.dirname(os.path.abspath(__file__))
    handler = ConfigHandler(args.config or os.path.join(script_dir, "config.cfg"))
    cli.configure_logging(handler.get_value("verbosity"))
    spec = handler.to_spec()
    if args.trials is not None:
        spec = replace(spec, monte_carlo_trials=args.trials)
    workers = args.workers if args.workers is not None else handler.workers()

    checks = {
        "ordering": lambda: check_ordering(spec, workers),
        "convergence": lambda: check_convergence(spec, workers),
        "near-field": lambda: check_near_field(spec, args.near_field_scheme, workers),
    }
    results = {name: check() for name, check in checks.items() if args.only in (None, name)}
    print("\n=== Summary ===")
    for name, passed in results.items():
        print(f"{name}: {'PASS' if passed else 'FAIL'}")
    return 0 if all(results.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
