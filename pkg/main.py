import argparse
import logging
import os
import sys

import pandas as pd

import internal.confighandler as confighandler
from beamfocus.projection import focusing_gain_map
from experiments import sweeps
from experiments.scenario import get_scheme
from internal.errors import (ConfigError, DegenerateGeometryError, NumericalError,
                             EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL)
from internal.tables import write_table
from signals.channel import Receiver, check_wavelength


logger = logging.getLogger(__name__)


def configure_logging(verbosity):
    """Route log records to stderr at the configured level."""
    level = getattr(logging, str(verbosity).upper(), None)
    if not isinstance(level, int):
        raise ConfigError(f"'verbosity': unknown log level {verbosity!r}")
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)


def load_run(args):
    """
    Load the configuration named on the command line and apply the overrides.

    Args:
        args: Parsed command-line arguments.

    Returns:
        tuple: (ConfigHandler, ExperimentSpec)
    """
    handler = confighandler.ConfigHandler(args.config)
    handler.apply_overrides(seed=args.seed_override, workers=args.workers, output_dir=args.out)
    configure_logging("DEBUG" if args.verbose else handler.get_value("verbosity"))
    spec = handler.to_spec()
    check_wavelength(spec.layout, spec.cfg)
    return handler, spec


def output_path(handler, name):
    return os.path.join(handler.get_value("output_dir"), name)


def write(handler, spec, command, table, name, notes=None):
    path = write_table(table, output_path(handler, name), command, spec.base_seed, handler.resolved(), notes)
    print(f"{command}: {len(table)} rows -> {path}")
    return path


def cmd_snr_sweep(handler, spec):
    """RMSE against SNR for every configured scheme."""
    table = sweeps.snr_sweep(spec, workers=handler.workers())
    return [write(handler, spec, "snr-sweep", table, "snr_sweep.csv")]


def _focus(handler, spec):
    focus = handler.heatmap_focus(spec.near_field_radius)
    return spec.users[0] if focus is None else focus


def _heatmap_scheme(handler, spec):
    scheme = handler.get_value("heatmap_scheme") or spec.schemes[0]
    try:
        get_scheme(scheme)
    except ValueError as e:
        raise ConfigError(f"'heatmap_scheme': {e}", line=handler.line_of("heatmap_scheme")) from None
    return scheme


def cmd_heatmap(handler, spec):
    """RMSE of a single user over the configured XY region."""
    xs, ys = handler.heatmap_axes()
    mode = handler.get_value("heatmap_mode")
    if mode not in sweeps.HEATMAP_MODES:
        raise ConfigError(f"'heatmap_mode': expected one of {', '.join(sweeps.HEATMAP_MODES)}, got {mode!r}",
                          line=handler.line_of("heatmap_mode"))
    scheme = _heatmap_scheme(handler, spec)
    notes = {"mode": mode, "scheme": scheme}
    focus = None
    if mode == "fixed-focus":
        focus = _focus(handler, spec)
        x, y = focus.xy()
        notes.update(focus_x_m=f"{x:.10g}", focus_y_m=f"{y:.10g}")
    table = sweeps.heatmap_sweep(spec, xs, ys, mode, focus, scheme, workers=handler.workers())
    return [write(handler, spec, "heatmap", table, "heatmap.csv", notes)]


def cmd_converge(handler, spec):
    """Per-iteration RMSE of the convergence schemes."""
    schemes = handler.scheme_list("convergence_schemes")
    table = sweeps.convergence_track(spec, schemes, workers=handler.workers())
    return [write(handler, spec, "converge", table, "convergence.csv")]


def cmd_rf_sweep(handler, spec):
    """RMSE against the number of RF chains at fixed aperture."""
    counts = handler.number_list("rf_counts", integer=True)
    try:
        table = sweeps.rf_sweep(spec, counts, workers=handler.workers())
    except DegenerateGeometryError as e:
        raise ConfigError(f"'rf_counts': {e}", line=handler.line_of("rf_counts")) from None
    return [write(handler, spec, "rf-sweep", table, "rf_sweep.csv")]


def cmd_single_run(handler, spec):
    """One trial of the first scheme at the first SNR point, with its estimate track."""
    summary, track = sweeps.single_run(spec)
    return [write(handler, spec, "single-run", summary, "single_run_summary.csv"),
            write(handler, spec, "single-run", track, "single_run_track.csv")]


def cmd_beam_pattern(handler, spec):
    """Normalized received power over the heatmap region for weights focused on one point."""
    xs, ys = handler.heatmap_axes()
    scheme = _heatmap_scheme(handler, spec)
    focus = _focus(handler, spec)
    weights = sweeps.focus_weights(spec, scheme, focus)
    layout = get_scheme(scheme).layout_for(spec.layout)
    architecture = get_scheme(scheme).architecture_for(layout, spec)
    receiver = Receiver(layout, spec.cfg, weights, architecture.response(layout))
    gain = focusing_gain_map(receiver, xs, ys)
    table = pd.DataFrame({"x_m": [x for _ in ys for x in xs], "y_m": [y for y in ys for _ in xs],
                          "gain": gain.ravel()})
    x, y = focus.xy()
    notes = {"scheme": scheme, "focus_x_m": f"{x:.10g}", "focus_y_m": f"{y:.10g}"}
    return [write(handler, spec, "beam-pattern", table, "beam_pattern.csv", notes)]


COMMANDS = {
    "snr-sweep": cmd_snr_sweep,
    "heatmap": cmd_heatmap,
    "converge": cmd_converge,
    "rf-sweep": cmd_rf_sweep,
    "single-run": cmd_single_run,
    "beam-pattern": cmd_beam_pattern,
}


def init_config(path, force=False):
    """
    Write the default configuration, with the two-user desk scenario, to a file.

    Args:
        path (str): Destination file.
        force (bool): Overwrite an existing file.
    """
    if os.path.exists(path) and not force:
        raise ConfigError(f"{path} already exists (use --force to overwrite)")
    confighandler.ConfigHandler.write_defaults(path, users=confighandler.DESK_USERS)
    print(f"Wrote default configuration to {path}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON run configuration (default: config.cfg)")
    common.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    common.add_argument("--workers", type=int, default=None, help="worker processes (default: available CPUs)")
    common.add_argument("--seed-override", type=int, default=None, help="replace base_seed")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="focusmin",
        description="Near-field multi-user localization with fully digital, hybrid and DMA arrays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__.strip().splitlines()[0])
    init = sub.add_parser("init-config", help="write the default configuration")
    init.add_argument("path", nargs="?", default="config.cfg")
    init.add_argument("--force", action="store_true")
    return parser


def main(argv=None):
    """
    Command-line entry point.

    Returns:
        int: 0 on success, 2 for configuration errors, 3 for numerical failures.
    """
    args = build_parser().parse_args(argv)
    try:
        if args.command == "init-config":
            init_config(args.path, args.force)
            return EXIT_OK
        handler, spec = load_run(args)
        COMMANDS[args.command](handler, spec)
        return EXIT_OK
    except (ConfigError, DegenerateGeometryError) as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as e:
        print(f"Numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
