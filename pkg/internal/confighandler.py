import os
import re
import json
import math
import logging

import numpy as np

from arrays.geometry import SourcePosition, build_layout, fraunhofer_distance
from beamfocus.rcg import RcgSettings
from estimators.localizer import SearchGrid
from experiments.scenario import ExperimentSpec, get_scheme
from internal.errors import ConfigError
from signals.channel import SimulationConfig

logger = logging.getLogger(__name__)

USER_KEYS = ("distance_m", "distance_nf_fraction", "azimuth_rad", "elevation_rad")

# two users a quarter of the near-field radius away, at pi/6 and pi/4
DESK_USERS = [{"distance_nf_fraction": 0.25, "azimuth_rad": math.pi / 6},
              {"distance_nf_fraction": 0.25, "azimuth_rad": math.pi / 4}]


class ConfigHandler:
    # Class-level defaults dictionary
    _default_config = {}
    # Keys without a default
    _required_keys = ("users",)

    @classmethod
    def set_defaults(cls, defaults_dict):
        """
        Set default configuration values at the class level.

        Args:
            defaults_dict (dict): Dictionary mapping setting names to their default values.
        """
        cls._default_config.update(defaults_dict)

    @classmethod
    def get_defaults(cls):
        """
        Get the current default configuration values.

        Returns:
            dict: The default configuration values.
        """
        return json.loads(json.dumps(cls._default_config))

    @classmethod
    def write_defaults(cls, path, **values):
        """
        Write the defaults, updated with `values`, as a key-sorted JSON config.

        Args:
            path (str): Destination file.
            **values: Entries added to or replacing the defaults (e.g. users).
        """
        data = cls.get_defaults()
        data.update(values)
        with open(path, "w", encoding="utf-8") as config_file:
            json.dump({key: data[key] for key in sorted(data)}, config_file, indent=4)
            config_file.write("\n")
        logger.info(f"Configuration saved to {path}")

    @classmethod
    def known_keys(cls):
        return set(cls._default_config) | set(cls._required_keys)

    def __init__(self, config_path=None):
        """
        Load a run configuration.

        Args:
            config_path (str): Path to the JSON configuration. If None, uses config.cfg at the
                             repository root.
        """
        if config_path is None:
            current_dir = os.path.dirname(os.path.abspath(__file__))
            config_path = os.path.join(os.path.dirname(current_dir), "config.cfg")

        self.config_path = config_path
        self.config_text = ""
        self.config_data = {}
        self.load_config()
        self.ensure_defaults(self._default_config)

    def load_config(self):
        """
        Load configuration from the config file into a dictionary.

        Raises:
            ConfigError: Missing file, malformed JSON, unknown or missing keys.
        """
        if not os.path.exists(self.config_path):
            raise ConfigError(f"config file {self.config_path} not found (write one with init-config)")
        with open(self.config_path, "r", encoding="utf-8") as config_file:
            self.config_text = config_file.read()
        try:
            data = json.loads(self.config_text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed JSON: {e.msg}", line=e.lineno) from None
        if not isinstance(data, dict):
            raise ConfigError("the configuration must be a JSON object", line=1)

        unknown = [key for key in data if key not in self.known_keys()]
        if unknown:
            key = min(unknown, key=lambda k: self.line_of(k) or 0)
            raise ConfigError(f"unknown key '{key}'", line=self.line_of(key))
        for key in self._required_keys:
            if key not in data:
                raise ConfigError(f"missing required key '{key}'")
        self.config_data = data
        logger.info(f"Configuration loaded from {self.config_path}")

    def get_value(self, key, default=None):
        return self.config_data.get(key, default)

    def set_value(self, key, value):
        """
        Set a known configuration key in memory.

        Args:
            key (str): The configuration key to set.
            value: The value to associate with the key.
        """
        if key not in self.known_keys():
            raise ConfigError(f"unknown key '{key}'")
        self.config_data[key] = value

    def ensure_defaults(self, defaults_dict):
        """
        Fill in missing settings with their defaults, without touching the file.

        Args:
            defaults_dict (dict): Dictionary mapping setting names to their default values.

        Returns:
            bool: True if any defaults were added, False otherwise.
        """
        added_defaults = False
        for key, default_value in defaults_dict.items():
            if key not in self.config_data:
                self.config_data[key] = json.loads(json.dumps(default_value))
                added_defaults = True
                logger.debug(f"Using default configuration for '{key}': {default_value}")
        return added_defaults

    def apply_overrides(self, seed=None, workers=None, output_dir=None):
        """Command-line overrides; the resolved values are what output headers record."""
        if seed is not None:
            self.set_value("base_seed", int(seed))
        if workers is not None:
            self.set_value("workers", int(workers))
        if output_dir is not None:
            self.set_value("output_dir", output_dir)

    def resolved(self):
        """The configuration after defaults and overrides, key-sorted."""
        return {key: self.config_data[key] for key in sorted(self.config_data)}

    def line_of(self, key):
        """1-based line of the first occurrence of `"key":` in the file text, or None."""
        match = re.search(r'"%s"\s*:' % re.escape(key), self.config_text)
        if match is None:
            return None
        return self.config_text.count("\n", 0, match.start()) + 1

    # conversion helpers

    def _fail(self, key, message):
        raise ConfigError(f"'{key}': {message}", line=self.line_of(key))

    def number(self, key, minimum=None, exclusive=False, allow_none=False):
        value = self.config_data.get(key)
        if value is None and allow_none:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self._fail(key, f"expected a number, got {value!r}")
        value = float(value)
        if minimum is not None and (value <= minimum if exclusive else value < minimum):
            self._fail(key, f"must be {'>' if exclusive else '>='} {minimum}, got {value}")
        return value

    def integer(self, key, minimum=None, allow_none=False):
        value = self.config_data.get(key)
        if value is None and allow_none:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            self._fail(key, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self._fail(key, f"must be >= {minimum}, got {value}")
        return value

    def pair(self, key, allow_none=False):
        value = self.config_data.get(key)
        if value is None and allow_none:
            return None
        if (not isinstance(value, list) or len(value) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)):
            self._fail(key, f"expected [min, max], got {value!r}")
        if value[0] > value[1]:
            self._fail(key, f"min exceeds max in {value!r}")
        return float(value[0]), float(value[1])

    def number_list(self, key, integer=False):
        value = self.config_data.get(key)
        kind = int if integer else (int, float)
        if (not isinstance(value, list) or not value
                or any(isinstance(v, bool) or not isinstance(v, kind) for v in value)):
            self._fail(key, f"expected a non-empty list of {'integers' if integer else 'numbers'}, got {value!r}")
        return [int(v) if integer else float(v) for v in value]

    def scheme_list(self, key):
        value = self.config_data.get(key)
        if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
            self._fail(key, f"expected a non-empty list of scheme names, got {value!r}")
        for name in value:
            try:
                get_scheme(name)
            except ValueError as e:
                self._fail(key, str(e))
        return tuple(value)

    def position(self, key, entry, near_field_radius):
        if not isinstance(entry, dict):
            self._fail(key, f"expected a position object, got {entry!r}")
        unknown = sorted(set(entry) - set(USER_KEYS))
        if unknown:
            self._fail(key, f"unknown position key '{unknown[0]}'")
        if ("distance_m" in entry) == ("distance_nf_fraction" in entry):
            self._fail(key, "give exactly one of distance_m and distance_nf_fraction")
        try:
            if "distance_m" in entry:
                distance = float(entry["distance_m"])
            else:
                distance = float(entry["distance_nf_fraction"]) * near_field_radius
            elevation = float(entry.get("elevation_rad", self.number("elevation_rad")))
            return SourcePosition(distance, float(entry.get("azimuth_rad", 0.0)), elevation)
        except (TypeError, ValueError) as e:
            self._fail(key, str(e))

    # typed views

    def layout(self):
        wavelength = self.number("wavelength_m", 0, exclusive=True)
        return build_layout(
            self.integer("n_rows", 1),
            self.integer("n_cols", 1),
            wavelength,
            self.number("row_spacing_wavelengths", 0, exclusive=True) * wavelength,
            self.number("col_spacing_wavelengths", 0, exclusive=True) * wavelength,
        )

    def near_field_radius(self, layout):
        radius = self.number("near_field_radius_m", 0, exclusive=True, allow_none=True)
        return fraunhofer_distance(layout) if radius is None else radius

    def search_grid(self, near_field_radius):
        lo, hi = self.pair("grid_distance_nf_fraction")
        if lo <= 0:
            self._fail("grid_distance_nf_fraction", "the search region must start beyond the array (> 0)")
        try:
            return SearchGrid(
                distance_range=(lo * near_field_radius, hi * near_field_radius),
                azimuth_range=self.pair("grid_azimuth_rad"),
                elevation_range=self.pair("grid_elevation_rad", allow_none=True),
                n_distance=self.integer("grid_distance_points", 2),
                n_azimuth=self.integer("grid_azimuth_points", 2),
                n_elevation=self.integer("grid_elevation_points", 1),
                refine_levels=self.integer("grid_refine_levels", 0),
                fix_elevation=self.number("elevation_rad"),
            )
        except ValueError as e:
            raise ConfigError(f"search grid: {e}", line=self.line_of("grid_distance_nf_fraction")) from None

    def rcg_settings(self):
        try:
            return RcgSettings(
                max_iters=self.integer("rcg_max_iterations", 0),
                grad_tolerance=self.number("rcg_grad_tolerance", 0),
                initial_step=self.number("rcg_initial_step", 0, exclusive=True),
                shrink=self.number("rcg_shrink"),
                sufficient_decrease=self.number("rcg_sufficient_decrease"),
                max_backtracks=self.integer("rcg_max_backtracks", 1),
            )
        except ValueError as e:
            raise ConfigError(f"RCG settings: {e}", line=self.line_of("rcg_shrink")) from None

    def to_spec(self):
        """
        Convert the configuration into an ExperimentSpec.

        Raises:
            ConfigError: Any value of the wrong type or out of range.
        """
        layout = self.layout()
        radius = self.near_field_radius(layout)
        users = self.config_data.get("users")
        if not isinstance(users, list) or not users:
            self._fail("users", "expected a non-empty list of positions")
        try:
            cfg = SimulationConfig(
                carrier_frequency=self.number("carrier_frequency_hz", 0, exclusive=True),
                speed_of_light=self.number("speed_of_light_m_per_s", 0, exclusive=True),
                n_snapshots=self.integer("n_snapshots", 1),
                rng_seed=self.integer("base_seed", 0),
            )
            return ExperimentSpec(
                layout=layout,
                cfg=cfg,
                users=self._users(users, radius),
                snr_db=self._snr_grid(),
                grid=self.search_grid(radius),
                monte_carlo_trials=self.integer("monte_carlo_trials", 1),
                base_seed=self.integer("base_seed", 0),
                schemes=self.scheme_list("schemes"),
                max_iterations=self.integer("max_iterations", 0),
                rcg=self.rcg_settings(),
                waveguide_attenuation=self.number("waveguide_attenuation_per_m", 0),
                waveguide_wavenumber=self.number("waveguide_wavenumber_per_m"),
                near_field_radius=radius,
            )
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def _users(self, entries, near_field_radius):
        users = [self.position("users", entry, near_field_radius) for entry in entries]
        for i, p in enumerate(users):
            if p in users[:i]:
                self._fail("users", f"entry {i} repeats the position of entry {users.index(p)} "
                                    f"(d = {p.distance:g} m, azimuth = {p.azimuth:g} rad)")
        return users

    def _snr_grid(self):
        """SNR points ascending; JSON Infinity gives a noiseless point."""
        points = sorted(self.number_list("snr_db"))
        repeated = sorted({s for s in points if points.count(s) > 1})
        if repeated:
            self._fail("snr_db", f"duplicate SNR point {repeated[0]:g} dB")
        return points

    def workers(self):
        return self.integer("workers", 1, allow_none=True)

    def heatmap_axes(self):
        """x and y coordinates of the heatmap grid (one point for a zero-width range)."""
        resolution = self.number("heatmap_resolution_m", 0, exclusive=True)
        axes = []
        for key in ("heatmap_x_m", "heatmap_y_m"):
            lo, hi = self.pair(key)
            steps = (hi - lo) / resolution
            if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
                self._fail(key, f"range width {hi - lo:g} m is not a multiple of "
                                f"heatmap_resolution_m = {resolution:g}")
            count = int(round(steps)) + 1
            axes.append(np.linspace(lo, hi, count))
        return axes

    def heatmap_focus(self, near_field_radius):
        focus = self.config_data.get("heatmap_focus")
        return None if focus is None else self.position("heatmap_focus", focus, near_field_radius)


# Desk-scale defaults; every physical quantity carries its unit in the key name
ConfigHandler.set_defaults({
    "n_rows": 4,
    "n_cols": 8,
    "wavelength_m": 0.01,
    "row_spacing_wavelengths": 2.5,
    "col_spacing_wavelengths": 0.5,
    "carrier_frequency_hz": 28e9,
    "speed_of_light_m_per_s": 299792458.0,
    "waveguide_attenuation_per_m": 0.6,
    "waveguide_wavenumber_per_m": 827.67,
    "near_field_radius_m": None,
    "elevation_rad": math.pi / 2,
    "snr_db": [-15, -10, -5, 0],
    "n_snapshots": 50,
    "monte_carlo_trials": 50,
    "base_seed": 0,
    "schemes": ["fully_digital", "hybrid_projection", "dma_rcg", "dma_projection", "dma_random",
                "dma_rcg_quarter"],
    "max_iterations": 5,
    "grid_distance_nf_fraction": [0.05, 2.0],
    "grid_azimuth_rad": [-1.2, 1.2],
    "grid_elevation_rad": None,
    "grid_distance_points": 40,
    "grid_azimuth_points": 60,
    "grid_elevation_points": 1,
    "grid_refine_levels": 2,
    "rcg_max_iterations": 200,
    "rcg_grad_tolerance": 1e-8,
    "rcg_initial_step": 1.0,
    "rcg_shrink": 0.5,
    "rcg_sufficient_decrease": 1e-4,
    "rcg_max_backtracks": 30,
    "rf_counts": [2, 4, 8],
    "heatmap_x_m": [0.1, 2.0],
    "heatmap_y_m": [-1.0, 1.0],
    "heatmap_resolution_m": 0.1,
    "heatmap_mode": "localize-everywhere",
    "heatmap_focus": None,
    "heatmap_scheme": None,
    "convergence_schemes": ["dma_rcg", "dma_given_position", "dma_random", "fully_digital"],
    "workers": None,
    "verbosity": "INFO",
    "output_dir": "results",
})
