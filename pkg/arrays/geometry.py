"""Array element placement and exact near-field source-element distances.

Elements sit on the YZ plane: rows (microstrips) run along z, columns along y,
and the reference element (row 0, column 0) is at the origin.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SourcePosition:
    """Polar source position with respect to the array reference element.

    Args:
        distance (float): Distance d in meters, must be positive.
        azimuth (float): Azimuth theta in radians.
        elevation (float): Elevation gamma in radians (pi/2 puts the source in the XY plane).
    """
    distance: float
    azimuth: float
    elevation: float = math.pi / 2

    def __post_init__(self):
        if not self.distance > 0:
            raise ValueError(f"source distance must be positive, got {self.distance}")

    def to_cartesian(self):
        sin_el = math.sin(self.elevation)
        return np.array([
            self.distance * sin_el * math.cos(self.azimuth),
            self.distance * sin_el * math.sin(self.azimuth),
            self.distance * math.cos(self.elevation),
        ])

    @classmethod
    def from_cartesian(cls, x, y, z=0.0):
        distance = math.sqrt(x * x + y * y + z * z)
        if distance == 0:
            raise ValueError("the array reference point is not a valid source position")
        return cls(distance, math.atan2(y, x), math.acos(z / distance))

    def xy(self):
        return self.to_cartesian()[:2]


@dataclass(frozen=True)
class ArrayLayout:
    """Rectangular N_d x N_e element grid on the YZ plane.

    Element (i, l) has flat index i * n_cols + l (0-based), the ordering used by
    every vector and matrix indexed by elements.
    """
    n_rows: int
    n_cols: int
    row_spacing: float
    col_spacing: float
    wavelength: float
    y: np.ndarray = field(init=False, repr=False, compare=False)
    z: np.ndarray = field(init=False, repr=False, compare=False)
    radius: np.ndarray = field(init=False, repr=False, compare=False)
    angle: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_rows) < 1 or int(self.n_cols) < 1:
            raise ValueError(f"array needs at least one row and column, got {self.n_rows}x{self.n_cols}")
        if not (self.row_spacing > 0 and self.col_spacing > 0 and self.wavelength > 0):
            raise ValueError("spacings and wavelength must be positive")

        rows, cols = np.meshgrid(np.arange(self.n_rows), np.arange(self.n_cols), indexing="ij")
        y = (cols * self.col_spacing).ravel().astype(float)
        z = (rows * self.row_spacing).ravel().astype(float)
        radius = np.hypot(y, z)
        # arctan2(0, 0) == 0 gives the reference element phi = 0
        angle = np.arctan2(y, z)
        for name, value in (("y", y), ("z", z), ("radius", radius), ("angle", angle)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n_elements(self):
        return self.n_rows * self.n_cols

    @property
    def row_index(self):
        """Microstrip (row) of every element, in flat element order."""
        return np.repeat(np.arange(self.n_rows), self.n_cols)

    @property
    def aperture(self):
        """Diagonal of the element bounding box."""
        return math.hypot((self.n_cols - 1) * self.col_spacing, (self.n_rows - 1) * self.row_spacing)

    def flat_index(self, row, col):
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            raise IndexError(f"element ({row}, {col}) outside a {self.n_rows}x{self.n_cols} array")
        return row * self.n_cols + col

    def element_position(self, row, col):
        k = self.flat_index(row, col)
        return np.array([0.0, self.y[k], self.z[k]])


def build_layout(n_rows, n_cols, wavelength, row_spacing, col_spacing):
    """
    Place an n_rows x n_cols array on the YZ plane.

    Args:
        n_rows (int): Number of rows / microstrips (N_d).
        n_cols (int): Elements per row (N_e).
        wavelength (float): Nominal wavelength in meters.
        row_spacing (float): Row separation in meters (5 lambda / 2 by default in experiments).
        col_spacing (float): Element separation along a row in meters.

    Returns:
        ArrayLayout: The element geometry.
    """
    return ArrayLayout(int(n_rows), int(n_cols), float(row_spacing), float(col_spacing), float(wavelength))


def _geometric_term(angle, azimuth, elevation):
    return np.sin(angle) * np.sin(azimuth) * np.sin(elevation) + np.cos(angle) * np.cos(elevation)


def element_distances(layout, distance, azimuth, elevation):
    """
    Distances from every element to every candidate source.

    Args:
        layout (ArrayLayout): Array geometry.
        distance, azimuth, elevation (array-like): Candidate coordinates, broadcast to shape (P,).

    Returns:
        np.ndarray: (N, P) matrix of element-source distances.
    """
    d, az, el = np.broadcast_arrays(np.atleast_1d(distance), np.atleast_1d(azimuth), np.atleast_1d(elevation))
    if np.any(d <= 0):
        raise ValueError("source distances must be positive")
    r = layout.radius[:, None]
    g = _geometric_term(layout.angle[:, None], az[None, :], el[None, :])
    squared = r * r + d[None, :] ** 2 - 2.0 * r * d[None, :] * g
    return np.sqrt(np.maximum(squared, 0.0))


def source_element_distance(layout, element, p):
    """
    Exact distance between one element and a source.

    Args:
        layout (ArrayLayout): Array geometry.
        element (tuple): (row, col) of the element, 0-based.
        p (SourcePosition): Source position.

    Returns:
        float: Distance in meters.
    """
    k = layout.flat_index(*element)
    r = layout.radius[k]
    g = _geometric_term(layout.angle[k], p.azimuth, p.elevation)
    return math.sqrt(max(r * r + p.distance ** 2 - 2.0 * r * p.distance * g, 0.0))


def fraunhofer_distance(layout):
    """Fraunhofer limit 2 D^2 / lambda of the layout's aperture."""
    return fraunhofer_limit(layout.aperture, layout.wavelength)


def fraunhofer_limit(aperture, wavelength):
    return 2.0 * aperture ** 2 / wavelength
