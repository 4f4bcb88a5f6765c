import math
import os
import sys
import unittest

import numpy as np

# Add the parent directory to the path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from arrays.geometry import (SourcePosition, build_layout, element_distances, fraunhofer_distance,
                             fraunhofer_limit, source_element_distance)


class TestBuildLayout(unittest.TestCase):

    def test_single_element_at_origin(self):
        layout = build_layout(1, 1, 0.01, 0.025, 0.005)
        self.assertEqual(layout.n_elements, 1)
        self.assertEqual(layout.radius[0], 0.0)
        self.assertEqual(layout.angle[0], 0.0)

    def test_pure_y_offset_element(self):
        layout = build_layout(10, 50, 0.01, 0.025, 0.005)
        self.assertEqual(layout.n_elements, 500)
        np.testing.assert_allclose(layout.element_position(0, 1), [0.0, 0.005, 0.0])
        k = layout.flat_index(0, 1)
        self.assertAlmostEqual(layout.radius[k], 0.005, places=15)
        self.assertAlmostEqual(layout.angle[k], math.pi / 2, places=15)

    def test_quarter_wavelength_dma_size(self):
        layout = build_layout(10, 100, 0.01, 0.025, 0.0025)
        self.assertEqual(layout.n_elements, 1000)
        self.assertEqual(list(layout.row_index[:3]), [0, 0, 0])
        self.assertEqual(layout.row_index[100], 1)

    def test_rejects_bad_dimensions(self):
        with self.assertRaises(ValueError):
            build_layout(0, 4, 0.01, 0.025, 0.005)
        with self.assertRaises(ValueError):
            build_layout(2, 4, 0.01, -0.025, 0.005)

    def test_deterministic(self):
        a = build_layout(3, 5, 0.01, 0.025, 0.005)
        b = build_layout(3, 5, 0.01, 0.025, 0.005)
        self.assertEqual(a, b)
        np.testing.assert_array_equal(a.radius, b.radius)
        np.testing.assert_array_equal(a.angle, b.angle)

    def test_flat_index_out_of_range(self):
        layout = build_layout(2, 3, 0.01, 0.025, 0.005)
        with self.assertRaises(IndexError):
            layout.flat_index(2, 0)


class TestSourcePosition(unittest.TestCase):

    def test_cartesian_mapping(self):
        p = SourcePosition(2.0, math.pi / 6, math.pi / 3)
        x, y, z = p.to_cartesian()
        self.assertAlmostEqual(x, 2.0 * math.sin(math.pi / 3) * math.cos(math.pi / 6))
        self.assertAlmostEqual(y, 2.0 * math.sin(math.pi / 3) * math.sin(math.pi / 6))
        self.assertAlmostEqual(z, 2.0 * math.cos(math.pi / 3))

    def test_from_cartesian_inverts(self):
        p = SourcePosition.from_cartesian(3.0, 4.0)
        self.assertAlmostEqual(p.distance, 5.0)
        self.assertAlmostEqual(p.elevation, math.pi / 2)
        np.testing.assert_allclose(p.xy(), [3.0, 4.0])

    def test_rejects_nonpositive_distance(self):
        with self.assertRaises(ValueError):
            SourcePosition(0.0, 0.1)
        with self.assertRaises(ValueError):
            SourcePosition.from_cartesian(0.0, 0.0)


class TestDistances(unittest.TestCase):

    def setUp(self):
        self.layout = build_layout(4, 6, 0.01, 0.025, 0.005)

    def test_matches_cartesian_distance(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            p = SourcePosition(rng.uniform(1.0, 10.0), rng.uniform(-1.5, 1.5), rng.uniform(0.3, 2.8))
            row, col = int(rng.integers(4)), int(rng.integers(6))
            direct = np.linalg.norm(p.to_cartesian() - self.layout.element_position(row, col))
            self.assertTrue(math.isclose(source_element_distance(self.layout, (row, col), p), direct,
                                         rel_tol=1e-12))

    def test_large_array_element_distance(self):
        layout = build_layout(10, 50, 0.01, 0.025, 0.005)
        p = SourcePosition(6.0, math.pi / 6, math.pi / 2)
        direct = np.linalg.norm(p.to_cartesian() - np.array([0.0, 0.005, 0.0]))
        self.assertTrue(math.isclose(source_element_distance(layout, (0, 1), p), direct, rel_tol=1e-12))

    def test_collinear_geometry(self):
        r = self.layout.radius[self.layout.flat_index(0, 2)]
        p = SourcePosition(3.0, math.pi / 2, math.pi / 2)
        self.assertAlmostEqual(source_element_distance(self.layout, (0, 2), p), 3.0 - r, places=12)

    def test_orthogonal_geometry(self):
        r = self.layout.radius[self.layout.flat_index(0, 2)]
        p = SourcePosition(3.0, 0.0, math.pi / 2)
        self.assertAlmostEqual(source_element_distance(self.layout, (0, 2), p), math.hypot(r, 3.0), places=12)

    def test_symmetric_in_azimuth_on_z_axis(self):
        plus = source_element_distance(self.layout, (2, 0), SourcePosition(2.0, 0.4, 1.2))
        minus = source_element_distance(self.layout, (2, 0), SourcePosition(2.0, -0.4, 1.2))
        self.assertEqual(plus, minus)

    def test_batch_agrees_with_scalar(self):
        d = np.array([1.0, 2.5])
        az = np.array([0.2, -0.7])
        batch = element_distances(self.layout, d, az, math.pi / 2)
        self.assertEqual(batch.shape, (24, 2))
        p = SourcePosition(2.5, -0.7)
        self.assertAlmostEqual(batch[self.layout.flat_index(3, 4), 1],
                               source_element_distance(self.layout, (3, 4), p), places=12)


class TestFraunhofer(unittest.TestCase):

    def test_square_aperture(self):
        # 0.25 m x 0.25 m aperture, diagonal sqrt(2) * 0.25
        layout = build_layout(11, 51, 0.01, 0.025, 0.005)
        self.assertAlmostEqual(layout.aperture, math.sqrt(2) * 0.25)
        self.assertAlmostEqual(fraunhofer_distance(layout), 25.0)

    def test_degenerate_aperture(self):
        self.assertEqual(fraunhofer_distance(build_layout(1, 1, 0.01, 0.025, 0.005)), 0.0)

    def test_wavelength_scaling(self):
        self.assertAlmostEqual(fraunhofer_limit(0.3, 0.02), fraunhofer_limit(0.3, 0.01) / 2)


if __name__ == "__main__":
    unittest.main()
