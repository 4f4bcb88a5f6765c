import os
import sys
import unittest

import numpy as np

# Add the parent directory to the path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from arrays.frontend import (AnalogWeights, Architecture, ArchitectureKind, Constraint, WaveguideModel,
                             apply_frontend, lorentzian_project, random_weights, validate_weights,
                             waveguide_response, waveguide_response_matrix)
from arrays.geometry import build_layout


class TestWaveguide(unittest.TestCase):

    def setUp(self):
        self.layout = build_layout(1, 2, 0.01, 0.025, 0.01)

    def test_output_port_is_unity(self):
        h = waveguide_response(self.layout, WaveguideModel.for_layout(self.layout))
        self.assertEqual(h[0], 1.0)

    def test_reference_entry(self):
        h = waveguide_response(self.layout, WaveguideModel.for_layout(self.layout, 0.6, 827.67))
        expected = np.exp(-0.006) * np.exp(-1j * 8.2767)
        self.assertAlmostEqual(abs(h[1] - expected), 0.0, places=12)

    def test_lossless_unit_modulus(self):
        layout = build_layout(3, 7, 0.01, 0.025, 0.005)
        h = waveguide_response(layout, WaveguideModel.for_layout(layout, 0.0, 827.67))
        np.testing.assert_allclose(np.abs(h), 1.0, rtol=1e-14)

    def test_matrix_is_diagonal(self):
        layout = build_layout(2, 3, 0.01, 0.025, 0.005)
        model = WaveguideModel.for_layout(layout)
        H = waveguide_response_matrix(layout, model)
        np.testing.assert_array_equal(np.diag(H), waveguide_response(layout, model))
        self.assertEqual(np.count_nonzero(H - np.diag(np.diag(H))), 0)

    def test_invalid_models(self):
        with self.assertRaises(ValueError):
            WaveguideModel(-0.1, 827.67, [[0.0, 0.01]])
        with self.assertRaises(ValueError):
            WaveguideModel(0.6, 827.67, [[0.01, 0.0]])
        with self.assertRaises(ValueError):
            waveguide_response(build_layout(2, 2, 0.01, 0.025, 0.01), WaveguideModel(0.6, 827.67, [[0.0, 0.01]]))

    def test_phase_offsets(self):
        model = WaveguideModel.for_layout(self.layout, 0.6, 827.67)
        np.testing.assert_allclose(model.phase_offsets(), [0.0, 8.2767])


class TestArchitecture(unittest.TestCase):

    def test_constraints(self):
        layout = build_layout(2, 3, 0.01, 0.025, 0.005)
        self.assertIs(Architecture(ArchitectureKind.FULLY_DIGITAL).constraint, Constraint.IDENTITY)
        self.assertIs(Architecture(ArchitectureKind.HYBRID).constraint, Constraint.PHASE_ONLY)
        dma = Architecture(ArchitectureKind.DMA, WaveguideModel.for_layout(layout))
        self.assertIs(dma.constraint, Constraint.LORENTZIAN)
        np.testing.assert_array_equal(Architecture(ArchitectureKind.HYBRID).response(layout), np.ones(6))

    def test_waveguide_required_only_for_dma(self):
        layout = build_layout(2, 3, 0.01, 0.025, 0.005)
        with self.assertRaises(ValueError):
            Architecture(ArchitectureKind.DMA)
        with self.assertRaises(ValueError):
            Architecture(ArchitectureKind.HYBRID, WaveguideModel.for_layout(layout))


class TestLorentzianProjection(unittest.TestCase):

    def test_fixed_points(self):
        self.assertAlmostEqual(lorentzian_project(1j), 1j)
        self.assertAlmostEqual(lorentzian_project(1.0), (1 + 1j) / 2)
        self.assertAlmostEqual(lorentzian_project(-1.0), (-1 + 1j) / 2)

    def test_rejects_non_unit(self):
        with self.assertRaises(ValueError):
            lorentzian_project(0.5)

    def test_phase_preserved_around_center(self):
        w = np.exp(1j * np.random.default_rng(0).uniform(-np.pi, np.pi, 64))
        q = lorentzian_project(w)
        np.testing.assert_allclose(np.abs(q - 0.5j), 0.5, atol=1e-12)
        np.testing.assert_allclose(np.exp(1j * np.angle(q - 0.5j)), w, atol=1e-12)


class TestWeights(unittest.TestCase):

    def setUp(self):
        self.layout = build_layout(2, 3, 0.01, 0.025, 0.005)

    def test_identity_is_valid(self):
        self.assertEqual(validate_weights(AnalogWeights.identity(6)), {"ok": True})

    def test_lorentzian_violation(self):
        report = validate_weights(AnalogWeights.from_taps(np.ones((2, 3)), Constraint.LORENTZIAN))
        self.assertFalse(report["ok"])
        self.assertEqual(report["invariant"], "lorentzian")
        self.assertEqual(report["index"], (0, 0))

    def test_block_sparsity_violation(self):
        values = random_weights(self.layout, Constraint.PHASE_ONLY, seed=0).values.copy()
        values[0, 4] = 1.0
        report = validate_weights(AnalogWeights(values, Constraint.PHASE_ONLY, 3))
        self.assertEqual(report["invariant"], "block_sparsity")
        self.assertEqual(report["index"], (0, 4))

    def test_shape_violation(self):
        report = validate_weights(AnalogWeights(np.zeros((2, 5), dtype=complex), Constraint.PHASE_ONLY, 3))
        self.assertEqual(report["invariant"], "shape")

    def test_random_weights_feasible_and_seeded(self):
        for constraint in (Constraint.PHASE_ONLY, Constraint.LORENTZIAN):
            a = random_weights(self.layout, constraint, seed=11)
            self.assertEqual(validate_weights(a), {"ok": True})
            b = random_weights(self.layout, constraint, seed=11)
            np.testing.assert_array_equal(a.values, b.values)
            c = random_weights(self.layout, constraint, seed=12)
            self.assertFalse(np.array_equal(a.values, c.values))
        ident = random_weights(self.layout, Constraint.IDENTITY, seed=1)
        np.testing.assert_array_equal(ident.values, np.eye(6))

    def test_taps_round_trip_shape(self):
        w = random_weights(self.layout, Constraint.PHASE_ONLY, seed=3)
        self.assertEqual(w.taps.shape, (2, 3))
        np.testing.assert_array_equal(AnalogWeights.from_taps(w.taps, Constraint.PHASE_ONLY).values, w.values)


class TestApplyFrontend(unittest.TestCase):

    def setUp(self):
        self.layout = build_layout(2, 3, 0.01, 0.025, 0.005)
        self.rng = np.random.default_rng(7)

    def test_one_hot_selection(self):
        taps = np.zeros((2, 3), dtype=complex)
        taps[:, 2] = 1.0
        w = AnalogWeights.from_taps(taps, Constraint.PHASE_ONLY)
        x = self.rng.standard_normal(6) + 1j * self.rng.standard_normal(6)
        np.testing.assert_array_equal(apply_frontend(w, None, x), x[[2, 5]])

    def test_zero_input(self):
        w = random_weights(self.layout, Constraint.LORENTZIAN, seed=1)
        np.testing.assert_array_equal(apply_frontend(w, np.ones(6), np.zeros(6)), np.zeros(2))

    def test_matches_explicit_loops(self):
        w = random_weights(self.layout, Constraint.LORENTZIAN, seed=2)
        h = waveguide_response(self.layout, WaveguideModel.for_layout(self.layout))
        x = self.rng.standard_normal((6, 4)) + 1j * self.rng.standard_normal((6, 4))
        expected = np.zeros((2, 4), dtype=complex)
        for i in range(2):
            for t in range(4):
                for k in range(6):
                    expected[i, t] += w.values[i, k] * h[k] * x[k, t]
        np.testing.assert_allclose(apply_frontend(w, h, x), expected, rtol=1e-12)

    def test_phase_only_outputs_are_decoupled(self):
        w = random_weights(self.layout, Constraint.PHASE_ONLY, seed=5)
        gram = w.values @ w.values.conj().T
        np.testing.assert_array_equal(gram - np.diag(np.diag(gram)), np.zeros((2, 2)))

    def test_dimension_checks(self):
        w = random_weights(self.layout, Constraint.PHASE_ONLY, seed=5)
        with self.assertRaises(ValueError):
            apply_frontend(w, None, np.ones(5))
        with self.assertRaises(ValueError):
            apply_frontend(w, np.ones(4), np.ones(6))


if __name__ == "__main__":
    unittest.main()
