import os
import sys
import unittest
from dataclasses import replace

import numpy as np

# Add the parent directory to the path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from arrays.frontend import AnalogWeights, Constraint, random_weights
from arrays.geometry import SourcePosition, build_layout
from estimators.likelihood import (EffectiveSteering, PositionHypothesisSet, ap_objective, focusing_objective,
                                   log_likelihood, projected_energy, projection_operator, residual_energy,
                                   residual_steering)
from internal.errors import NumericalError
from signals.channel import Receiver, SimulationConfig, SnapshotBatch, channel_matrix


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestProjectionOperator(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(42)

    def test_rank_one_unit_vector(self):
        u = random_complex(self.rng, 6)
        u /= np.linalg.norm(u)
        P = projection_operator(u[:, None], ridge=0)
        np.testing.assert_allclose(P, np.outer(u, u.conj()), atol=1e-12)

    def test_orthonormal_columns(self):
        Q, _ = np.linalg.qr(random_complex(self.rng, 8, 3))
        np.testing.assert_allclose(projection_operator(Q, ridge=0), Q @ Q.conj().T, atol=1e-12)

    def test_idempotent_hermitian_and_fixes_columns(self):
        for _ in range(200):
            n = int(self.rng.integers(2, 17))
            k = int(self.rng.integers(1, min(n, 4) + 1))
            X = random_complex(self.rng, n, k)
            P = projection_operator(X, ridge=0)
            np.testing.assert_allclose(P @ P, P, atol=1e-10)
            np.testing.assert_allclose(P, P.conj().T, atol=1e-10)
            np.testing.assert_allclose(P @ X, X, atol=1e-10)

    def test_decomposition_along_one_column(self):
        for _ in range(200):
            n = int(self.rng.integers(4, 17))
            k = int(self.rng.integers(2, 5))
            X = random_complex(self.rng, n, k)
            m = int(self.rng.integers(k))
            others = np.delete(X, m, axis=1)
            residual = X[:, m] - projection_operator(others, ridge=0) @ X[:, m]
            split = projection_operator(others, ridge=0) + projection_operator(residual[:, None], ridge=0)
            np.testing.assert_allclose(projection_operator(X, ridge=0), split, atol=1e-9)

    def test_singular_gram_without_ridge(self):
        x = random_complex(self.rng, 5)
        X = np.stack([x, x], axis=1)
        with self.assertRaises(NumericalError):
            projection_operator(X, ridge=0)
        self.assertTrue(np.all(np.isfinite(projection_operator(X))))

    def test_empty_column_set(self):
        np.testing.assert_array_equal(projection_operator(np.zeros((4, 0))), np.zeros((4, 4)))

    def test_projected_energy_of_identity(self):
        Q, _ = np.linalg.qr(random_complex(self.rng, 8, 3))
        self.assertAlmostEqual(projected_energy(Q, np.eye(8)), 3.0, places=9)


class TestHypothesisSet(unittest.TestCase):

    def test_duplicates_rejected(self):
        p = SourcePosition(1.0, 0.2)
        with self.assertRaises(ValueError):
            PositionHypothesisSet((p, p))

    def test_editing(self):
        a, b, c = SourcePosition(1.0, 0.2), SourcePosition(1.5, -0.2), SourcePosition(0.7, 0.0)
        hyp = PositionHypothesisSet((a, b))
        self.assertEqual(list(hyp.without(0)), [b])
        self.assertEqual(list(hyp.replace(1, c)), [a, c])
        self.assertEqual(len(hyp.append(c)), 3)
        d, az, el = hyp.coordinates()
        np.testing.assert_array_equal(d, [1.0, 1.5])
        self.assertEqual(len(PositionHypothesisSet().coordinates()[0]), 0)


class TestApObjective(unittest.TestCase):

    def setUp(self):
        self.layout = build_layout(2, 4, 0.01, 0.025, 0.005)
        self.cfg = SimulationConfig(n_snapshots=10)
        self.receiver = Receiver(self.layout, self.cfg, AnalogWeights.identity(8))
        self.rng = np.random.default_rng(5)
        self.p = SourcePosition(0.8, 0.3)
        self.others = PositionHypothesisSet((SourcePosition(1.2, -0.5),))

    def test_aligned_data_captures_all_energy(self):
        sbar = residual_steering(self.p, self.others, self.receiver)
        for n_snapshots in (10, 4):
            batch = SnapshotBatch.from_samples(np.outer(sbar, random_complex(self.rng, n_snapshots)))
            value, degenerate = ap_objective(self.p, self.others, batch, self.receiver)
            self.assertFalse(degenerate)
            energy = float(np.sum(np.abs(batch.samples) ** 2))
            self.assertAlmostEqual(value / energy, 1.0, places=9)

    def test_orthogonal_data_scores_zero(self):
        sbar = residual_steering(self.p, self.others, self.receiver)
        y = random_complex(self.rng, 8, 12)
        y -= np.outer(sbar, sbar.conj() @ y) / np.vdot(sbar, sbar)
        batch = SnapshotBatch.from_samples(y)
        value, _ = ap_objective(self.p, self.others, batch, self.receiver)
        self.assertLess(value, 1e-12 * float(np.sum(np.abs(y) ** 2)))

    def test_noiseless_single_user_at_truth(self):
        G = channel_matrix(self.layout, [self.p], self.cfg)
        batch = self.receiver.observe(G, seed=0)
        value, _ = ap_objective(self.p, PositionHypothesisSet(), batch, self.receiver)
        expected = self.cfg.n_snapshots * np.linalg.norm(G.column(0)) ** 2
        self.assertAlmostEqual(value / expected, 1.0, places=10)

    def test_coincident_hypothesis_is_degenerate(self):
        batch = SnapshotBatch.from_samples(random_complex(self.rng, 8, 10))
        value, degenerate = ap_objective(self.p, PositionHypothesisSet((self.p,)), batch, self.receiver)
        self.assertTrue(degenerate)
        self.assertEqual(value, 0.0)

    def test_residual_orthogonal_to_fixed_hypotheses(self):
        sbar = residual_steering(self.p, self.others, self.receiver)
        fixed = EffectiveSteering.build(self.others, self.receiver).matrix
        self.assertLess(np.linalg.norm(fixed.conj().T @ sbar), 1e-9 * np.linalg.norm(sbar) * np.linalg.norm(fixed))
        alone = residual_steering(self.p, PositionHypothesisSet(), self.receiver)
        np.testing.assert_array_equal(alone, self.receiver.effective_steering(0.8, 0.3, np.pi / 2)[:, 0])

    def test_residual_energy_scale_invariant_and_path_independent(self):
        residuals = random_complex(self.rng, 8, 5)
        for n_snapshots in (20, 3):
            samples = random_complex(self.rng, 8, n_snapshots)
            batch = SnapshotBatch.from_samples(samples)
            direct = np.sum(np.abs(residuals.conj().T @ samples) ** 2, axis=1) / np.sum(np.abs(residuals) ** 2, axis=0)
            np.testing.assert_allclose(residual_energy(residuals, batch), direct, rtol=1e-10)
            np.testing.assert_allclose(residual_energy(3.5j * residuals, batch), direct, rtol=1e-10)


class TestFocusingObjective(unittest.TestCase):

    def setUp(self):
        self.layout = build_layout(2, 4, 0.01, 0.025, 0.005)
        self.cfg = replace(SimulationConfig(n_snapshots=30), noise_variance=1e-6)
        weights = random_weights(self.layout, Constraint.PHASE_ONLY, seed=3)
        self.receiver = Receiver(self.layout, self.cfg, weights)
        self.users = [SourcePosition(0.8, 0.3), SourcePosition(1.2, -0.5)]
        self.batch = self.receiver.observe(channel_matrix(self.layout, self.users, self.cfg), seed=8)
        self.hyp = PositionHypothesisSet(tuple(self.users[:1]))

    def test_matches_snapshot_sum(self):
        P = EffectiveSteering.build(self.hyp, self.receiver).projector()
        direct = np.sum(np.abs(P @ self.batch.samples) ** 2) / self.batch.n_snapshots
        self.assertAlmostEqual(focusing_objective(self.hyp, self.receiver, self.batch) / direct, 1.0, places=10)

    def test_bounded_by_total_power(self):
        total = float(np.real(np.trace(self.batch.covariance)))
        self.assertLessEqual(focusing_objective(self.hyp, self.receiver, self.batch), total * (1 + 1e-12))

    def test_log_likelihood_scales_with_snapshots(self):
        f = focusing_objective(self.hyp, self.receiver, self.batch)
        self.assertAlmostEqual(log_likelihood(self.hyp, self.receiver, self.batch) / (30 * f), 1.0, places=12)


if __name__ == "__main__":
    unittest.main()
