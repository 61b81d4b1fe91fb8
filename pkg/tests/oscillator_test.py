"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import os
import sys

sys.path.insert(1, os.path.join(os.path.dirname(__file__), ".."))

import unittest

import numpy as np

from config import REFERENCE_THETA, BoundsConfig
from interventions.features import dominant_period
from models.oscillator import (
    IntegrationFailure,
    SystemState,
    ThetaVector,
    Trajectory,
    detect_oscillation,
    evaluate_rhs,
    integrate,
)


class TestThetaVector(unittest.TestCase):
    def test_one_based_access(self):
        theta = ThetaVector(REFERENCE_THETA)
        self.assertEqual(theta[1], 0.18)
        self.assertEqual(theta[9], 1.15)
        self.assertEqual(theta.c, 1.0)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            ThetaVector(REFERENCE_THETA[:8])
        with self.assertRaises(ValueError):
            ThetaVector((-0.1,) + REFERENCE_THETA[1:])
        with self.assertRaises(ValueError):
            ThetaVector(REFERENCE_THETA[:7] + (0.0, 1.15))
        with self.assertRaises(ValueError):
            ThetaVector(REFERENCE_THETA, c=0.0)
        with self.assertRaises(ValueError):
            ThetaVector(REFERENCE_THETA[:8] + (float("nan"),))

    def test_zero_rates_allowed(self):
        theta = ThetaVector((0.0,) + REFERENCE_THETA[1:])
        self.assertEqual(theta[1], 0.0)

    def test_replace_and_equality(self):
        theta = ThetaVector(REFERENCE_THETA)
        other = theta.replace(4, 0.2)
        self.assertEqual(other[4], 0.2)
        self.assertEqual(theta[4], 0.099)
        self.assertNotEqual(theta, other)
        self.assertEqual(theta, ThetaVector(REFERENCE_THETA))
        self.assertEqual(hash(theta), hash(ThetaVector(REFERENCE_THETA)))
        with self.assertRaises(ValueError):
            theta.theta[0] = 1.0


class TestRightHandSide(unittest.TestCase):
    def test_values(self):
        theta = ThetaVector(REFERENCE_THETA)
        y, w, z = 0.3, 0.2, 0.5
        t1, t2, t3, t4, t5, t6, t7, t8, t9 = REFERENCE_THETA
        flux = t7 * w * z**4 / (t9**4 + z**4)
        expected = (
            1.0 / (1.0 + (z / t8) ** 8) - t1 * y,
            t2 * y - (t3 + t4) * w + t6 * z - flux,
            t4 * w - (t5 + t6) * z + flux,
        )
        got = evaluate_rhs(SystemState(y, w, z), theta)
        for g, e in zip(got, expected):
            self.assertAlmostEqual(g, e, places=12)

    def test_asymmetric_exponent_changes_dz_only(self):
        theta = ThetaVector(REFERENCE_THETA)
        state = SystemState(0.3, 0.2, 0.5)
        sym = evaluate_rhs(state, theta, eq3_exponent=4)
        asym = evaluate_rhs(state, theta, eq3_exponent=2)
        self.assertEqual(sym[0], asym[0])
        self.assertEqual(sym[1], asym[1])
        self.assertNotEqual(sym[2], asym[2])
        with self.assertRaises(ValueError):
            evaluate_rhs(state, theta, eq3_exponent=3)
        with self.assertRaises(ValueError):
            evaluate_rhs(SystemState(float("inf"), 0.0, 0.0), theta)

    def test_origin(self):
        theta = ThetaVector(REFERENCE_THETA, c=2.5)
        dy, dw, dz = evaluate_rhs(SystemState(0.0, 0.0, 0.0), theta)
        self.assertEqual(dy, 2.5)
        self.assertEqual(dw, 0.0)
        self.assertEqual(dz, 0.0)

    def test_repression_scales_with_threshold(self):
        theta = ThetaVector(REFERENCE_THETA).replace(8, 2.0)
        dy, _, _ = evaluate_rhs(SystemState(0.0, 0.0, 2.0), theta)
        self.assertAlmostEqual(dy, 0.5, places=12)
        dy, _, _ = evaluate_rhs(SystemState(0.0, 0.0, 200.0), theta)
        self.assertGreater(dy, 0.0)
        self.assertLess(dy, 1e-15)
        base, _, _ = evaluate_rhs(SystemState(0.0, 0.0, 0.7), ThetaVector(REFERENCE_THETA))
        for scale in [0.5, 3.0]:
            scaled = ThetaVector(REFERENCE_THETA).replace(8, scale)
            got, _, _ = evaluate_rhs(SystemState(0.0, 0.0, 0.7 * scale), scaled)
            self.assertAlmostEqual(got, base, places=12)


class TestIntegrate(unittest.TestCase):
    def test_reference_oscillates(self):
        traj = integrate(ThetaVector(REFERENCE_THETA), num_points=66)
        self.assertIsInstance(traj, Trajectory)
        self.assertEqual(len(traj), 66)
        self.assertEqual(traj.transient_dropped, 200.0)
        self.assertTrue(np.all(np.isfinite(traj.values)))
        self.assertTrue(detect_oscillation(traj, 1e-3).oscillating)

    def test_deterministic(self):
        theta = ThetaVector(REFERENCE_THETA)
        a = integrate(theta, num_points=30)
        b = integrate(theta, num_points=30)
        self.assertTrue(np.array_equal(a.values, b.values))

    def test_overflow(self):
        traj = integrate(ThetaVector(REFERENCE_THETA), overflow_guard=1e-3)
        self.assertIsInstance(traj, IntegrationFailure)
        self.assertFalse(traj)
        self.assertFalse(detect_oscillation(traj, 1e-3).oscillating)

    def test_invalid_arguments(self):
        theta = ThetaVector(REFERENCE_THETA)
        with self.assertRaises(ValueError):
            integrate(theta, transient=-1.0)
        with self.assertRaises(ValueError):
            integrate(theta, num_points=1)
        with self.assertRaises(ValueError):
            integrate(theta, dt_out=0.0)
        with self.assertRaises(ValueError):
            integrate(theta, eq3_exponent=3)

    def test_switched_off_input_does_not_oscillate(self):
        theta = ThetaVector(REFERENCE_THETA).replace(2, 0.0)
        traj = integrate(theta, num_points=66)
        self.assertFalse(detect_oscillation(traj, 1e-3).oscillating)

    def test_switched_off_input_relaxes_to_transcription_balance(self):
        theta = ThetaVector(REFERENCE_THETA, c=2.0).replace(2, 0.0)
        traj = integrate(theta, transient=400.0, num_points=20)
        np.testing.assert_allclose(traj.values, 2.0 / 0.18, atol=1e-5)

    def test_limit_cycle_independent_of_initial_state(self):
        theta = ThetaVector(REFERENCE_THETA)
        shapes = []
        for ic in [SystemState(0.1, 0.1, 0.1), SystemState(2.0, 1.0, 1.5)]:
            traj = integrate(theta, ic=ic, transient=600.0, num_points=400, dt_out=0.25)
            shapes.append(
                (
                    np.max(traj.values),
                    np.min(traj.values),
                    dominant_period(traj.values, traj.dt_out),
                )
            )
        (max_a, min_a, period_a), (max_b, min_b, period_b) = shapes
        self.assertAlmostEqual(max_a, max_b, delta=0.01 * (max_a - min_a))
        self.assertAlmostEqual(min_a, min_b, delta=0.01 * (max_a - min_a))
        self.assertAlmostEqual(period_a, period_b, delta=0.005 * period_a)

    def test_period_stable_under_tighter_tolerances(self):
        theta = ThetaVector(REFERENCE_THETA)
        default = integrate(theta, num_points=132)
        tight = integrate(theta, num_points=132, atol=1e-12, rtol=1e-11)
        period = dominant_period(default.values)
        self.assertAlmostEqual(period, dominant_period(tight.values), delta=0.01 * period)

    def test_random_parameters_never_raise(self):
        rng = np.random.default_rng(0)
        upper = 2.0 * np.array(BoundsConfig().upper)
        for _ in range(1000):
            theta = rng.uniform(0.0, upper)
            theta[7:] = np.maximum(theta[7:], BoundsConfig().lower[7])
            traj = integrate(ThetaVector(theta), atol=1e-6, rtol=1e-6)
            self.assertIsInstance(traj, (Trajectory, IntegrationFailure))
            if traj:
                self.assertEqual(len(traj), 66)
                self.assertTrue(np.all(np.isfinite(traj.values)))


class TestDetectOscillation(unittest.TestCase):
    def test_flat_and_damped(self):
        self.assertFalse(detect_oscillation(np.ones(40), 1e-3).oscillating)
        t = np.arange(80)
        damped = np.exp(-0.5 * t) * np.cos(2 * np.pi * t / 22)
        status = detect_oscillation(damped, 1e-3)
        self.assertFalse(status.oscillating)
        sustained = np.cos(2 * np.pi * t / 22)
        self.assertTrue(detect_oscillation(sustained, 1e-3).oscillating)

    def test_default_tail_is_second_half(self):
        t = np.arange(66)
        early = np.where(t < 33, np.cos(2 * np.pi * t / 22), 0.0)
        self.assertFalse(detect_oscillation(early, 1e-3).oscillating)
        self.assertTrue(detect_oscillation(early, 1e-3, tail_fraction=0.6).oscillating)
        late = np.where(t >= 33, np.cos(2 * np.pi * t / 22), 0.0)
        status = detect_oscillation(late, 1e-3)
        self.assertAlmostEqual(status.peak_to_trough, np.ptp(late[33:]))


if __name__ == "__main__":
    unittest.main()
