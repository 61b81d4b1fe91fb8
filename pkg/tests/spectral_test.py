"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import os
import sys

sys.path.insert(1, os.path.join(os.path.dirname(__file__), ".."))

import math
import unittest

import numpy as np
from scipy import integrate, special, stats

from criterions.spectral import (
    NoiseScale,
    harmonic_coefficients,
    log_bessel_i0,
    log_density_shat_given_s,
    max_harmonics,
    power_spectrum,
    reconstruct,
    residual_variance,
)


class TestHarmonics(unittest.TestCase):
    def test_pure_tone(self):
        T = 66
        t = np.arange(T)
        y = 2.0 * np.cos(2 * np.pi * 3 * t / T) + 0.5 * np.sin(2 * np.pi * 5 * t / T)
        coef = harmonic_coefficients(y, 5)
        expected_a = np.array([0.0, 0.0, 2.0, 0.0, 0.0])
        expected_b = np.array([0.0, 0.0, 0.0, 0.0, 0.5])
        self.assertTrue(np.allclose(coef.a, expected_a, atol=1e-12))
        self.assertTrue(np.allclose(coef.b, expected_b, atol=1e-12))
        s = power_spectrum(coef).s
        self.assertTrue(np.allclose(s, [0.0, 0.0, 4.0, 0.0, 0.25], atol=1e-12))
        self.assertTrue(np.allclose(reconstruct(coef), y, atol=1e-12))

    def test_replicate_rows(self):
        rng = np.random.default_rng(0)
        y = rng.standard_normal((4, 30))
        coef = harmonic_coefficients(y, 3)
        self.assertEqual(coef.a.shape, (4, 3))
        single = harmonic_coefficients(y[2], 3)
        self.assertTrue(np.allclose(coef.a[2], single.a))
        self.assertTrue(np.allclose(coef.b[2], single.b))

    def test_matches_least_squares(self):
        T, K = 66, 8
        t = np.arange(T)
        angles = 2 * np.pi * np.outer(t, np.arange(1, K + 1)) / T
        design = np.hstack([np.ones((T, 1)), np.cos(angles), np.sin(angles)])
        rng = np.random.default_rng(5)
        for _ in range(20):
            y = rng.uniform(-1.0, 3.0) + rng.standard_normal(T)
            beta, *_ = np.linalg.lstsq(design, y, rcond=None)
            coef = harmonic_coefficients(y, K)
            self.assertTrue(np.allclose(coef.a, beta[1 : K + 1], atol=1e-10))
            self.assertTrue(np.allclose(coef.b, beta[K + 1 :], atol=1e-10))

    def test_parseval(self):
        rng = np.random.default_rng(6)
        for T in (65, 21):
            y = 2.0 + rng.standard_normal(T)
            total = np.sum((y - y.mean()) ** 2) * 2.0 / T
            full = power_spectrum(harmonic_coefficients(y, max_harmonics(T))).s
            self.assertAlmostEqual(np.sum(full), total, delta=1e-9)
            partial = power_spectrum(harmonic_coefficients(y, 3)).s
            self.assertLessEqual(np.sum(partial), total + 1e-12)

    def test_full_reconstruction(self):
        rng = np.random.default_rng(7)
        y = rng.standard_normal((5, 31))
        coef = harmonic_coefficients(y, max_harmonics(31))
        rebuilt = y.mean(axis=1, keepdims=True) + reconstruct(coef)
        self.assertTrue(np.allclose(rebuilt, y, atol=1e-10))

    def test_invalid_harmonics(self):
        self.assertEqual(max_harmonics(66), 32)
        with self.assertRaises(ValueError):
            harmonic_coefficients(np.zeros(10), 5)
        with self.assertRaises(ValueError):
            harmonic_coefficients(np.zeros(10), 0)

    def test_residual_variance(self):
        T, n, sigma = 66, 50, 0.5
        t = np.arange(T)
        rng = np.random.default_rng(1)
        clean = 3.0 + np.cos(2 * np.pi * 3 * t / T)
        self.assertLess(residual_variance(np.tile(clean, (3, 1)), 5), 1e-20)
        noisy = clean + sigma * rng.standard_normal((n, T))
        estimate = residual_variance(noisy, 5)
        self.assertLess(abs(estimate / sigma**2 - 1.0), 0.1)
        with self.assertRaises(ValueError):
            residual_variance(noisy, 33)


class TestNoiseScale(unittest.TestCase):
    def test_conventions(self):
        noise = NoiseScale(0.04, 66)
        self.assertAlmostEqual(noise.V, 66 * 0.04 / 2)
        self.assertAlmostEqual(noise.coefficient_variance, 2 * 0.04 / 66)
        self.assertEqual(noise.power_variance("coefficient"), noise.coefficient_variance)
        self.assertEqual(noise.power_variance("literal"), noise.V)
        with self.assertRaises(ValueError):
            noise.power_variance("other")
        with self.assertRaises(ValueError):
            NoiseScale(0.0, 66)

    def test_coefficient_variance_matches_simulation(self):
        T, sigma = 66, 0.3
        rng = np.random.default_rng(2)
        coef = harmonic_coefficients(sigma * rng.standard_normal((4000, T)), 4)
        empirical = np.var(coef.a)
        expected = NoiseScale(sigma**2, T).coefficient_variance
        self.assertLess(abs(empirical / expected - 1.0), 0.05)


class TestNoncentralChiSquare(unittest.TestCase):
    def test_matches_scipy(self):
        V = 0.7
        for s_hat, s in [(0.3, 1.2), (2.0, 0.1), (5.0, 5.0)]:
            expected = stats.ncx2.logpdf(s_hat / V, 2, s / V) - math.log(V)
            self.assertAlmostEqual(log_density_shat_given_s(s_hat, s, V), expected, places=9)

    def test_zero_noncentrality_is_exponential(self):
        V = 0.5
        s_hat = np.array([0.1, 1.0, 3.0])
        expected = -np.log(2 * V) - s_hat / (2 * V)
        self.assertTrue(np.allclose(log_density_shat_given_s(s_hat, 0.0, V), expected))

    def test_normalized(self):
        V, s = 0.5, 3.0
        total, _ = integrate.quad(
            lambda x: math.exp(log_density_shat_given_s(x, s, V)), 0, np.inf
        )
        self.assertAlmostEqual(total, 1.0, places=6)

    def test_large_arguments_finite(self):
        value = log_density_shat_given_s(1e6, 1e6, 1e-3)
        self.assertTrue(math.isfinite(value))
        self.assertTrue(np.all(np.isfinite(log_bessel_i0(np.array([0.0, 1e3, 1e8])))))
        x = np.array([0.0, 0.5, 10.0, 50.0])
        self.assertTrue(np.allclose(log_bessel_i0(x), np.log(special.i0(x))))

    def test_central_case(self):
        self.assertAlmostEqual(log_density_shat_given_s(2.0, 0.0, 1.0), -1.0 - math.log(2.0))

    def test_continuous_at_zero_power(self):
        for s_hat, V in [(0.3, 0.5), (2.0, 1.0), (7.0, 0.2)]:
            central = log_density_shat_given_s(s_hat, 0.0, V)
            self.assertAlmostEqual(log_density_shat_given_s(s_hat, 1e-14, V), central, delta=1e-8)

    def test_scale_relation(self):
        for s_hat, s, V in [(0.3, 1.2, 0.7), (4.0, 2.5, 0.1), (1e3, 9e2, 3.0)]:
            base = log_density_shat_given_s(s_hat, s, V)
            doubled = log_density_shat_given_s(2 * s_hat, 2 * s, 2 * V)
            self.assertAlmostEqual(doubled - base, -math.log(2.0), places=9)

    def test_outside_support(self):
        self.assertEqual(log_density_shat_given_s(-1.0, 1.0, 0.5), -np.inf)
        self.assertEqual(log_density_shat_given_s(1.0, -1.0, 0.5), -np.inf)
        with self.assertRaises(ValueError):
            log_density_shat_given_s(1.0, 1.0, 0.0)

    def test_broadcast(self):
        s_hat = np.ones((3, 5))
        out = log_density_shat_given_s(s_hat, np.linspace(0.5, 2.5, 5), 0.2)
        self.assertEqual(out.shape, (3, 5))
        self.assertTrue(np.array_equal(out[0], out[2]))


if __name__ == "__main__":
    unittest.main()
