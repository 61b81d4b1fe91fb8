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
from scipy import integrate, stats

from criterions.densities import log_ig, log_truncnormal_plus


class TestTruncatedNormal(unittest.TestCase):
    def test_matches_scipy(self):
        for s, lam, tau2 in [(0.5, 1.0, 0.25), (2.0, -0.3, 1.0), (0.01, 0.0, 4.0)]:
            tau = math.sqrt(tau2)
            expected = stats.truncnorm.logpdf(s, -lam / tau, np.inf, loc=lam, scale=tau)
            self.assertAlmostEqual(log_truncnormal_plus(s, lam, tau2), expected, places=9)

    def test_normalized(self):
        total, _ = integrate.quad(
            lambda s: math.exp(log_truncnormal_plus(s, 0.4, 0.3)), 0, np.inf
        )
        self.assertAlmostEqual(total, 1.0, places=6)

    def test_far_negative_mean_finite(self):
        self.assertTrue(math.isfinite(log_truncnormal_plus(0.1, -50.0, 1.0)))

    def test_support(self):
        self.assertEqual(log_truncnormal_plus(0.0, 1.0, 1.0), -np.inf)
        self.assertEqual(log_truncnormal_plus(-1.0, 1.0, 1.0), -np.inf)
        with self.assertRaises(ValueError):
            log_truncnormal_plus(1.0, 1.0, 0.0)

    def test_broadcast(self):
        s = np.array([[0.5, 1.0, 1.5]])
        lam = np.array([[1.0], [2.0]])
        out = log_truncnormal_plus(s, lam, 0.5)
        self.assertEqual(out.shape, (2, 3))
        self.assertAlmostEqual(out[1, 2], log_truncnormal_plus(1.5, 2.0, 0.5))


class TestInverseGamma(unittest.TestCase):
    def test_matches_scipy(self):
        for x, a, b in [(0.5, 1.0, 1.0), (0.009, 1.0, 0.01), (3.0, 2.5, 0.7)]:
            expected = stats.invgamma.logpdf(x, a, scale=b)
            self.assertAlmostEqual(log_ig(x, a, b), expected, places=9)

    def test_support(self):
        out = log_ig(np.array([-1.0, 0.0, 1.0]), 1.0, 1.0)
        self.assertEqual(out[0], -np.inf)
        self.assertEqual(out[1], -np.inf)
        self.assertTrue(math.isfinite(out[2]))
        with self.assertRaises(ValueError):
            log_ig(1.0, 0.0, 1.0)
        with self.assertRaises(ValueError):
            log_ig(1.0, 1.0, -1.0)


if __name__ == "__main__":
    unittest.main()
