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

from config import REFERENCE_THETA, OdeConfig
from interventions.analysis import FeatureEvaluator
from interventions.features import (
    FeatureSettings,
    dominant_period,
    fit_power,
    get_feature,
    main_frequency,
    period_of,
)
from models.oscillator import ThetaVector


def tone(T, period, phase=0.0, offset=0.0, amplitude=1.0):
    t = np.arange(T)
    return offset + amplitude * np.cos(2 * np.pi * t / period + phase)


class TestDominantPeriod(unittest.TestCase):
    def test_on_grid(self):
        self.assertAlmostEqual(dominant_period(tone(66, 22.0)), 22.0, places=4)
        self.assertAlmostEqual(dominant_period(tone(220, 22.0, phase=1.1)), 22.0, places=4)

    def test_off_grid(self):
        for T, period in [(66, 23.5), (220, 20.7), (100, 24.3)]:
            estimate = dominant_period(tone(T, period, phase=0.7, offset=5.0, amplitude=2.0))
            self.assertLess(abs(estimate - period), 0.01)

    def test_time_unit(self):
        estimate = dominant_period(tone(120, 12.0), dt_out=0.5)
        self.assertAlmostEqual(estimate, 6.0, places=4)

    def test_flat(self):
        self.assertTrue(math.isnan(dominant_period(np.full(50, 3.0))))

    def test_fit_power_peaks_at_tone(self):
        y = tone(66, 66 / 2.8)
        self.assertGreater(fit_power(y, 2.8), fit_power(y, 2.7))
        self.assertGreater(fit_power(y, 2.8), fit_power(y, 2.9))


class TestModelFeatures(unittest.TestCase):
    def setUp(self):
        self.settings = FeatureSettings(ode=OdeConfig(rtol=1e-6), window_cycles=6)

    def test_reference_period(self):
        period = period_of(ThetaVector(REFERENCE_THETA), self.settings)
        self.assertGreater(period, 18.0)
        self.assertLess(period, 26.0)
        frequency = main_frequency(ThetaVector(REFERENCE_THETA), self.settings)
        self.assertAlmostEqual(frequency, 1.0 / period)

    def test_period_stable_as_window_grows(self):
        theta = ThetaVector(REFERENCE_THETA)
        period = period_of(theta, self.settings)
        for cycles in [9, 12]:
            longer = FeatureSettings(ode=self.settings.ode, window_cycles=cycles)
            self.assertAlmostEqual(period_of(theta, longer), period, delta=0.005 * period)

    def test_non_oscillating_is_nan(self):
        theta = ThetaVector(REFERENCE_THETA).replace(2, 0.0)
        self.assertTrue(math.isnan(period_of(theta, self.settings)))

    def test_window(self):
        self.assertEqual(self.settings.num_points, 132)

    def test_registry(self):
        self.assertIs(get_feature("period"), period_of)
        with self.assertRaises(ValueError):
            get_feature("amplitude")

    def test_evaluator(self):
        evaluator = FeatureEvaluator("period", self.settings)
        thetas = np.array([REFERENCE_THETA, REFERENCE_THETA])
        thetas[1, 1] = 0.0
        values = evaluator(thetas)
        self.assertTrue(18.0 < values[0] < 26.0)
        self.assertTrue(math.isnan(values[1]))
        self.assertTrue(math.isnan(evaluator(np.full((1, 9), -1.0))[0]))


if __name__ == "__main__":
    unittest.main()
