"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import os
import sys

sys.path.insert(1, os.path.join(os.path.dirname(__file__), ".."))

import json
import tempfile
import unittest

import numpy as np

import utils
from config import REFERENCE_THETA, OdeConfig
from datasets.bioluminescence import (
    ReplicateSeries,
    load_data,
    replicate_spectra,
    simulate_replicates,
    truth_path,
    write_data,
    write_truth,
)
from models.oscillator import ThetaVector, integrate_with

ODE = OdeConfig(rtol=1e-6)


class TestSimulate(unittest.TestCase):
    def test_noiseless_matches_model(self):
        theta = ThetaVector(REFERENCE_THETA)
        series, oscillating = simulate_replicates(theta, ODE, 66, 3, 0.0, 0)
        self.assertTrue(oscillating)
        self.assertEqual(series.values.shape, (3, 66))
        self.assertEqual(series.names, ("rep1", "rep2", "rep3"))
        traj = integrate_with(theta, ODE, 66)
        for row in series.values:
            self.assertTrue(np.array_equal(row, traj.values))
        self.assertTrue(np.array_equal(series.t, np.arange(66.0)))

    def test_noise_reproducible(self):
        theta = ThetaVector(REFERENCE_THETA)
        a, _ = simulate_replicates(theta, ODE, 66, 2, 0.05, 4)
        b, _ = simulate_replicates(theta, ODE, 66, 2, 0.05, 4)
        c, _ = simulate_replicates(theta, ODE, 66, 2, 0.05, 5)
        self.assertTrue(np.array_equal(a.values, b.values))
        self.assertFalse(np.array_equal(a.values, c.values))
        self.assertFalse(np.array_equal(a.values[0], a.values[1]))

    def test_integration_failure(self):
        ode = OdeConfig(overflow_guard=1e-3)
        with self.assertRaises(utils.ComputeError):
            simulate_replicates(ThetaVector(REFERENCE_THETA), ode, 66, 1, 0.0, 0)


class TestLoad(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text):
        path = os.path.join(self.tmp.name, "data.csv")
        with open(path, "w") as fid:
            fid.write(text)
        return path

    def test_write_then_load(self):
        series, _ = simulate_replicates(ThetaVector(REFERENCE_THETA), ODE, 66, 2, 0.05, 1)
        path = os.path.join(self.tmp.name, "data.csv")
        write_data(path, series, "h", metadata={"seed": 1})
        loaded = load_data(path, harmonics=5)
        self.assertTrue(np.array_equal(loaded.values, series.values))
        self.assertEqual(loaded.names, series.names)
        self.assertEqual(utils.read_header(path)["seed"], "1")

    def assertDataError(self, text, fragment, harmonics=None):
        with self.assertRaises(utils.DataError) as ctx:
            load_data(self.write(text), harmonics)
        self.assertIn(fragment, str(ctx.exception))
        self.assertEqual(ctx.exception.exit_code, 3)

    def test_errors(self):
        self.assertDataError("t,rep1\n0,1.0\n1,\n2,1.0\n", "row 2, column rep1: missing")
        self.assertDataError("t,rep1\n0,1.0\n1,abc\n", "row 2, column rep1: non-numeric")
        self.assertDataError("t,rep1\n0,1.0\n1,nan\n", "non-finite")
        self.assertDataError("t,rep1\n0,1.0\n2,1.0\n", "row 2, column t")
        self.assertDataError("time,rep1\n0,1.0\n1,1.0\n", "header")
        self.assertDataError("t,rep1\n0,1.0\n1,1.0,2.0\n", "expected 2 cells")
        self.assertDataError("t,rep1\n0,1.0\n1,1.0\n2,1.0\n", "harmonics", harmonics=2)
        self.assertDataError("", "empty")
        with self.assertRaises(utils.DataError):
            load_data(os.path.join(self.tmp.name, "missing.csv"))

    def test_comments_skipped(self):
        series = load_data(self.write("# a note\nt,a,b\n5,1.0,2.0\n6,3.0,4.0\n"))
        self.assertEqual(series.n, 2)
        self.assertEqual(series.T, 2)
        self.assertTrue(np.array_equal(series.values, [[1.0, 3.0], [2.0, 4.0]]))


class TestSpectra(unittest.TestCase):
    def test_noise_estimate(self):
        rng = np.random.default_rng(0)
        T, sigma = 66, 0.2
        t = np.arange(T)
        clean = 1.0 + np.cos(2 * np.pi * 3 * t / T)
        values = clean + sigma * rng.standard_normal((30, T))
        series = ReplicateSeries(t.astype(float), values, tuple(f"r{i}" for i in range(30)))
        s_hat, sigma2 = replicate_spectra(series, 5, noise_harmonics=5)
        self.assertEqual(s_hat.shape, (30, 5))
        self.assertLess(abs(sigma2 / sigma**2 - 1.0), 0.15)
        self.assertTrue(np.all(s_hat[:, 2] > 0.5))
        _, fixed = replicate_spectra(series, 5, sigma2=0.3)
        self.assertEqual(fixed, 0.3)

    def test_default_noise_fit_uses_every_harmonic(self):
        rng = np.random.default_rng(3)
        T, n = 66, 4
        values = 1.0 + rng.standard_normal((n, T))
        series = ReplicateSeries(np.arange(T, dtype=float), values, ("a", "b", "c", "d"))
        _, sigma2 = replicate_spectra(series, 5)
        # fitting the mean and 32 harmonics leaves only the alternating component
        alternating = (-1.0) ** np.arange(T)
        expected = np.sum((values @ alternating) ** 2 / T) / n
        self.assertAlmostEqual(sigma2, expected, places=10)
        _, five = replicate_spectra(series, 5, noise_harmonics=5)
        self.assertNotAlmostEqual(five, sigma2, places=6)
        short = ReplicateSeries(np.arange(3.0), np.ones((1, 3)), ("a",))
        with self.assertRaises(utils.DataError):
            replicate_spectra(short, 1)

    def test_truth_file(self):
        self.assertEqual(truth_path("out/data.csv"), "out/data.truth.json")
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "data.truth.json")
            write_truth(path, REFERENCE_THETA, 1.0, 0.05, 0, "h", True)
            with open(path) as fid:
                record = json.load(fid)
        self.assertEqual(record["theta"], list(REFERENCE_THETA))
        self.assertTrue(record["oscillating"])


if __name__ == "__main__":
    unittest.main()
