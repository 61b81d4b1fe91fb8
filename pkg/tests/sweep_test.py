"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import os
import sys

sys.path.insert(1, os.path.join(os.path.dirname(__file__), ".."))

import tempfile
import unittest

import numpy as np

import config
import utils
from datasets.bioluminescence import replicate_spectra, simulate_replicates
from models.oscillator import ThetaVector
from prognostics.sweep import classify_sweep, read_sweep, run_sweep


def sweep_config(**sweep):
    raw = {
        "ode": {"rtol": 1e-6, "atol": 1e-8, "transient": 100.0},
        "prior": {"b_theta": 0.01},
        "sweep": dict({"num_points": 12, "batch_size": 5, "d0": 1,
                       "l_min_quantile": 0.5}, **sweep),
    }
    return config.parse_config(raw)


class TestSweep(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.cfg = sweep_config()
        series, _ = simulate_replicates(
            ThetaVector(config.REFERENCE_THETA), cls.cfg.ode, 66, 2, 0.05, 0
        )
        cls.s_hat, cls.sigma2 = replicate_spectra(series, 5)
        cls.tmp = tempfile.TemporaryDirectory()
        cls.full_path = os.path.join(cls.tmp.name, "full.csv")
        cls.full = run_sweep(cls.cfg, cls.s_hat, cls.sigma2, cls.full_path, "h")

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_rows(self):
        full = self.full
        self.assertEqual(len(full), 12)
        self.assertTrue(np.array_equal(full.indices, np.arange(12)))
        self.assertEqual(full.u.shape, (12, 9))
        self.assertTrue(np.all(full.u > 0) and np.all(full.u <= 1))
        self.assertTrue(np.all(np.isfinite(full.logliks[full.ok])))
        self.assertTrue(np.all(full.logliks[~full.ok] == -np.inf))
        header = utils.read_header(self.full_path)
        self.assertEqual(header["config_hash"], "h")
        self.assertEqual(header["producer"], "prognose")

    def test_resume_after_interruption(self):
        path = os.path.join(self.tmp.name, "part.csv")
        with open(self.full_path) as fid:
            lines = fid.readlines()
        data_start = next(i for i, line in enumerate(lines) if not line.startswith("#")) + 1
        with open(path, "w") as fid:
            fid.writelines(lines[: data_start + 7])
            fid.write("7,0.5,0.2")
        resumed = run_sweep(self.cfg, self.s_hat, self.sigma2, path, "h", resume=True)
        self.assertTrue(np.array_equal(resumed.indices, self.full.indices))
        self.assertTrue(np.array_equal(resumed.u, self.full.u))
        self.assertTrue(np.array_equal(resumed.logliks, self.full.logliks))
        with self.assertRaises(utils.ConfigError):
            run_sweep(self.cfg, self.s_hat, self.sigma2, path, "other", resume=True)

    def test_read_skips_malformed(self):
        path = os.path.join(self.tmp.name, "malformed.csv")
        with open(self.full_path) as fid:
            text = fid.read()
        with open(path, "w") as fid:
            fid.write(text + "12,not,a,row\n")
        _, results = read_sweep(path)
        self.assertEqual(len(results), 12)

    def test_classify(self):
        prospect_map = classify_sweep(self.full, self.cfg.sweep, seed=0, shard_size=5)
        self.assertEqual(prospect_map.p, 9)
        self.assertEqual(prospect_map.d0, 1)
        whole = classify_sweep(self.full, self.cfg.sweep, seed=0)
        self.assertEqual(prospect_map.cells(), whole.cells())
        self.assertEqual(prospect_map.metadata["num_points"], 12)


if __name__ == "__main__":
    unittest.main()
