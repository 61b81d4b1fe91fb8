"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

End-to-end runs of the command-line tool on the smoke configuration.
"""

import os
import sys

sys.path.insert(1, os.path.join(os.path.dirname(__file__), ".."))

import logging
import tempfile
import unittest

import calib
import utils

SMOKE = os.path.join(os.path.dirname(__file__), "..", "configs", "synthetic", "smoke.json")

REPORT_FILES = (
    "trace.csv", "posterior.csv", "histograms.csv", "sensitivity.csv", "heatmap.csv",
    "spectra.csv", "exceedance_table.csv", "summary.txt",
)


def run(out, *command):
    return calib.main(["--config", SMOKE, "--out", out] + list(command))


def read_bytes(path):
    with open(path, "rb") as fid:
        return fid.read()


class TestPipeline(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        logging.disable(logging.INFO)
        cls.tmp = tempfile.TemporaryDirectory()
        cls.out = cls.tmp.name
        cls.codes = [
            run(cls.out, command)
            for command in ("simulate", "prognose", "calibrate", "analyze", "report")
        ]

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        logging.disable(logging.NOTSET)

    def test_exit_codes(self):
        self.assertEqual(self.codes, [0, 0, 0, 0, 0])

    def test_outputs_share_config_hash(self):
        hashes = set()
        for name in ("data.csv", "sweep.csv", "prospects.csv", "chain.csv",
                     "sensitivity.csv", "exceedance.csv", "heatmap.csv", "spectra.csv"):
            path = os.path.join(self.out, name)
            self.assertTrue(os.path.exists(path), name)
            header = utils.read_header(path)
            self.assertEqual(header["tool"], utils.TOOL_NAME)
            hashes.add(header["config_hash"])
        self.assertEqual(len(hashes), 1)
        self.assertTrue(os.path.exists(os.path.join(self.out, "data.truth.json")))

    def test_report_deterministic(self):
        report = os.path.join(self.out, "report")
        first = {name: read_bytes(os.path.join(report, name)) for name in REPORT_FILES}
        self.assertEqual(run(self.out, "report"), 0)
        for name in REPORT_FILES:
            self.assertEqual(read_bytes(os.path.join(report, name)), first[name], name)

    def test_sensitivity_rows(self):
        _, columns, rows = utils.read_table(os.path.join(self.out, "sensitivity.csv"))
        self.assertEqual(columns[:3], ["parameter", "alpha", "mean"])
        self.assertEqual([row[:2] for row in rows],
                         [["0", "1.0"], ["4", "0.8"], ["4", "1.0"], ["4", "1.2"]])
        # scaling by one leaves every draw unchanged
        self.assertEqual(rows[0][2:], rows[2][2:])

    def test_resume_finished_chain(self):
        chain = read_bytes(os.path.join(self.out, "chain.csv"))
        self.assertEqual(run(self.out, "--resume", "calibrate"), 0)
        self.assertEqual(read_bytes(os.path.join(self.out, "chain.csv")), chain)


class TestPrerequisites(unittest.TestCase):
    def setUp(self):
        logging.disable(logging.CRITICAL)

    def tearDown(self):
        logging.disable(logging.NOTSET)

    def test_missing_inputs(self):
        with tempfile.TemporaryDirectory() as tmp:
            self.assertEqual(run(tmp, "prognose"), 5)
            self.assertEqual(run(tmp, "analyze"), 5)
            self.assertEqual(run(tmp, "report"), 5)
            self.assertEqual(run(tmp, "simulate"), 0)
            self.assertEqual(run(tmp, "calibrate"), 5)

    def test_invalid_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "bad.json")
            with open(path, "w") as fid:
                fid.write('{"sampler": {"thin": 0}}')
            self.assertEqual(calib.main(["--config", path, "--out", tmp, "simulate"]), 2)


class TestBaselineEquivalence(unittest.TestCase):
    def test_single_element_uniform_matches_metropolis(self):
        logging.disable(logging.INFO)
        try:
            with tempfile.TemporaryDirectory() as mh, tempfile.TemporaryDirectory() as gm:
                for out in (mh, gm):
                    self.assertEqual(run(out, "simulate"), 0)
                self.assertEqual(run(mh, "calibrate", "--algorithm", "mh"), 0)
                self.assertEqual(
                    run(gm, "calibrate", "--algorithm", "gmss", "--multiset-size", "1",
                        "--uniform-instrumental"),
                    0,
                )
                _, columns, mh_rows = utils.read_table(os.path.join(mh, "chain.csv"))
                _, _, gm_rows = utils.read_table(os.path.join(gm, "chain.csv"))
                self.assertGreater(len(mh_rows), 0)
                self.assertEqual(mh_rows, gm_rows)
        finally:
            logging.disable(logging.NOTSET)


if __name__ == "__main__":
    unittest.main()
