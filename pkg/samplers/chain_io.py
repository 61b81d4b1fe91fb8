"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Chain, initialization and acceptance files written by the samplers.
"""

from dataclasses import dataclass
import logging
import os

import numpy as np

import utils
from samplers.state import WeightedSample

CHAIN_FILE = "chain.csv"
INITIALIZATION_FILE = "initialization.csv"
ACCEPTANCE_FILE = "acceptance.csv"
HISTOGRAM_FILE = "histograms.csv"
CHECKPOINT_FILE = "chain.checkpoint"


def chain_columns(M, p, n, K):
    columns = ["iteration", "leading", "tau2", "sigma2"]
    columns += [f"s_{i}_{k}" for i in range(1, n + 1) for k in range(1, K + 1)]
    for m in range(1, M + 1):
        columns += [f"theta_{m}_{j}" for j in range(1, p + 1)]
        columns += [f"logf_{m}", f"w_{m}"]
    return columns


def chain_row(sample):
    fmt = utils.format_float
    row = [str(sample.iteration), str(sample.leading), fmt(sample.tau2), fmt(sample.sigma2)]
    if sample.s is not None:
        row += [fmt(v) for v in np.ravel(sample.s)]
    for theta, ell, w in zip(sample.thetas, sample.ells, sample.weights):
        row += [fmt(v) for v in theta]
        row += [fmt(ell), fmt(w)]
    return row


class ChainWriter:
    """
    Buffers retained rows and appends them to the chain file on `flush`.
    """

    def __init__(self, path):
        self.path = path
        self.rows = []

    @classmethod
    def create(cls, path, columns, config_hash, producer, metadata):
        utils.write_table(path, columns, [], config_hash, producer, metadata)
        return cls(path)

    def append(self, row):
        self.rows.append(row)

    def flush(self):
        if not self.rows:
            return
        utils.append_rows(self.path, self.rows)
        self.rows = []


def truncate_chain(path, iteration):
    """
    Drops rows recorded after `iteration` (and any torn trailing row) so a
    resumed run continues from a checkpoint without duplicates.
    """
    if not os.path.exists(path):
        raise utils.MissingPrerequisiteError(path, "calibrate")
    with open(path, "r") as fid:
        lines = fid.readlines()
    kept, num_columns, dropped = [], None, 0
    for line in lines:
        if line.startswith("#"):
            kept.append(line)
            continue
        if num_columns is None:
            num_columns = len(line.rstrip("\n").split(","))
            kept.append(line)
            continue
        fields = line.rstrip("\n").split(",")
        if (
            line.endswith("\n")
            and len(fields) == num_columns
            and fields[0].isdigit()
            and int(fields[0]) <= iteration
        ):
            kept.append(line)
        else:
            dropped += 1
    with open(path, "w") as fid:
        fid.writelines(kept)
    if dropped:
        logging.info(f"Dropped {dropped} chain rows past iteration {iteration}")


@dataclass
class Chain:
    """
    Retained iterations of a chain file as arrays.

    Attributes:
        iterations (np.ndarray): (B,) iteration numbers.
        leading (np.ndarray): (B,) index of the largest-weight element.
        tau2, sigma2 (np.ndarray): (B,) latent scalars, NaN without latents.
        s (np.ndarray): (B, n, K) latent spectra.
        thetas (np.ndarray): (B, M, p) elements.
        logf (np.ndarray): (B, M) per-element log-density contributions.
        weights (np.ndarray): (B, M) element weights.
    """

    header: dict
    iterations: np.ndarray
    leading: np.ndarray
    tau2: np.ndarray
    sigma2: np.ndarray
    s: np.ndarray
    thetas: np.ndarray
    logf: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.iterations)

    @property
    def multiset_size(self):
        return self.thetas.shape[1]

    def samples(self):
        for b in range(len(self)):
            yield WeightedSample(
                iteration=int(self.iterations[b]),
                thetas=self.thetas[b],
                weights=self.weights[b],
                ells=self.logf[b],
                tau2=float(self.tau2[b]),
                sigma2=float(self.sigma2[b]),
                s=self.s[b],
            )


def read_chain(path):
    if not os.path.exists(path):
        raise utils.MissingPrerequisiteError(path, "calibrate")
    header, columns, rows = utils.read_table(path)
    M, p = int(header["M"]), int(header["p"])
    n, K = int(header["n"]), int(header["K"])
    if len(columns) != len(chain_columns(M, p, n, K)):
        raise utils.DataError(
            f"{path}: expected {len(chain_columns(M, p, n, K))} columns, "
            f"found {len(columns)}"
        )
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(columns))
    B = len(values)
    offset = 4 + n * K
    elements = values[:, offset:].reshape(B, M, p + 2)
    return Chain(
        header=header,
        iterations=values[:, 0].astype(np.int64),
        leading=values[:, 1].astype(np.int64),
        tau2=values[:, 2],
        sigma2=values[:, 3],
        s=values[:, 4:offset].reshape(B, n, K),
        thetas=elements[:, :, :p],
        logf=elements[:, :, p],
        weights=elements[:, :, p + 1],
    )


def write_initialization(path, records, p, config_hash, producer="calibrate"):
    columns = ["element", "source", "subset_mask", "cell_code", "attempts"]
    columns += [f"theta_{j}" for j in range(1, p + 1)] + ["logf"]
    rows = [
        [
            r["element"],
            r["source"],
            r["subset_mask"],
            r["cell_code"],
            r["attempts"],
            *(utils.format_float(v) for v in r["theta"]),
            utils.format_float(r["logf"]),
        ]
        for r in records
    ]
    utils.write_table(path, columns, rows, config_hash, producer)


def write_acceptance(path, meters, stepsizes, config_hash, producer="calibrate"):
    rows = [
        [key, meters.proposed[key], meters.accepted[key],
         utils.format_float(meters.rate(key)), utils.format_float(stepsizes[key])]
        for key in sorted(meters.proposed)
    ]
    utils.write_table(
        path, ["block", "proposed", "accepted", "rate", "stepsize"], rows,
        config_hash, producer,
    )
