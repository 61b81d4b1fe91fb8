"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Replicate bioluminescence time series: loading, synthesis and the
per-replicate spectra the model is fit to.
"""

from dataclasses import dataclass
import csv
import json
import logging
import math

import numpy as np

import utils
from criterions.spectral import (
    harmonic_coefficients,
    max_noise_harmonics,
    power_spectrum,
    residual_variance,
)
from models.oscillator import IntegrationFailure, detect_oscillation, integrate_with


@dataclass(frozen=True, eq=False)
class ReplicateSeries:
    """
    Attributes:
        t (np.ndarray): (T,) sample times in hours, one hour apart.
        values (np.ndarray): (n, T) readings, one row per replicate.
        names (tuple): replicate column names.
    """

    t: np.ndarray
    values: np.ndarray
    names: tuple

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def T(self):
        return self.values.shape[1]


def _parse_cell(text, row, column):
    if text.strip() == "":
        raise utils.DataError(f"row {row}, column {column}: missing value")
    try:
        value = float(text)
    except ValueError:
        raise utils.DataError(f"row {row}, column {column}: non-numeric value {text!r}")
    if not math.isfinite(value):
        raise utils.DataError(f"row {row}, column {column}: non-finite value {text!r}")
    return value


def load_data(path, harmonics=None):
    """
    Reads a delimited file with header `t,rep1..repn` and one row per hour.
    Lines starting with `#` are skipped. Row numbers in errors count data
    rows from 1.

    Args:
        harmonics (int, optional): K; the series must have T >= 2K + 1.
    """
    try:
        fid = open(path, "r", newline="")
    except OSError as e:
        raise utils.DataError(f"{path}: cannot read data ({e.strerror})")
    with fid:
        reader = csv.reader(line for line in fid if not line.startswith("#"))
        rows = [row for row in reader if row]
    if not rows:
        raise utils.DataError(f"{path}: empty data file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "t":
        raise utils.DataError(
            f"{path}: header must be t,rep1..repn, got {','.join(header)}"
        )
    t, values = [], []
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise utils.DataError(
                f"{path}: row {r}: expected {len(header)} cells, found {len(row)}"
            )
        cells = [_parse_cell(text, r, name) for text, name in zip(row, header)]
        if t and abs(cells[0] - t[-1] - 1.0) > 1e-9:
            raise utils.DataError(
                f"{path}: row {r}, column t: time {cells[0]} is not one hour "
                f"after {t[-1]}"
            )
        t.append(cells[0])
        values.append(cells[1:])
    T = len(t)
    if T < 2:
        raise utils.DataError(f"{path}: need at least 2 time points, found {T}")
    if harmonics is not None and T < 2 * harmonics + 1:
        raise utils.DataError(
            f"{path}: {T} time points cannot resolve {harmonics} harmonics, "
            f"need at least {2 * harmonics + 1}"
        )
    return ReplicateSeries(
        t=np.array(t), values=np.array(values).T.copy(), names=tuple(header[1:])
    )


def write_data(path, series, config_hash, producer="simulate", metadata=None):
    fmt = utils.format_float
    rows = [
        [fmt(t)] + [fmt(v) for v in series.values[:, i]]
        for i, t in enumerate(series.t)
    ]
    utils.write_table(
        path, ["t"] + list(series.names), rows, config_hash, producer, metadata
    )


def truth_path(data_path):
    root, _ = data_path.rsplit(".", 1) if "." in data_path else (data_path, "")
    return root + ".truth.json"


def write_truth(path, theta, c, noise_sigma, seed, config_hash, oscillating):
    record = {
        "tool": utils.TOOL_NAME,
        "version": utils.__version__,
        "config_hash": config_hash,
        "theta": [float(v) for v in theta],
        "c": float(c),
        "noise_sigma": float(noise_sigma),
        "seed": seed,
        "oscillating": bool(oscillating),
    }
    with open(path, "w") as fid:
        json.dump(record, fid, indent=2, sort_keys=True)
        fid.write("\n")


def simulate_replicates(theta, ode, num_points, replicates, noise_sigma, seed):
    """
    Model output for `theta` on the hourly grid plus independent Gaussian
    noise per replicate.

    Returns:
        (ReplicateSeries, oscillating)
    """
    traj = integrate_with(theta, ode, num_points)
    if isinstance(traj, IntegrationFailure):
        raise utils.ComputeError(f"Cannot simulate, integration failed ({traj.reason})")
    status = detect_oscillation(traj, ode.amp_tol)
    if not status.oscillating:
        logging.warning(
            "The simulated system does not oscillate (peak to trough "
            f"{status.peak_to_trough:.3g}), writing the data anyway"
        )
    values = np.repeat(traj.values[None, :], replicates, axis=0)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        values = values + noise_sigma * rng.standard_normal(values.shape)
    series = ReplicateSeries(
        t=np.arange(num_points) * traj.dt_out,
        values=values,
        names=tuple(f"rep{i}" for i in range(1, replicates + 1)),
    )
    return series, status.oscillating


def replicate_spectra(series, harmonics, noise_harmonics=None, sigma2=None):
    """
    Estimated spectra ŝ (n, K) and the measurement-noise variance, either
    `sigma2` or the pooled residual variance of the `noise_harmonics`-term
    harmonic fit. Without `noise_harmonics` the fit uses every harmonic that
    still leaves a residual degree of freedom, ⌊(T-1)/2⌋ for even T.
    """
    values = series.values if isinstance(series, ReplicateSeries) else np.atleast_2d(series)
    s_hat = power_spectrum(harmonic_coefficients(values, harmonics)).s
    if sigma2 is None:
        T = values.shape[-1]
        if noise_harmonics is None:
            noise_harmonics = max_noise_harmonics(T)
        if noise_harmonics < 1:
            raise utils.DataError(
                f"Cannot estimate the noise variance from {T} points, set data.sigma2"
            )
        sigma2 = residual_variance(values, noise_harmonics)
        if not sigma2 > 0:
            raise utils.DataError(
                "Estimated noise variance is zero, set data.sigma2 explicitly"
            )
        logging.info(f"Estimated noise variance {sigma2:.6g}")
    return s_hat, float(sigma2)
