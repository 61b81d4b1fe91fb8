"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

from dataclasses import dataclass

import numpy as np

import utils


@dataclass
class HistogramDiagnostic:
    """
    Attributes:
        counts (np.ndarray): (C,) retained iterations in each snapshot.
        edges (np.ndarray): (bins + 1,) bin edges on the scaled axis.
        snapshots (np.ndarray): (C, p, bins) weighted histograms, each
            summing to one.
        tv (np.ndarray): (C - 1, p) total variation between successive
            snapshots.
        threshold (float): stationarity tolerance.
    """

    counts: np.ndarray
    edges: np.ndarray
    snapshots: np.ndarray
    tv: np.ndarray
    threshold: float

    @property
    def final_tv(self):
        return float(self.tv[-1].max()) if len(self.tv) else float("nan")

    @property
    def stationary(self):
        # judged on the last pair of snapshots
        return bool(len(self.tv) > 0 and np.all(self.tv[-1] < self.threshold))


def total_variation(h1, h2):
    return 0.5 * np.sum(np.abs(h1 - h2), axis=-1)


def batch_means_error(values, num_batches=20):
    """
    Monte Carlo standard error of the mean of a correlated series from the
    spread of `num_batches` contiguous batch means. Trailing values that do
    not fill a batch are dropped.
    """
    values = np.asarray(values, dtype=np.float64)
    size = len(values) // num_batches
    if num_batches < 2 or size < 1:
        raise ValueError(
            f"Cannot form {num_batches} batches from {len(values)} values"
        )
    means = values[: size * num_batches].reshape(num_batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / np.sqrt(num_batches))


def cumulative_histogram_diagnostic(thetas, weights, bounds, checkpoints=10, bins=20,
                                    threshold=0.02):
    """
    Weighted histograms of every scaled coordinate using all retained
    iterations up to each of `checkpoints` evenly spaced points.

    Args:
        thetas (np.ndarray): (B, M, p) multiset elements.
        weights (np.ndarray): (B, M) element weights.
        bounds (ParameterBounds): maps θ to the unit interval for binning.
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    B, _, p = thetas.shape
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts = np.unique(
        np.ceil(np.arange(1, checkpoints + 1) * B / checkpoints).astype(np.int64)
    )
    counts = counts[counts > 0]
    u = np.clip(bounds.to_unit(thetas), 0.0, 1.0)
    snapshots = np.zeros((len(counts), p, bins))
    for c, count in enumerate(counts):
        w = weights[:count].ravel()
        for j in range(p):
            hist, _ = np.histogram(u[:count, :, j].ravel(), bins=edges, weights=w)
            total = hist.sum()
            snapshots[c, j] = hist / total if total > 0 else hist
    tv = total_variation(snapshots[1:], snapshots[:-1])
    return HistogramDiagnostic(counts, edges, snapshots, tv, threshold)


def write_histograms(path, diagnostic, config_hash, producer="calibrate"):
    fmt = utils.format_float
    rows = []
    for c, count in enumerate(diagnostic.counts):
        for j in range(diagnostic.snapshots.shape[1]):
            tv = diagnostic.tv[c - 1, j] if c > 0 else float("nan")
            for k, mass in enumerate(diagnostic.snapshots[c, j]):
                rows.append([
                    c + 1, count, j + 1, k + 1,
                    fmt(diagnostic.edges[k]), fmt(diagnostic.edges[k + 1]),
                    fmt(mass), fmt(tv),
                ])
    utils.write_table(
        path,
        ["checkpoint", "samples", "parameter", "bin", "lower", "upper", "mass",
         "tv_previous"],
        rows,
        config_hash,
        producer,
        {
            "stationary": str(diagnostic.stationary).lower(),
            "final_tv": fmt(diagnostic.final_tv),
            "threshold": fmt(diagnostic.threshold),
        },
    )
