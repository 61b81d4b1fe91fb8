"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Intervention posterior: posterior draws with one or two parameters
rescaled, pushed through a system feature and summarized with the
original draw weights.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

import utils
from criterions.spectral import model_spectrum
from interventions.features import FeatureSettings, get_feature
from models.oscillator import IntegrationFailure, ThetaVector


def intervene(theta, j, alpha):
    """
    Copy of `theta` with θ_j (1-based) replaced by α·θ_j; every other
    coordinate is unchanged bit for bit.
    """
    if not alpha > 0:
        raise ValueError(f"Invalid scale factor {alpha}, must be positive.")
    if isinstance(theta, ThetaVector):
        if not 1 <= j <= len(theta.theta):
            raise ValueError(f"Invalid parameter index {j}, must be in [1, {len(theta.theta)}].")
        return theta.replace(j, alpha * theta[j])
    theta = np.array(theta, dtype=np.float64)
    if not 1 <= j <= theta.shape[-1]:
        raise ValueError(f"Invalid parameter index {j}, must be in [1, {theta.shape[-1]}].")
    theta[..., j - 1] = alpha * theta[..., j - 1]
    return theta


@dataclass(frozen=True)
class InterventionPlan:
    """
    Attributes:
        targets (tuple): 1-based parameter indices, each intervened alone.
        alphas (tuple): positive scale factors.
        deltas (tuple): relative thresholds for the exceedance table.
        feature (str): feature name.
    """

    targets: tuple
    alphas: tuple = (0.6, 0.8, 1.0, 1.2, 1.4)
    deltas: tuple = (0.1, 0.2, 0.3, 0.4)
    feature: str = "period"

    def __post_init__(self):
        if not all(a > 0 for a in self.alphas):
            raise ValueError(f"Invalid scale factors {self.alphas}, must be positive.")
        get_feature(self.feature)

    @classmethod
    def from_config(cls, cfg):
        iv = cfg.intervention
        return cls(tuple(iv.targets), tuple(iv.alphas), tuple(iv.deltas), iv.feature)


@dataclass
class DrawSet:
    """
    Flattened weighted posterior draws.

    Attributes:
        thetas (np.ndarray): (D, p) parameter vectors.
        weights (np.ndarray): (D,) non-negative weights.
        resample_seed (int): seed of the capping resample, None if the full
            chain is used.
    """

    thetas: np.ndarray
    weights: np.ndarray
    resample_seed: int = None

    def __len__(self):
        return len(self.thetas)


def draws_from_chain(chain, draw_cap=2000, seed=0):
    """
    Every (θ_m, w_m / B) pair of the chain with each iteration's weights
    normalized. Above `draw_cap` pairs, `draw_cap` draws are resampled in
    proportion to weight and weighted equally.
    """
    B, M, p = chain.thetas.shape
    if B == 0:
        raise utils.ComputeError("The chain has no retained iterations")
    weights = (chain.weights / chain.weights.sum(axis=1, keepdims=True)).ravel() / B
    thetas = chain.thetas.reshape(B * M, p)
    keep = weights > 0
    thetas, weights = thetas[keep], weights[keep]
    if len(thetas) <= draw_cap:
        return DrawSet(thetas, weights)
    rng = np.random.default_rng(seed)
    index = np.sort(rng.choice(len(thetas), size=draw_cap, replace=True, p=weights / weights.sum()))
    logging.info(f"Resampled {draw_cap} of {len(thetas)} weighted draws with seed {seed}")
    return DrawSet(thetas[index], np.full(draw_cap, 1.0 / draw_cap), resample_seed=seed)


def weighted_quantile(values, weights, q):
    """
    Smallest value whose cumulative normalized weight reaches `q`.
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    cdf = np.cumsum(weights[order])
    cdf /= cdf[-1]
    return float(values[order][np.searchsorted(cdf, q, side="left")])


@dataclass
class FeatureDistribution:
    """
    Weighted summary of feature values over one draw set. `mean`, `q10` and
    `q90` use finite values only and are NaN when every draw failed.
    """

    mean: float
    q10: float
    q90: float
    failure: float
    finite: float
    exceedance: dict

    @property
    def absent(self):
        return math.isnan(self.mean)


def summarize(values, weights, baseline=None, deltas=()):
    """
    Args:
        values (np.ndarray): (D,) feature values, NaN for failures.
        weights (np.ndarray): (D,) draw weights.
        baseline (np.ndarray or float): reference for the exceedance
            proportions P(value > baseline·(1 + δ)).
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    total = weights.sum()
    ok = np.isfinite(values)
    finite = weights[ok].sum() / total
    failure = weights[~ok].sum() / total
    if np.any(ok):
        w = weights[ok]
        mean = float(np.dot(w, values[ok]) / w.sum())
        q10 = weighted_quantile(values[ok], w, 0.1)
        q90 = weighted_quantile(values[ok], w, 0.9)
    else:
        mean = q10 = q90 = float("nan")
    exceedance = {}
    if baseline is not None:
        baseline = np.broadcast_to(np.asarray(baseline, dtype=np.float64), values.shape)
        for delta in deltas:
            with np.errstate(invalid="ignore"):
                above = values > baseline * (1.0 + delta)
            exceedance[delta] = float(weights[above].sum() / total)
    return FeatureDistribution(mean, q10, q90, float(failure), float(finite), exceedance)


# per-process state set up by `_init_worker`
_feature = None
_settings = None
_bounds = None


def _init_worker(feature, settings, bounds):
    global _feature, _settings, _bounds
    _feature, _settings, _bounds = feature, settings, bounds


def _evaluate(theta):
    if _bounds is not None and not _bounds.contains(theta):
        return float("nan")
    if callable(_feature):
        return float(_feature(theta))
    try:
        vector = ThetaVector(theta, _settings.ode.c)
    except ValueError:
        return float("nan")
    return float(get_feature(_feature)(vector, _settings))


class FeatureEvaluator:
    """
    Evaluates a feature on many parameter vectors, each distinct vector
    once, on a worker pool. Vectors outside `bounds` count as failures.

    Args:
        feature: a name from the feature registry, or a callable on a
            parameter array (evaluated in-process).
        settings (FeatureSettings): integration window for named features.
        bounds (ParameterBounds, optional): admissible parameter space.
    """

    def __init__(self, feature, settings=None, bounds=None, workers=1):
        if not callable(feature):
            get_feature(feature)
        self.feature = feature
        self.settings = settings or FeatureSettings()
        self.bounds = bounds
        self.workers = 1 if callable(feature) else workers
        self.memo = {}

    def __call__(self, thetas):
        thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
        keys = [t.tobytes() for t in thetas]
        todo = {}
        for key, theta in zip(keys, thetas):
            if key not in self.memo and key not in todo:
                todo[key] = theta
        if todo:
            with utils.WorkerPool(
                self.workers, _init_worker, (self.feature, self.settings, self.bounds)
            ) as pool:
                values = pool.map(
                    _evaluate,
                    list(todo.values()),
                    chunksize=max(1, len(todo) // (4 * self.workers)),
                )
            self.memo.update(zip(todo.keys(), values))
        return np.array([self.memo[key] for key in keys], dtype=np.float64)


@dataclass
class SensitivityRow:
    target: int
    alpha: float
    distribution: FeatureDistribution


def intervention_estimate(draws, plan, evaluator, baseline="paired", data_value=None):
    """
    Feature summaries under every single-parameter intervention (j, α).
    Draws keep their original weights. Exceedance is measured against each
    draw's unintervened feature value ("paired") or a fixed `data_value`
    ("data").

    Returns:
        (plain, rows): the unintervened summary and one `SensitivityRow` per
        (target, α) in grid order.
    """
    if len(draws) == 0:
        raise utils.ComputeError("Cannot summarize an empty draw set")
    plain_values = evaluator(draws.thetas)
    if baseline == "paired":
        reference = plain_values
    elif baseline == "data":
        if data_value is None:
            raise ValueError("A data baseline needs data_value")
        reference = data_value
    else:
        raise ValueError(f"Unknown baseline {baseline}, must be in [paired, data].")
    plain = summarize(plain_values, draws.weights, reference, plan.deltas)
    # evaluate the whole grid in one pass over the pool
    grid = [(j, a) for j in plan.targets for a in plan.alphas]
    intervened = [intervene(draws.thetas, j, a) for j, a in grid]
    evaluator(np.concatenate(intervened))
    rows = []
    for (j, alpha), thetas in zip(grid, intervened):
        values = evaluator(thetas)
        rows.append(
            SensitivityRow(j, alpha, summarize(values, draws.weights, reference, plan.deltas))
        )
        if rows[-1].distribution.absent:
            logging.warning(f"Every draw failed for θ{j} scaled by {alpha}")
    return plain, rows


def pairwise_heatmap(draws, j, j2, alphas, evaluator, alphas2=None):
    """
    Weighted-mean feature under joint scaling of θ_j by α and θ_j2 by α',
    relative to the unscaled cell.

    Returns:
        list of (α, α', mean, relative_change, failure) in grid order.
    """
    if j == j2:
        raise ValueError(f"Heatmap needs two distinct parameters, got {j} twice.")
    alphas2 = alphas if alphas2 is None else alphas2
    grid = [(a, a2) for a in alphas for a2 in alphas2]
    intervened = [intervene(intervene(draws.thetas, j, a), j2, a2) for a, a2 in grid]
    evaluator(np.concatenate(intervened + [draws.thetas]))
    base = summarize(evaluator(draws.thetas), draws.weights).mean
    cells = []
    for (a, a2), thetas in zip(grid, intervened):
        dist = summarize(evaluator(thetas), draws.weights)
        change = (dist.mean - base) / base if base != 0 else float("nan")
        cells.append((a, a2, dist.mean, change, dist.failure))
    return cells


def _delta_column(delta):
    return f"exceed_{int(round(delta * 100))}"


def write_sensitivity(path, plain, rows, plan, config_hash, metadata, producer="analyze"):
    fmt = utils.format_float
    columns = ["parameter", "alpha", "mean", "q10", "q90", "failure_pct"]
    columns += [_delta_column(d) for d in plan.deltas]
    table = []
    for target, alpha, dist in [(0, 1.0, plain)] + [
        (r.target, r.alpha, r.distribution) for r in rows
    ]:
        table.append(
            [target, fmt(alpha), fmt(dist.mean), fmt(dist.q10), fmt(dist.q90),
             fmt(100.0 * dist.failure)]
            + [fmt(100.0 * dist.exceedance[d]) for d in plan.deltas]
        )
    utils.write_table(path, columns, table, config_hash, producer,
                      dict(metadata, feature=plan.feature))


def write_exceedance(path, rows, plan, baseline, config_hash, metadata, producer="analyze"):
    fmt = utils.format_float
    table = []
    for r in rows:
        table.append([r.target, fmt(r.alpha), "failure", "", fmt(100.0 * r.distribution.failure)])
        for d in plan.deltas:
            table.append([r.target, fmt(r.alpha), "exceed", fmt(d),
                          fmt(100.0 * r.distribution.exceedance[d])])
    utils.write_table(
        path, ["parameter", "alpha", "kind", "delta", "percent"], table, config_hash,
        producer, dict(metadata, feature=plan.feature, baseline=baseline),
    )


def write_heatmap(path, heatmaps, config_hash, metadata, producer="analyze"):
    fmt = utils.format_float
    table = [
        [j, j2, fmt(a), fmt(a2), fmt(mean), fmt(change), fmt(100.0 * failure)]
        for (j, j2), cells in heatmaps
        for a, a2, mean, change, failure in cells
    ]
    utils.write_table(
        path,
        ["parameter", "parameter2", "alpha", "alpha2", "mean", "relative_change",
         "failure_pct"],
        table, config_hash, producer, metadata,
    )


# per-process state for `posterior_spectra`
_spectrum_args = None


def _init_spectrum_worker(K, ode, num_points):
    global _spectrum_args
    _spectrum_args = (K, ode, num_points)


def _spectrum(theta):
    K, ode, num_points = _spectrum_args
    try:
        vector = ThetaVector(theta, ode.c)
    except ValueError:
        return None
    spectrum = model_spectrum(vector, K, ode, num_points)
    return None if isinstance(spectrum, IntegrationFailure) else spectrum.s


def posterior_spectra(draws, s_hat, ode, num_points, workers=1):
    """
    Weighted mean and 5%/95% quantiles of λ_k(θ) over the draws next to the
    mean estimated spectrum of the data.

    Returns:
        list of (k, data_mean, mean, q05, q95, failure) rows.
    """
    s_hat = np.atleast_2d(s_hat)
    K = s_hat.shape[1]
    with utils.WorkerPool(workers, _init_spectrum_worker, (K, ode, num_points)) as pool:
        spectra = pool.map(
            _spectrum, list(draws.thetas), chunksize=max(1, len(draws) // (4 * workers))
        )
    ok = np.array([s is not None for s in spectra])
    rows = []
    for k in range(K):
        values = np.array([s[k] if s is not None else np.nan for s in spectra])
        dist = summarize(values, draws.weights)
        rows.append((
            k + 1, float(s_hat[:, k].mean()), dist.mean,
            weighted_quantile(values[ok], draws.weights[ok], 0.05) if ok.any() else float("nan"),
            weighted_quantile(values[ok], draws.weights[ok], 0.95) if ok.any() else float("nan"),
            dist.failure,
        ))
    return rows


def write_spectra(path, rows, config_hash, metadata, producer="analyze"):
    fmt = utils.format_float
    utils.write_table(
        path,
        ["k", "data_mean", "mean", "q05", "q95", "failure_pct"],
        [[k, fmt(d), fmt(m), fmt(lo), fmt(hi), fmt(100.0 * f)]
         for k, d, m, lo, hi, f in rows],
        config_hash, producer, metadata,
    )
