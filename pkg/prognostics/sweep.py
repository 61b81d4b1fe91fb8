"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Parallel, resumable likelihood sweep over the scaled parameter cube.
"""

from dataclasses import dataclass
import logging
import os

import numpy as np

import utils
from models.hierarchical import HierarchicalModel
from prognostics.design import batch_points
from prognostics.prospects import (
    ProspectAccumulator,
    default_l_min,
    map_from_accumulator,
)

# per-process state set up by `_init_worker`
_model = None
_tau2 = None


def _init_worker(cfg, s_hat, sigma2):
    global _model, _tau2
    # design points never repeat, so workers skip the spectrum memo
    _model = HierarchicalModel.from_config(cfg, s_hat, sigma2)
    _model.cache.maxsize = 0
    _tau2 = cfg.sweep.tau2


def _evaluate_point(item):
    index, u = item
    theta = _model.bounds.from_unit(u)
    return index, _model.sweep_log_likelihood(theta, _tau2)


@dataclass
class SweepResults:
    indices: np.ndarray
    u: np.ndarray
    ok: np.ndarray
    logliks: np.ndarray

    def __len__(self):
        return len(self.indices)


def sweep_columns(p):
    return ["index"] + [f"u{j}" for j in range(1, p + 1)] + ["status", "loglik"]


def read_sweep(path):
    """
    Reads a sweep results file. Rows that do not parse (e.g. a row torn by
    an interrupted write) are skipped with a warning.

    Returns:
        (header, SweepResults) with failed solves carrying loglik -inf.
    """
    header, columns, rows = utils.read_table(path)
    p = len(columns) - 3
    indices, us, ok, logliks = [], [], [], []
    for line, row in enumerate(rows):
        try:
            if len(row) != p + 3 or row[-2] not in ("ok", "fail"):
                raise ValueError(row)
            index = int(row[0])
            u = [float(v) for v in row[1 : p + 1]]
            ll = float(row[-1])
        except ValueError:
            logging.warning(f"Skipping malformed sweep row {line + 1} in {path}")
            continue
        indices.append(index)
        us.append(u)
        ok.append(row[-2] == "ok")
        logliks.append(ll if row[-2] == "ok" else -np.inf)
    results = SweepResults(
        indices=np.array(indices, dtype=np.int64),
        u=np.array(us, dtype=np.float64).reshape(-1, p),
        ok=np.array(ok, dtype=bool),
        logliks=np.array(logliks, dtype=np.float64),
    )
    return header, results


def _row(index, u, loglik):
    status = "fail" if loglik is None else "ok"
    value = "-inf" if loglik is None else utils.format_float(loglik)
    return [index] + [utils.format_float(v) for v in u] + [status, value]


def run_sweep(cfg, s_hat, sigma2, path, config_hash, resume=False):
    """
    Evaluates the sweep log-likelihood on `cfg.sweep.num_points` design
    points, appending one row per point to `path` as batches complete. With
    `resume`, indices already present in `path` are not recomputed.
    """
    sweep = cfg.sweep
    p = len(cfg.bounds.lower)
    columns = sweep_columns(p)
    metadata = {
        "num_points": sweep.num_points,
        "batch_size": sweep.batch_size,
        "design": sweep.design,
        "seed": cfg.seed,
    }
    done = set()
    if resume and os.path.exists(path):
        header, previous = read_sweep(path)
        if header.get("config_hash") != config_hash:
            raise utils.ConfigError(
                f"{path} was produced with config hash {header.get('config_hash')}, "
                f"current config hash is {config_hash}"
            )
        done = set(previous.indices.tolist())
        rows = [
            _row(i, u, ll if k else None)
            for i, u, k, ll in zip(
                previous.indices, previous.u, previous.ok, previous.logliks
            )
        ]
        utils.write_table(path, columns, rows, config_hash, "prognose", metadata)
        logging.info(f"Resuming sweep with {len(done)} completed points")
    else:
        utils.write_table(path, columns, [], config_hash, "prognose", metadata)

    timer = utils.Timer(["batch"])
    num_failed = 0
    with utils.WorkerPool(sweep.workers, _init_worker, (cfg, s_hat, sigma2)) as pool:
        for batch_index, start in enumerate(
            range(0, sweep.num_points, sweep.batch_size)
        ):
            size = min(sweep.batch_size, sweep.num_points - start)
            todo = [i for i in range(size) if start + i not in done]
            if not todo:
                continue
            points = batch_points(batch_index, size, p, cfg.seed, sweep.design, sweep.q)
            timer.start("batch")
            results = pool.map(
                _evaluate_point,
                [(start + i, points[i]) for i in todo],
                chunksize=max(1, len(todo) // (4 * sweep.workers)),
            )
            timer.stop("batch")
            utils.append_rows(
                path, [_row(index, points[index - start], loglik) for index, loglik in results]
            )
            num_failed += sum(ll is None for _, ll in results)
            logging.info(
                "Sweep batch {} complete. Points {}/{}, failed solves {}, "
                "Time {:.3f} (s)".format(
                    batch_index + 1,
                    min(start + size, sweep.num_points),
                    sweep.num_points,
                    num_failed,
                    timer.total_time["batch"],
                )
            )
    return read_sweep(path)[1]


def classify_sweep(results, sweep, seed, shard_size=100_000):
    """
    Builds the prospect map from persisted sweep results, reducing shards
    of rows in file order.
    """
    l_min = sweep.l_min
    if l_min is None:
        l_min = default_l_min(results.logliks, sweep.l_min_quantile)
        logging.info(
            "Likelihood threshold {:.4f} ({} quantile of finite values)".format(
                l_min, sweep.l_min_quantile
            )
        )
    acc = ProspectAccumulator(results.u.shape[1], sweep.q, sweep.d0)
    for start in range(0, len(results), shard_size):
        stop = start + shard_size
        acc.update(results.u[start:stop], results.logliks[start:stop], l_min)
    return map_from_accumulator(
        acc,
        n_min=sweep.n_min,
        rho0=sweep.rho0,
        rho1=sweep.rho1,
        exact_volume_cap=sweep.exact_volume_cap,
        mc_points=sweep.mc_points,
        seed=seed,
        l_min=l_min,
    )
