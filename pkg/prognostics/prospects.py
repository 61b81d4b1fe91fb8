"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Prospect classification of the scaled parameter cube and the two-level
instrumental density built from it.

A cell is a pair (S, h): S a d0-subset of the coordinates stored as a
bitmask (bit j for coordinate j + 1) and h a level combination in
{1..q}^d0 encoded base q as Σ_i (h_i - 1)·q^i over the coordinates of S in
increasing order.
"""

import itertools
import logging
import math

import numpy as np

import utils


def _check_unit(u):
    u = np.asarray(u, dtype=np.float64)
    if np.any(~(u > 0)) or np.any(u > 1):
        raise ValueError("Scaled parameters must lie in (0, 1].")
    return u


def u_q(theta_scaled, q):
    """
    Level ⌈θ·q⌉ of a scaled coordinate in (0, 1].
    """
    if not 0 < theta_scaled <= 1:
        raise ValueError(f"Invalid scaled value {theta_scaled}, must be in (0, 1].")
    return int(math.ceil(theta_scaled * q))


def levels(u, q):
    """
    Vectorized `u_q`: levels in {1..q} with the shape of `u`.
    """
    u = _check_unit(u)
    return np.clip(np.ceil(u * q).astype(np.int64), 1, q)


def subsets(p, d0):
    if not 1 <= d0 <= p:
        raise ValueError(f"Invalid subspace size {d0}, must be in [1, {p}].")
    return list(itertools.combinations(range(p), d0))


def subset_mask(coords):
    return sum(1 << j for j in coords)


def mask_coords(mask, p):
    return tuple(j for j in range(p) if mask >> j & 1)


def cell_codes(lv, coords, q):
    """
    Base-q codes of the projections of level rows `lv` (N, p) on `coords`.
    """
    weights = q ** np.arange(len(coords), dtype=np.int64)
    return (lv[:, list(coords)] - 1) @ weights


class ProspectAccumulator:
    """
    Success counts per cell. Counts add across shards, so accumulating
    shards in any order gives the same map.
    """

    def __init__(self, p, q, d0):
        self.p, self.q, self.d0 = p, q, d0
        self.coords = subsets(p, d0)
        self.counts = {
            subset_mask(c): np.zeros(q**d0, dtype=np.int64) for c in self.coords
        }
        self.num_points = 0

    def update(self, u, logliks, l_min):
        u = np.atleast_2d(u)
        logliks = np.asarray(logliks, dtype=np.float64)
        self.num_points += len(u)
        success = np.isfinite(logliks) & (logliks > l_min)
        if not np.any(success):
            return self
        lv = levels(u[success], self.q)
        for c in self.coords:
            codes = cell_codes(lv, c, self.q)
            self.counts[subset_mask(c)] += np.bincount(
                codes, minlength=self.q**self.d0
            )
        return self

    def merge(self, other):
        for mask, counts in other.counts.items():
            self.counts[mask] += counts
        self.num_points += other.num_points
        return self

    def marked(self, n_min):
        return {
            mask: counts > n_min
            for mask, counts in self.counts.items()
            if np.any(counts > n_min)
        }


class ProspectMap:
    """
    High/low classification of (0, 1]^p and the step density that puts
    weight ρ₁ on high-prospect points and ρ₀ elsewhere, normalized over the
    cube.

    Args:
        p, q, d0 (int): dimension, levels per coordinate, subspace size.
        marked (dict): bitmask -> boolean table of length q^d0.
        rho0, rho1 (float): low and high density levels, rho1 >= rho0 > 0.
        vol_high (float): volume of the high-prospect region.
        vol_high_se (float): standard error of `vol_high` (0 when exact).
    """

    def __init__(self, p, q, d0, marked, rho0=0.1, rho1=1.0, vol_high=None,
                 vol_high_se=0.0, metadata=None):
        if not (1 <= d0 <= p and q >= 2):
            raise ValueError(f"Invalid map shape p={p}, q={q}, d0={d0}.")
        if not rho1 >= rho0 > 0:
            raise ValueError(f"Invalid levels rho0={rho0}, rho1={rho1}, need rho1 >= rho0 > 0.")
        self.p, self.q, self.d0 = p, q, d0
        self.rho0, self.rho1 = float(rho0), float(rho1)
        self.marked = {m: np.asarray(t, dtype=bool) for m, t in marked.items() if np.any(t)}
        self._tables = [(mask_coords(m, p), t) for m, t in sorted(self.marked.items())]
        self.metadata = dict(metadata or {})
        if vol_high is None:
            vol_high, vol_high_se = self.exact_volume(), 0.0
        self.vol_high = float(vol_high)
        self.vol_high_se = float(vol_high_se)
        self.log_z = math.log(self.rho1 * self.vol_high + self.rho0 * (1.0 - self.vol_high))

    @classmethod
    def uniform(cls, p, q=3, d0=1):
        return cls(p, q, d0, {}, vol_high=0.0)

    @property
    def num_marked(self):
        return int(sum(t.sum() for t in self.marked.values()))

    def cells(self):
        return [
            (mask, int(code))
            for mask, table in sorted(self.marked.items())
            for code in np.flatnonzero(table)
        ]

    def is_high_levels(self, lv):
        lv = np.atleast_2d(lv)
        high = np.zeros(len(lv), dtype=bool)
        for coords, table in self._tables:
            high |= table[cell_codes(lv, coords, self.q)]
        return high

    def is_high(self, u):
        u = np.asarray(u, dtype=np.float64)
        high = self.is_high_levels(levels(np.atleast_2d(u), self.q))
        return high if u.ndim > 1 else bool(high[0])

    def log_density(self, u):
        high = self.is_high(u)
        out = np.where(high, math.log(self.rho1), math.log(self.rho0)) - self.log_z
        return out if out.ndim else float(out)

    def exact_volume(self, chunk=100_000):
        """
        Fraction of the q^p full-grid cells that are high prospect.
        """
        total = self.q**self.p
        shape = (self.q,) * self.p
        high = 0
        for start in range(0, total, chunk):
            flat = np.arange(start, min(start + chunk, total))
            block = np.stack(np.unravel_index(flat, shape), axis=1) + 1
            high += int(self.is_high_levels(block).sum())
        return high / total

    def monte_carlo_volume(self, num_points, seed, chunk=100_000):
        rng = np.random.default_rng(seed)
        high = 0
        for start in range(0, num_points, chunk):
            size = min(chunk, num_points - start)
            high += int(self.is_high(1.0 - rng.random((size, self.p))).sum())
        vol = high / num_points
        return vol, math.sqrt(max(vol * (1.0 - vol), 0.0) / num_points)

    def header(self):
        meta = {
            "p": self.p,
            "q": self.q,
            "d0": self.d0,
            "rho0": utils.format_float(self.rho0),
            "rho1": utils.format_float(self.rho1),
            "logZ": utils.format_float(self.log_z),
            "volhigh": utils.format_float(self.vol_high),
            "volhigh_se": utils.format_float(self.vol_high_se),
        }
        meta.update(self.metadata)
        return meta

    def save(self, path, config_hash, producer="prognose"):
        utils.write_table(
            path, ["subset_mask", "cell_code"], self.cells(), config_hash, producer,
            self.header(),
        )

    @classmethod
    def load(cls, path):
        header, columns, rows = utils.read_table(path)
        p, q, d0 = int(header["p"]), int(header["q"]), int(header["d0"])
        marked = {}
        for mask, code in rows:
            table = marked.setdefault(int(mask), np.zeros(q**d0, dtype=bool))
            table[int(code)] = True
        known = {"p", "q", "d0", "rho0", "rho1", "logZ", "volhigh", "volhigh_se",
                 "tool", "version", "config_hash", "producer"}
        return cls(
            p, q, d0, marked,
            rho0=float(header["rho0"]),
            rho1=float(header["rho1"]),
            vol_high=float(header["volhigh"]),
            vol_high_se=float(header["volhigh_se"]),
            metadata={k: v for k, v in header.items() if k not in known},
        )


def default_l_min(logliks, quantile=0.999):
    """
    Threshold passed by the top (1 - quantile) fraction of finite sweep
    log-likelihoods.
    """
    logliks = np.asarray(logliks, dtype=np.float64)
    finite = logliks[np.isfinite(logliks)]
    if len(finite) == 0:
        return math.inf
    return float(np.quantile(finite, quantile))


def classify_prospects(u, logliks, q, d0, l_min, n_min=0, rho0=0.1, rho1=1.0,
                       exact_volume_cap=1_000_000, mc_points=1_000_000, seed=0):
    """
    Marks every cell (S, h) holding more than `n_min` evaluations with
    log-likelihood above `l_min`; a point is high prospect when any of its
    d0-projections falls in a marked cell.

    Args:
        u (np.ndarray): (N, p) scaled design points.
        logliks (np.ndarray): (N,) log-likelihoods, -inf for failed solves.

    Returns:
        ProspectMap with the high-region volume counted exactly on the q^p
        grid, or estimated from `mc_points` uniform points when q^p exceeds
        `exact_volume_cap`.
    """
    u = np.atleast_2d(u)
    if len(u) == 0:
        raise ValueError("Cannot classify an empty design.")
    p = u.shape[1]
    if d0 > p:
        raise ValueError(f"Invalid subspace size {d0}, must be at most {p}.")
    acc = ProspectAccumulator(p, q, d0).update(u, logliks, l_min)
    return map_from_accumulator(acc, n_min, rho0, rho1, exact_volume_cap,
                                mc_points, seed, l_min=l_min)


def map_from_accumulator(acc, n_min=0, rho0=0.1, rho1=1.0, exact_volume_cap=1_000_000,
                         mc_points=1_000_000, seed=0, l_min=None):
    marked = acc.marked(n_min)
    metadata = {"n_min": n_min, "num_points": acc.num_points}
    if l_min is not None:
        metadata["l_min"] = utils.format_float(l_min)
    if acc.q**acc.p <= exact_volume_cap or not marked:
        prospect_map = ProspectMap(acc.p, acc.q, acc.d0, marked, rho0, rho1,
                                   metadata=dict(metadata, volhigh_method="exact"))
    else:
        unsized = ProspectMap(acc.p, acc.q, acc.d0, marked, rho0, rho1, vol_high=0.0)
        vol, se = unsized.monte_carlo_volume(mc_points, seed)
        prospect_map = ProspectMap(
            acc.p, acc.q, acc.d0, marked, rho0, rho1, vol_high=vol, vol_high_se=se,
            metadata=dict(metadata, volhigh_method="monte_carlo", mc_seed=seed,
                          mc_points=mc_points),
        )
    logging.info(
        "Marked {} of {} projected cells high prospect, high volume {:.4f}".format(
            prospect_map.num_marked,
            len(acc.coords) * acc.q**acc.d0,
            prospect_map.vol_high,
        )
    )
    return prospect_map


def instrumental_log_density(theta_scaled, prospect_map):
    return prospect_map.log_density(theta_scaled)
