"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class Multiset:
    """
    The M parameter vectors of a multiset chain with their cached model
    payloads (e.g. spectra), log-density contributions ℓ_m and instrumental
    log-densities log g_m. Rows are only changed through `update` so the
    caches always describe the current elements.
    """

    thetas: np.ndarray
    payloads: list
    ells: np.ndarray
    log_g: np.ndarray

    @property
    def size(self):
        return len(self.thetas)

    def update(self, m, theta, payload, ell, log_g):
        self.thetas[m] = theta
        self.payloads[m] = payload
        self.ells[m] = ell
        self.log_g[m] = log_g


@dataclass
class ChainState:
    """
    Attributes:
        multiset (Multiset): current elements.
        latent: shared latent variables (`LatentSpectra`) or None.
        iteration (int): completed iterations.
        log_shared (float): cached θ-free log-density terms.
        log_mix (float): cached log of the mixture over elements.
    """

    multiset: Multiset
    latent: Optional[object]
    iteration: int
    log_shared: float
    log_mix: float

    @property
    def log_density(self):
        return self.log_shared + self.log_mix


@dataclass(frozen=True, eq=False)
class WeightedSample:
    iteration: int
    thetas: np.ndarray
    weights: np.ndarray
    ells: np.ndarray
    tau2: float = float("nan")
    sigma2: float = float("nan")
    s: Optional[np.ndarray] = None

    @property
    def leading(self):
        return int(np.argmax(self.weights))
