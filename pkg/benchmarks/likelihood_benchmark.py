"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Usage: python likelihood_benchmark.py [multiset_size]
"""

import os
import sys

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))
import config
from datasets.bioluminescence import replicate_spectra, simulate_replicates
from models.hierarchical import HierarchicalModel
from models.oscillator import ThetaVector

from time_utils import time_func

M = int(sys.argv[1]) if len(sys.argv) > 1 else 20
cfg = config.parse_config({"prior": {"b_theta": 0.01}})
series, _ = simulate_replicates(
    ThetaVector(config.REFERENCE_THETA), cfg.ode, cfg.data.num_points, 3, 0.05, 0
)
s_hat, sigma2 = replicate_spectra(series, cfg.data.harmonics)
model = HierarchicalModel.from_config(cfg, s_hat, sigma2)
model.cache.maxsize = 0

rng = np.random.default_rng(0)
thetas = np.array([model.sample_initial(rng) for _ in range(M)])
payloads = [model.evaluate(t) for t in thetas]
latent = model.initial_latent()

time_func(lambda: model.evaluate(thetas[0]), iterations=20, name="model spectrum")
time_func(
    lambda: model.log_elements(thetas, payloads, latent), name=f"log elements, M={M}"
)
time_func(lambda: model.log_shared(latent), name="shared terms")
