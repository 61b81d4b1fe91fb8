"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Mode recovery on a two-component Gaussian mixture in nine dimensions with
the modes 8 standard deviations apart. Both samplers start inside one
mode; the multiset sampler uses a prospect map built from a uniform sweep
of the mixture density.

Pass criteria: the multiset sampler puts 50% ± 10% of the mass on each
mode and its estimate of the first coordinate's mean (exactly 0) is within
3 Monte Carlo standard errors; Metropolis puts under 5% in the mode it did
not start in. Exits with status 1 when a criterion fails.

Usage: python multimodal_benchmark.py [iterations] [multiset_size]
"""

import os
import sys
import time

import numpy as np

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))
from config import StepSizes
from models.toy import GaussianMixtureTarget
from prognostics.prospects import classify_prospects, default_l_min
from samplers.diagnostics import batch_means_error
from samplers.gmss import Instrumental, MetropolisWithinGibbs, MultisetSampler, estimate

ITERATIONS = int(sys.argv[1]) if len(sys.argv) > 1 else 50_000
M = int(sys.argv[2]) if len(sys.argv) > 2 else 20
SEPARATION = 8.0
SWEEP_POINTS = 200_000
THIN = 10

target = GaussianMixtureTarget.two_modes(9, separation=SEPARATION, sd=1.0)
rng = np.random.default_rng(0)
u = 1.0 - rng.random((SWEEP_POINTS, target.p))
logliks = target.log_density(target.bounds.from_unit(u))
prospect_map = classify_prospects(
    u, logliks, q=5, d0=1, l_min=default_l_min(logliks, 0.999), exact_volume_cap=0,
    mc_points=200_000,
)
start = target.means[1]


def per_iteration(h, samples):
    return np.array(
        [np.dot(s.weights, [h(t) for t in s.thetas]) / s.weights.sum() for s in samples]
    )


def run(sampler, initial):
    sampler.initialize(initial=initial)
    samples = []
    begin = time.perf_counter()
    for t in range(1, ITERATIONS + 1):
        sampler.iterate()
        if t > ITERATIONS // 5 and t % THIN == 0:
            samples.append(sampler.weighted_sample())
    elapsed = time.perf_counter() - begin
    mass = estimate(lambda theta: float(theta[0] < 0), samples)
    means = per_iteration(lambda theta: theta[0], samples)
    mean, se = float(means.mean()), batch_means_error(means)
    print(
        "{}: mass in the unvisited mode {:.3f} (exact 0.5), mean of θ1 {:.3f} ± {:.3f} "
        "(exact 0), {:.1f} (s)".format(sampler.name, mass, mean, se, elapsed)
    )
    return mass, mean, se


def check(name, passed):
    print("{} {}".format("PASS" if passed else "FAIL", name))
    return passed


steps = StepSizes(theta=0.05)
mh_mass, _, _ = run(MetropolisWithinGibbs(target, steps, seed=1, adapt=False), start[None, :])
gmss_mass, gmss_mean, gmss_se = run(
    MultisetSampler(target, Instrumental(prospect_map, target.bounds), M, steps,
                    seed=1, adapt=False),
    np.repeat(start[None, :], M, axis=0),
)
results = [
    check("gmss mode weights within 0.5 ± 0.1", abs(gmss_mass - 0.5) <= 0.1),
    check("gmss mean within 3 standard errors", abs(gmss_mean) < 3.0 * gmss_se),
    check("mh stays in its starting mode", mh_mass < 0.05),
]
if not all(results):
    sys.exit(1)
