"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Usage: python ode_benchmark.py [num_points]
"""

import os
import sys

sys.path.append(os.path.join(os.path.dirname(__file__), ".."))
from config import REFERENCE_THETA
from models.oscillator import ThetaVector, integrate

from time_utils import time_func

NUM_POINTS = int(sys.argv[1]) if len(sys.argv) > 1 else 66
ITERATIONS = 20
theta = ThetaVector(REFERENCE_THETA)

for rtol in (1e-6, 1e-8, 1e-10):
    time_func(
        lambda: integrate(theta, num_points=NUM_POINTS, rtol=rtol, atol=rtol * 1e-2),
        iterations=ITERATIONS,
        name=f"integrate {NUM_POINTS} points, rtol {rtol:g}",
    )
