"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Closed-form targets for exercising the samplers without ODE solves.
"""

import numpy as np
from scipy.special import logsumexp

from models.bounds import ParameterBounds


class GaussianMixtureTarget:
    """
    Mixture of isotropic Gaussians restricted to a box. Implements the
    sampler target interface with no latent variables.

    Args:
        means (array-like): (C, p) component means.
        sd (float): common component standard deviation.
        weights (array-like, optional): component weights, uniform if None.
        bounds (ParameterBounds): sampling support.
    """

    has_latent = False

    def __init__(self, means, sd, bounds, weights=None):
        self.means = np.atleast_2d(np.asarray(means, dtype=np.float64))
        self.sd = float(sd)
        num_components, p = self.means.shape
        if weights is None:
            weights = np.full(num_components, 1.0 / num_components)
        self.weights = np.asarray(weights, dtype=np.float64)
        if bounds.p != p:
            raise ValueError(f"Bounds of dimension {bounds.p} for a {p}-dim target")
        self.bounds = bounds
        self._log_weights = np.log(self.weights)
        self._log_norm = -0.5 * p * np.log(2.0 * np.pi * self.sd**2)

    @classmethod
    def two_modes(cls, p, separation, sd=1.0, half_width=None):
        """
        Two equally weighted modes at ±separation/2 along the first axis.
        """
        means = np.zeros((2, p))
        means[0, 0] = -separation / 2.0
        means[1, 0] = separation / 2.0
        half_width = half_width or separation + 4.0 * sd
        bounds = ParameterBounds(np.full(p, -half_width), np.full(p, half_width))
        return cls(means, sd, bounds)

    @property
    def p(self):
        return self.means.shape[1]

    def log_density(self, thetas):
        thetas = np.atleast_2d(thetas)
        sq = np.sum((thetas[:, None, :] - self.means[None, :, :]) ** 2, axis=2)
        comp = self._log_weights[None, :] + self._log_norm - sq / (2.0 * self.sd**2)
        return logsumexp(comp, axis=1)

    def evaluate(self, theta):
        return np.array(theta, dtype=np.float64)

    def log_elements(self, thetas, payloads, latent):
        return self.log_density(thetas)

    def log_shared(self, latent):
        return 0.0

    def initial_latent(self):
        return None

    def sample_initial(self, rng):
        return self.bounds.from_unit(1.0 - rng.random(self.p))

    def mean(self):
        return self.weights @ self.means

    def component_of(self, thetas):
        """
        Index of the nearest component mean for each row of `thetas`.
        """
        thetas = np.atleast_2d(thetas)
        sq = np.sum((thetas[:, None, :] - self.means[None, :, :]) ** 2, axis=2)
        return np.argmin(sq, axis=1)
