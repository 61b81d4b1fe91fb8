"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import numpy as np


class ParameterBounds:
    """
    Affine map between natural parameters and the scaled unit cube. A point
    θ is in the support when lower < θ ≤ upper, i.e. its scaled image lies
    in (0, 1]^p.
    """

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=np.float64)
        self.upper = np.asarray(upper, dtype=np.float64)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower and upper bounds must be vectors of equal length")
        if np.any(self.upper <= self.lower):
            raise ValueError(
                f"Invalid bounds, need lower < upper: {self.lower}, {self.upper}"
            )
        self.width = self.upper - self.lower
        # log |d theta / d u|
        self.log_jacobian = float(np.sum(np.log(self.width)))

    @classmethod
    def from_config(cls, bounds_config):
        return cls(bounds_config.lower, bounds_config.upper)

    @property
    def p(self):
        return len(self.lower)

    def to_unit(self, theta):
        return (np.asarray(theta, dtype=np.float64) - self.lower) / self.width

    def from_unit(self, u):
        theta = self.lower + np.asarray(u, dtype=np.float64) * self.width
        return np.minimum(theta, self.upper)

    def contains(self, theta):
        theta = np.asarray(theta)
        return bool(np.all(theta > self.lower) and np.all(theta <= self.upper))

    def describe(self, theta):
        """
        Natural and scaled coordinates side by side, for logging.
        """
        u = self.to_unit(theta)
        return ", ".join(
            f"θ{j + 1}={t:.4g} (u={v:.3f})" for j, (t, v) in enumerate(zip(theta, u))
        )
