"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import numpy as np
from scipy.special import gammaln, log_ndtr


def log_truncnormal_plus(s, lam, tau2):
    """
    Log density of a normal N(λ, τ²) truncated to (0, ∞), evaluated at s.
    Broadcasts; returns -inf where s <= 0.
    """
    if not np.all(np.asarray(tau2) > 0):
        raise ValueError(f"Invalid variance {tau2}, must be positive.")
    s = np.asarray(s, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    tau = np.sqrt(tau2)
    out = (
        -0.5 * np.log(2.0 * np.pi * tau2)
        - (s - lam) ** 2 / (2.0 * tau2)
        - log_ndtr(lam / tau)
    )
    out = np.where(s > 0, out, -np.inf)
    return out if out.ndim else float(out)


def log_ig(x, a, b):
    """
    Log density of the inverse gamma distribution with shape `a` and scale
    `b`: a·log b - log Γ(a) - (a+1)·log x - b/x. Returns -inf for x <= 0.
    """
    if a <= 0 or b <= 0:
        raise ValueError(f"Invalid inverse gamma parameters ({a}, {b}), must be positive.")
    x = np.asarray(x, dtype=np.float64)
    positive = x > 0
    xs = np.where(positive, x, 1.0)
    out = a * np.log(b) - gammaln(a) - (a + 1.0) * np.log(xs) - b / xs
    out = np.where(positive, out, -np.inf)
    return out if out.ndim else float(out)
