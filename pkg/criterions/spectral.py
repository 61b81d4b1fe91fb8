"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

Harmonic decomposition of periodic series and the noncentral chi-square
density of estimated power.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import i0e

from models.oscillator import IntegrationFailure, integrate_with


@dataclass(frozen=True, eq=False)
class HarmonicCoefficients:
    a: np.ndarray
    b: np.ndarray
    T: int
    K: int


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    s: np.ndarray

    def __len__(self):
        return len(self.s)


@dataclass(frozen=True)
class NoiseScale:
    """
    Measurement-noise variance and the variance terms derived from it.

    The spectra are built from normalized coefficients â_k = (2/T)Σ y_t cos(·),
    so each coefficient carries variance V·(2/T)² = 2σ²/T. Under the
    "coefficient" convention ŝ_k/(2σ²/T) is noncentral χ²₂. The "literal"
    convention plugs the unnormalized-sum variance V = Tσ²/2 into the same
    density; it differs from the first by the factor (T/2)², which only
    matches when T = 2.

    Attributes:
        sigma2_F (float): variance of the additive Gaussian error.
        T (int): series length.
        V (float): T·σ²/2, the variance of the unnormalized harmonic sums
            Σ y_t cos(2πkt/T).
    """

    sigma2_F: float
    T: int

    def __post_init__(self):
        if not self.sigma2_F > 0:
            raise ValueError(f"Noise variance must be positive, got {self.sigma2_F}")

    @property
    def V(self):
        return self.T * self.sigma2_F / 2.0

    @property
    def coefficient_variance(self):
        """Variance of â_k and b̂_k, i.e. V·(2/T)² = 2σ²/T."""
        return 2.0 * self.sigma2_F / self.T

    def power_variance(self, convention="coefficient"):
        if convention == "coefficient":
            return self.coefficient_variance
        elif convention == "literal":
            return self.V
        else:
            raise ValueError(
                f"Invalid variance convention {convention}, must be in "
                "[coefficient, literal]."
            )


def max_harmonics(T):
    return (T - 1) // 2


def max_noise_harmonics(T):
    # largest K leaving T - 1 - 2K >= 1 residual degrees of freedom
    return (T - 2) // 2


def _basis(T, K):
    t = np.arange(T)
    angles = 2.0 * np.pi * np.outer(np.arange(1, K + 1), t) / T
    return np.cos(angles), np.sin(angles)


def harmonic_coefficients(series, K):
    """
    Least-squares harmonic coefficients of `series` at frequencies k/T,
    k = 1..K:

        a_k = (2/T) Σ_t y_t cos(2πkt/T),  b_k = (2/T) Σ_t y_t sin(2πkt/T)

    `series` may be a (T,) vector or an (n, T) matrix of replicates, in which
    case `a` and `b` are (n, K).
    """
    y = np.asarray(series, dtype=np.float64)
    T = y.shape[-1]
    if not 1 <= K <= max_harmonics(T):
        raise ValueError(
            f"Invalid number of harmonics {K}, must be in [1, {max_harmonics(T)}] "
            f"for series of length {T}."
        )
    cos, sin = _basis(T, K)
    a = (2.0 / T) * (y @ cos.T)
    b = (2.0 / T) * (y @ sin.T)
    return HarmonicCoefficients(a=a, b=b, T=T, K=K)


def power_spectrum(coef):
    return PowerSpectrum(s=coef.a**2 + coef.b**2)


def reconstruct(coef):
    """
    Σ_k a_k cos(2πkt/T) + b_k sin(2πkt/T) on t = 0..T-1.
    """
    cos, sin = _basis(coef.T, coef.K)
    return coef.a @ cos + coef.b @ sin


def residual_variance(series, K):
    """
    Pooled residual variance of the K-harmonic fit (with mean) over the rows
    of `series`, on T - 1 - 2K degrees of freedom per row.
    """
    y = np.atleast_2d(np.asarray(series, dtype=np.float64))
    n, T = y.shape
    dof = T - 1 - 2 * K
    if K < 1 or dof < 1:
        raise ValueError(
            f"Invalid number of harmonics {K} for the noise fit, must leave "
            f"residual degrees of freedom for series of length {T}."
        )
    coef = harmonic_coefficients(y, K)
    fitted = y.mean(axis=1, keepdims=True) + reconstruct(coef)
    rss = np.sum((y - fitted) ** 2)
    return float(rss / (n * dof))


def model_spectrum(theta, K, ode_config, num_points):
    """
    Power spectrum λ(θ) of the model output on the data grid.

    Returns:
        A `PowerSpectrum`, or the `IntegrationFailure` from the solver.
    """
    traj = integrate_with(theta, ode_config, num_points)
    if isinstance(traj, IntegrationFailure):
        return traj
    return power_spectrum(harmonic_coefficients(traj.values, K))


def log_bessel_i0(x):
    # log I0(x) = log(i0e(x)) + x, finite for all x >= 0
    x = np.asarray(x, dtype=np.float64)
    return np.log(i0e(x)) + x


def log_density_shat_given_s(s_hat, s, V):
    """
    Log density of estimated power ŝ given true power s, where ŝ/V is
    noncentral chi-square with 2 degrees of freedom and noncentrality s/V:

        log f = -log(2V) - (ŝ + s)/(2V) + log I0(√(ŝ·s)/V)

    Broadcasts over `s_hat` and `s`; negative arguments have density zero.
    """
    if not np.all(np.asarray(V) > 0):
        raise ValueError(f"Invalid variance {V}, must be positive.")
    s_hat = np.asarray(s_hat, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    inside = (s_hat >= 0) & (s >= 0)
    sh = np.where(inside, s_hat, 0.0)
    ss = np.where(inside, s, 0.0)
    out = (
        -np.log(2.0 * V)
        - (sh + ss) / (2.0 * V)
        + log_bessel_i0(np.sqrt(sh * ss) / V)
    )
    out = np.where(inside, out, -np.inf)
    return out if out.ndim else float(out)
