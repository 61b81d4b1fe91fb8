"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.

System features computed from a parameter vector through the ODE. A
feature returns NaN when the system fails to integrate or does not
oscillate.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from config import OdeConfig
from criterions.spectral import harmonic_coefficients, max_harmonics, power_spectrum
from models.oscillator import IntegrationFailure, detect_oscillation, integrate_with


@dataclass(frozen=True)
class FeatureSettings:
    ode: OdeConfig = field(default_factory=OdeConfig)
    window_cycles: int = 10
    nominal_period: float = 22.0

    @classmethod
    def from_config(cls, cfg):
        return cls(
            ode=cfg.ode,
            window_cycles=cfg.intervention.window_cycles,
            nominal_period=cfg.intervention.nominal_period,
        )

    @property
    def num_points(self):
        return int(round(self.window_cycles * self.nominal_period / self.ode.dt_out))


def fit_power(y, f):
    """
    Sum of squares explained by a least-squares sinusoid (with offset) at
    `f` cycles per window, the generalized Lomb-Scargle power. For a pure
    tone it peaks exactly at the tone's frequency.
    """
    y = np.asarray(y, dtype=np.float64)
    angles = 2.0 * np.pi * f * np.arange(len(y)) / len(y)
    design = np.stack([np.ones(len(y)), np.cos(angles), np.sin(angles)], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = y - design @ coef
    return float(np.dot(y - y.mean(), y - y.mean()) - np.dot(residual, residual))


def dominant_period(values, dt_out=1.0, grid_points=41):
    """
    Length of the dominant cycle of a sampled series. The strongest
    harmonic is located on the integer frequency grid and interpolated with
    a parabola through its neighbours; the sinusoid-fit power is then
    scanned within one bin of it and maximized by a bounded scalar search
    around the best scan point.

    Returns:
        The period in the time unit of `dt_out`, NaN for a flat series.
    """
    y = np.asarray(values, dtype=np.float64)
    y = y - y.mean()
    T = len(y)
    K = max_harmonics(T)
    s = power_spectrum(harmonic_coefficients(y, K)).s
    if not np.any(s > 0):
        return float("nan")
    k = int(np.argmax(s)) + 1
    f = float(k)
    if 1 < k < K:
        left, centre, right = s[k - 2], s[k - 1], s[k]
        denom = left - 2.0 * centre + right
        if denom < 0:
            f = k + 0.5 * (left - right) / denom
    lo, hi = max(k - 1.0, 0.5), min(k + 1.0, T / 2.0)
    grid = np.append(np.linspace(lo, hi, grid_points), f)
    powers = np.array([fit_power(y, x) for x in grid])
    best = float(grid[np.argmax(powers)])
    width = (hi - lo) / (grid_points - 1)
    res = minimize_scalar(
        lambda x: -fit_power(y, x),
        bounds=(max(best - width, lo), min(best + width, hi)),
        method="bounded",
        options={"xatol": 1e-9},
    )
    if res.success and fit_power(y, res.x) >= powers.max():
        best = float(res.x)
    return T * dt_out / best


def period_of(theta, settings):
    """
    Period in hours of the model output for `theta` (a `ThetaVector`) over
    a window of `settings.window_cycles` nominal cycles after the transient.
    """
    traj = integrate_with(theta, settings.ode, settings.num_points)
    if isinstance(traj, IntegrationFailure):
        return float("nan")
    if not detect_oscillation(traj, settings.ode.amp_tol).oscillating:
        return float("nan")
    return dominant_period(traj.values, traj.dt_out)


def main_frequency(theta, settings):
    """
    Frequency of the dominant cycle in cycles per hour.
    """
    return 1.0 / period_of(theta, settings)


FEATURES = {
    "period": period_of,
    "frequency": main_frequency,
}


def get_feature(name):
    if name not in FEATURES:
        raise ValueError(
            f"Unknown feature {name}, must be in [{', '.join(sorted(FEATURES))}]."
        )
    return FEATURES[name]
