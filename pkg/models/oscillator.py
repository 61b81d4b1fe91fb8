"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.integrate import solve_ivp

NUM_PARAMETERS = 9
HILL_EXPONENT = 8


@dataclass(frozen=True, eq=False)
class ThetaVector:
    """
    The nine rate and threshold parameters of the oscillator plus the fixed
    transcription rate `c`.

    Args:
        theta (array-like): θ₁..θ₉. Rates may be zero (a switched-off
            reaction); the thresholds θ₈ and θ₉ must be strictly positive.
        c (float): transcription rate, positive.
    """

    theta: np.ndarray
    c: float = 1.0

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64)
        if theta.shape != (NUM_PARAMETERS,):
            raise ValueError(
                f"Expected {NUM_PARAMETERS} parameters, got shape {theta.shape}"
            )
        if not np.all(np.isfinite(theta)) or not math.isfinite(self.c):
            raise ValueError(f"Parameters must be finite, got {theta}, c={self.c}")
        if np.any(theta < 0) or theta[7] <= 0 or theta[8] <= 0 or self.c <= 0:
            raise ValueError(
                f"Invalid parameters {theta} (c={self.c}): rates must be "
                "non-negative, thresholds θ8, θ9 and c positive."
            )
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "c", float(self.c))

    def __getitem__(self, j):
        """1-based access, θ[1]..θ[9]."""
        return self.theta[j - 1]

    def __eq__(self, other):
        return (
            isinstance(other, ThetaVector)
            and self.c == other.c
            and np.array_equal(self.theta, other.theta)
        )

    def __hash__(self):
        return hash((self.theta.tobytes(), self.c))

    def replace(self, j, value):
        theta = self.theta.copy()
        theta[j - 1] = value
        return ThetaVector(theta, self.c)


@dataclass(frozen=True)
class SystemState:
    y: float
    w: float
    z: float

    def as_array(self):
        return np.array([self.y, self.w, self.z], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Trajectory:
    values: np.ndarray
    dt_out: float = 1.0
    transient_dropped: float = 0.0

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class IntegrationFailure:
    reason: str

    def __bool__(self):
        return False


@dataclass(frozen=True)
class OscillationStatus:
    oscillating: bool
    peak_to_trough: float


class _Overflow(Exception):
    pass


def _rhs(x, theta, c, eq3_exponent):
    y, w, z = x
    t1, t2, t3, t4, t5, t6, t7, t8, t9 = theta
    transcription = c / (1.0 + (z / t8) ** HILL_EXPONENT)
    z4 = z**4
    phosphorylation = t7 * w * z4
    to_z = phosphorylation / (t9**4 + z4)
    from_w = to_z if eq3_exponent == 4 else phosphorylation / (t9**eq3_exponent + z4)
    dy = transcription - t1 * y
    dw = t2 * y - (t3 + t4) * w + t6 * z - to_z
    dz = t4 * w - (t5 + t6) * z + from_w
    return dy, dw, dz


def evaluate_rhs(state, theta, eq3_exponent=4):
    """
    Right-hand side (dy/dt, dw/dt, dz/dt) of the oscillator at `state`.

    The Hill denominator of the w -> z flux in dw/dt uses θ₉⁴; in dz/dt it
    uses θ₉ raised to `eq3_exponent` (4 keeps the flux symmetric, 2 is the
    asymmetric variant).
    """
    if eq3_exponent not in (2, 4):
        raise ValueError(f"Invalid eq3_exponent {eq3_exponent}, must be in [2, 4].")
    x = state.as_array() if isinstance(state, SystemState) else np.asarray(state)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"State must be finite, got {x}")
    return _rhs(x, theta.theta, theta.c, eq3_exponent)


def integrate(
    theta,
    ic=SystemState(0.1, 0.1, 0.1),
    transient=200.0,
    num_points=66,
    dt_out=1.0,
    atol=1e-8,
    rtol=1e-8,
    eq3_exponent=4,
    overflow_guard=1e12,
):
    """
    Integrates the oscillator with an adaptive Runge-Kutta 4(5) scheme and
    records y at `num_points` times spaced `dt_out` apart, starting after
    `transient` hours.

    Returns:
        A `Trajectory`, or an `IntegrationFailure` when the state leaves the
        finite region bounded by `overflow_guard` or the solver gives up.
    """
    if transient < 0:
        raise ValueError(f"Invalid transient {transient}, must be non-negative.")
    if num_points < 2:
        raise ValueError(f"Invalid num_points {num_points}, must be at least 2.")
    if dt_out <= 0:
        raise ValueError(f"Invalid dt_out {dt_out}, must be positive.")
    if eq3_exponent not in (2, 4):
        raise ValueError(f"Invalid eq3_exponent {eq3_exponent}, must be in [2, 4].")
    x0 = ic.as_array() if isinstance(ic, SystemState) else np.asarray(ic, dtype=float)
    t_eval = transient + dt_out * np.arange(num_points)
    params = theta.theta
    c = theta.c

    def fun(t, x):
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > overflow_guard):
            raise _Overflow()
        return _rhs(x, params, c, eq3_exponent)

    try:
        sol = solve_ivp(
            fun,
            (0.0, t_eval[-1]),
            x0,
            method="RK45",
            t_eval=t_eval,
            atol=atol,
            rtol=rtol,
        )
    except _Overflow:
        return IntegrationFailure("overflow")
    if sol.status != 0:
        return IntegrationFailure(sol.message)
    states = sol.y
    if (
        states.shape[1] != num_points
        or not np.all(np.isfinite(states))
        or np.any(np.abs(states) > overflow_guard)
    ):
        return IntegrationFailure("overflow")
    return Trajectory(
        values=states[0].copy(), dt_out=float(dt_out), transient_dropped=float(transient)
    )


def integrate_with(theta, ode_config, num_points, transient=None):
    """
    `integrate` with the settings of an `OdeConfig`.
    """
    return integrate(
        theta,
        ic=SystemState(*ode_config.ic),
        transient=ode_config.transient if transient is None else transient,
        num_points=num_points,
        dt_out=ode_config.dt_out,
        atol=ode_config.atol,
        rtol=ode_config.rtol,
        eq3_exponent=ode_config.hill_denominator_exponent_eq3,
        overflow_guard=ode_config.overflow_guard,
    )


def detect_oscillation(traj, amp_tol, tail_fraction=0.5):
    """
    Peak-to-trough amplitude of the trailing `tail_fraction` of the recorded
    window; the trajectory oscillates when that amplitude exceeds `amp_tol`.

    The default of 0.5 inspects the second half of the window. On the
    66-point output grid that is 33 points, a full cycle for any period up to
    33 hours, so a sustained cycle shows its full amplitude while damped
    transients have had the first half to decay. At least two points are
    always used.
    """
    if isinstance(traj, IntegrationFailure):
        return OscillationStatus(False, float("nan"))
    values = np.asarray(traj.values if isinstance(traj, Trajectory) else traj)
    start = int(len(values) * (1.0 - tail_fraction))
    tail = values[min(start, len(values) - 2):]
    amplitude = float(np.max(tail) - np.min(tail))
    return OscillationStatus(amplitude > amp_tol, amplitude)
