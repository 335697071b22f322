"""Frequency and damping from a free mechanical decay."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.stats import linregress

from ..errors import InsufficientDataError

MIN_PERIODS = 10.0


class Ringdown(NamedTuple):
    """Fitted decay of c(t) ~ exp(-(gamma/2 + i omega) t), rates in rad/s."""

    omega: float
    gamma: float
    omega_err: float
    gamma_err: float
    n_periods: float


def ringdown_estimate(traj, *, discard=None, floor=None) -> Ringdown:
    """Fit the phase and log-amplitude of ``c(t) - c_s`` linearly in time.

    Parameters
    ----------
    traj : Trajectory
    discard : float, optional
        Seconds dropped at the start; defaults to 10 / kappa_min (the
        optical transient), or nothing for a trajectory without light.
    floor : float, optional
        Amplitude below which samples are considered numerical noise.
        Defaults to 1e-9 of the initial signal plus 1e-12 of the static
        offset.

    Raises
    ------
    InsufficientDataError
        If fewer than 10 periods remain above the floor.
    """
    t = np.asarray(traj.times, dtype=float)
    x = np.asarray(traj.mech_amp, dtype=complex) - traj.mech_offset
    if discard is None:
        discard = 10.0 / traj.kappa_min if traj.kappa_min > 0 else 0.0
    keep = t >= t[0] + discard
    t, x = t[keep], x[keep]
    if len(t) < 3:
        raise InsufficientDataError("no samples left after the transient")
    amp = np.abs(x)
    if floor is None:
        floor = 1e-9 * amp[0] + 1e-12 * abs(traj.mech_offset)
    below = np.nonzero(amp <= floor)[0]
    if len(below):
        t, x, amp = t[: below[0]], x[: below[0]], amp[: below[0]]
    if len(t) < 3:
        raise InsufficientDataError("signal is below the numerical floor from the start")

    phase = np.unwrap(np.angle(x))
    fit_p = linregress(t, phase)
    omega = abs(fit_p.slope)
    n_periods = omega * (t[-1] - t[0]) / (2 * np.pi)
    if n_periods < MIN_PERIODS:
        raise InsufficientDataError(
            f"only {n_periods:.1f} mechanical periods above the floor (need {MIN_PERIODS:g})"
        )
    fit_a = linregress(t, np.log(amp))
    return Ringdown(
        omega=float(omega),
        gamma=float(-2.0 * fit_a.slope),
        omega_err=float(fit_p.stderr),
        gamma_err=float(2.0 * fit_a.stderr),
        n_periods=float(n_periods),
    )
