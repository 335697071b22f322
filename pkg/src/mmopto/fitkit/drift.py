"""Linear drift of the mechanical frequency from forward/backward sweeps.

The same detuning visited twice (once per sweep direction) differs only
by the drift accumulated in between, so the frequency differences of the
shared detunings against the elapsed times give the drift rate.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import InsufficientDataError


class DriftModel(NamedTuple):
    """fm_backward - fm_forward = rate * elapsed + intercept (Hz/s, Hz)."""

    rate: float
    intercept: float
    rate_err: float
    n_pairs: int


class DriftResult(NamedTuple):
    corrected: np.ndarray
    model: DriftModel
    shared: np.ndarray


def _as_series(x, name):
    a = np.asarray(x, dtype=float)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"{name} must have rows (delta, time, fm)")
    return a


def shared_pairs(forward, backward, *, atol=1e-6):
    """Index pairs (i_forward, i_backward) of detunings present in both sweeps."""
    f = _as_series(forward, "forward")
    b = _as_series(backward, "backward")
    pairs = []
    for i, d in enumerate(f[:, 0]):
        j = np.nonzero(np.abs(b[:, 0] - d) <= atol * max(1.0, abs(d)))[0]
        if len(j):
            pairs.append((i, int(j[0])))
    return np.array(pairs, dtype=int).reshape(-1, 2)


def drift_subtract(forward, backward, *, atol=1e-6) -> DriftResult:
    """Fit the drift rate and remove it from the forward series.

    Parameters
    ----------
    forward, backward : array_like, shape (n, 3)
        Rows (Δ, t, f_m) in any consistent units (the CSV schema uses Hz
        and seconds).
    atol : float
        Relative tolerance for matching detunings between the sweeps.

    Returns
    -------
    DriftResult
        ``corrected`` is the forward series with ``rate * (t - t0)``
        subtracted, t0 being the first forward time; the backward series is
        only used for the fit.

    Raises
    ------
    InsufficientDataError
        With fewer than two shared detunings or no spread in elapsed time.
    """
    f = _as_series(forward, "forward")
    b = _as_series(backward, "backward")
    pairs = shared_pairs(f, b, atol=atol)
    if len(pairs) < 2:
        raise InsufficientDataError(f"need at least 2 detunings shared by both sweeps, found {len(pairs)}")
    elapsed = b[pairs[:, 1], 1] - f[pairs[:, 0], 1]
    diff = b[pairs[:, 1], 2] - f[pairs[:, 0], 2]
    if np.ptp(elapsed) <= 0:
        raise InsufficientDataError("shared detunings all have the same elapsed time; rate is undetermined")
    A = np.column_stack([elapsed, np.ones_like(elapsed)])
    coef, *_ = np.linalg.lstsq(A, diff, rcond=None)
    n = len(elapsed)
    if n > 2:
        s2 = np.sum((A @ coef - diff) ** 2) / (n - 2)
        rate_err = float(np.sqrt(s2 / np.sum((elapsed - elapsed.mean()) ** 2)))
    else:
        rate_err = float("nan")
    rate, intercept = map(float, coef)
    corrected = f.copy()
    corrected[:, 2] = f[:, 2] - rate * (f[:, 1] - f[0, 1])
    return DriftResult(corrected, DriftModel(rate, intercept, rate_err, n), pairs)


def correct(series, rate, t0):
    """Remove ``rate * (t - t0)`` from the frequency column of a series."""
    s = _as_series(series, "series").copy()
    s[:, 2] -= rate * (s[:, 1] - t0)
    return s
