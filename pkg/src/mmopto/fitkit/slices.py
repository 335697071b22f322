"""Lorentzian dips on a sinusoidal baseline, fitted one reflection slice at a time."""

from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.optimize import least_squares
from scipy.signal import find_peaks, peak_widths

from ..errors import DegeneracyWarning, FitError
from ..singlemode import kappa_in_ratio_from_depth

SMOOTH_WINDOW = 5
MAX_NFEV = 2000
N_PERIOD_TRIALS = 80
N_STARTS = 4


class Peak(NamedTuple):
    center: float
    fwhm: float
    depth: float


class Background(NamedTuple):
    """offset + amplitude * sin(2π x / period + phase)"""

    amplitude: float
    period: float
    phase: float
    offset: float

    def __call__(self, x):
        return self.offset + self.amplitude * np.sin(2 * np.pi * np.asarray(x) / self.period + self.phase)


class SliceFitResult(NamedTuple):
    """Fitted dips (sorted by center) and baseline of one slice.

    ``depth`` is the dip depth in reflectance units; ``goodness`` the
    residual 2-norm.  With a baseline offset of 1 the input coupling of a
    dip follows from ``kappa_in = fwhm * (1 - sqrt(1 - depth)) / 2``
    (under-coupled branch), see :meth:`kappa_in`.
    """

    peaks: tuple
    background: Background
    goodness: float

    def kappa_in(self, k):
        p = self.peaks[k]
        return p.fwhm * float(kappa_in_ratio_from_depth(p.depth / self.background.offset))


def _model(x, p, n_peaks, with_bg):
    off = p[3 * n_peaks]
    y = np.full_like(x, off)
    if with_bg:
        amp, per, ph = p[3 * n_peaks + 1: 3 * n_peaks + 4]
        y = y + amp * np.sin(2 * np.pi * x / per + ph)
    for k in range(n_peaks):
        c, w, d = p[3 * k: 3 * k + 3]
        hw2 = 0.25 * w * w
        y = y - d * hw2 / ((x - c) ** 2 + hw2)
    return y


def _noise_level(y):
    # robust white-noise estimate from second differences
    d2 = np.diff(y, 2)
    return 1.4826 * np.median(np.abs(d2 - np.median(d2))) / np.sqrt(6.0)


def initial_guess(x, y, n_peaks):
    """Peak centers, widths and depths from the smoothed slice.

    Centers are the deepest local minima of a 5-sample moving average,
    widths the half-depth widths of those minima and the baseline the
    median of the slice.
    """
    ys = uniform_filter1d(y, SMOOTH_WINDOW, mode="nearest")
    offset = float(np.median(y))
    noise = _noise_level(y)
    prominence = max(5.0 * noise / np.sqrt(SMOOTH_WINDOW), 1e-9)
    idx, props = find_peaks(-ys, prominence=prominence)
    if len(idx) == 0:
        raise FitError("no dips found in slice (flat input)", best_residual=float(np.linalg.norm(y - offset)))
    order = np.argsort(props["prominences"])[::-1][:n_peaks]
    idx = np.sort(idx[order])
    dx = float(np.median(np.diff(x)))
    widths = peak_widths(-ys, idx, rel_height=0.5)[0] * dx
    peaks = []
    for i, w in zip(idx, widths):
        depth = max(offset - float(y[i]), prominence)
        peaks.append(Peak(float(x[i]), float(max(w, 2 * dx)), depth))
    while len(peaks) < n_peaks:
        # fewer resolved minima than requested: split the widest dip
        k = int(np.argmax([p.fwhm for p in peaks]))
        p = peaks.pop(k)
        peaks[k:k] = [Peak(p.center - p.fwhm / 4, p.fwhm / 2, p.depth), Peak(p.center + p.fwhm / 4, p.fwhm / 2, p.depth)]
    return peaks, offset


def _background_guesses(x, resid, peaks, n_best=N_STARTS):
    """Candidate sinusoids (amplitude, period, phase) from a period scan.

    Samples within 1.5 linewidths of a dip are masked; for every trial
    period the amplitude and phase follow from linear least squares.  The
    local minima of the scan cost, best first, are returned as starting
    points for the nonlinear fit.
    """
    mask = np.ones(len(x), bool)
    for p in peaks:
        mask &= np.abs(x - p.center) > 1.5 * p.fwhm
    if mask.sum() < 8:
        mask[:] = True
    xm, rm = x[mask], resid[mask]
    span = x[-1] - x[0]
    dx = span / (len(x) - 1)
    periods = np.geomspace(4 * dx, 2 * span, N_PERIOD_TRIALS)
    costs, params = [], []
    for period in periods:
        th = 2 * np.pi * xm / period
        A = np.column_stack([np.ones_like(xm), np.sin(th), np.cos(th)])
        coef, *_ = np.linalg.lstsq(A, rm, rcond=None)
        costs.append(float(np.sum((A @ coef - rm) ** 2)))
        # a sin + b cos = R sin(θ + ph)
        params.append((float(np.hypot(coef[1], coef[2])), float(period),
                       float(np.mod(np.arctan2(coef[2], coef[1]), 2 * np.pi))))
    costs = np.asarray(costs)
    padded = np.concatenate([[np.inf], costs, [np.inf]])
    minima = [k for k in range(len(costs)) if padded[k + 1] <= padded[k] and padded[k + 1] <= padded[k + 2]]
    minima.sort(key=lambda k: costs[k])
    return [params[k] for k in minima[:n_best]]


def fit_slice(detunings, reflect_row, n_peaks, *, background=True) -> SliceFitResult:
    """Least-squares fit of ``n_peaks`` inverted Lorentzians plus a sinusoid.

    Parameters
    ----------
    detunings : array_like
        Sorted abscissa (any frequency unit; results are in the same unit).
    reflect_row : array_like
        Reflectance values.
    n_peaks : int
        1, 2 or 3.
    background : bool
        Fit the sinusoidal baseline; with False only a constant offset.

    Raises
    ------
    FitError
        For a slice without dips or when the optimizer does not converge.
    """
    x = np.asarray(detunings, dtype=float)
    y = np.asarray(reflect_row, dtype=float)
    if n_peaks not in (1, 2, 3):
        raise ValueError("n_peaks must be 1, 2 or 3")
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("detunings and reflect_row must be 1-D of equal length")
    if len(x) < 8 * n_peaks:
        raise ValueError(f"need at least {8 * n_peaks} samples for {n_peaks} peaks")
    if np.any(np.diff(x) <= 0):
        raise ValueError("detunings must be strictly increasing")

    peaks, offset = initial_guess(x, y, n_peaks)
    span = x[-1] - x[0]
    dx = span / (len(x) - 1)
    p0, lo, hi = [], [], []
    for p in peaks:
        p0 += [p.center, p.fwhm, min(p.depth, 1.0)]
        lo += [x[0], 0.5 * dx, 0.0]
        hi += [x[-1], span, 1.0]
    p0 += [offset]
    lo += [-np.inf]
    hi += [np.inf]
    starts = [np.array(p0)]
    if background:
        resid0 = y - _model(x, np.array(p0), n_peaks, False)
        starts = [np.array(p0 + list(g)) for g in _background_guesses(x, resid0, peaks)]
        lo += [0.0, 2 * dx, -np.inf]
        hi += [np.inf, 2 * span, np.inf]

    def resid(p):
        return _model(x, p, n_peaks, background) - y

    res = None
    for start in starts:
        start = np.clip(start, np.nextafter(lo, np.inf), np.nextafter(hi, -np.inf))
        trial = least_squares(resid, start, bounds=(lo, hi), method="trf", jac="3-point",
                              x_scale="jac", max_nfev=MAX_NFEV * len(start), xtol=1e-12, ftol=1e-12)
        if trial.status > 0 and (res is None or trial.cost < res.cost):
            res = trial
        elif res is None and trial.status <= 0:
            failed = trial
    if res is None:
        raise FitError(f"slice fit did not converge: {failed.message}",
                       best_residual=float(np.linalg.norm(failed.fun)), trace=failed.message)
    p = res.x
    out = sorted((Peak(*map(float, p[3 * k: 3 * k + 3])) for k in range(n_peaks)), key=lambda q: q.center)
    off = float(p[3 * n_peaks])
    if background:
        amp, per, ph = map(float, p[3 * n_peaks + 1:])
        bg = Background(amp, per, float(np.mod(ph, 2 * np.pi)), off)
    else:
        bg = Background(0.0, float(span), 0.0, off)
    noise = _noise_level(y)
    if max(q.depth for q in out) <= 3.0 * max(noise, 1e-12):
        raise FitError("fitted dips are not above the noise (flat input)",
                       best_residual=float(np.linalg.norm(res.fun)))
    for a, b in zip(out, out[1:]):
        if b.center - a.center < 0.25 * max(a.fwhm, b.fwhm):
            warnings.warn(
                f"dips at {a.center:.6g} and {b.center:.6g} are closer than a quarter linewidth",
                DegeneracyWarning, stacklevel=2,
            )
    return SliceFitResult(tuple(out), bg, float(np.linalg.norm(res.fun)))
