"""Bounded least-squares fits of measured spring and damping curves."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from ..dynamics import sigma_array
from ..errors import BoundaryWarning, ConfigError, FitError
from ..model import DriveConfig, SystemModel
from ..units import MHZ_PER_NM, NM, UW

# internal fit units keep every parameter of order one
_UNITS = {"z_dis": NM, "power_in": UW, "slope_osc": MHZ_PER_NM}
_DEFAULT_BOUNDS = {"z_dis": (-50.0, 50.0), "power_in": (0.0, 1e5), "slope_osc": (-50.0, 50.0)}


@dataclass(frozen=True)
class DynamicsFit:
    """Fitted parameters (SI units) with standard errors.

    ``values`` and ``errors`` are keyed by the free-parameter names
    ("z_dis", "power_in", "slope_osc:<label>").
    """

    values: dict
    errors: dict
    cost: float
    residual_rms: float
    nfev: int
    model: SystemModel
    drive: DriveConfig
    z_dis: float


def _kind(name):
    kind = name.split(":", 1)[0]
    if kind not in _UNITS:
        raise ConfigError(f"unknown free parameter {name!r}", "free_params")
    if kind == "slope_osc" and ":" not in name:
        raise ConfigError("slope_osc needs a mode label, e.g. 'slope_osc:L'", "free_params")
    return kind


def _apply(model, drive, z_dis, names, values):
    for name, v in zip(names, values):
        kind = _kind(name)
        if kind == "z_dis":
            z_dis = v
        elif kind == "power_in":
            drive = drive.with_power(max(v, 0.0))
        else:
            model = model.replace_mode(name.split(":", 1)[1], slope_osc=v)
    return model, drive, z_dis


def _initial(model, drive, z_dis, name):
    kind = _kind(name)
    if kind == "z_dis":
        return z_dis
    if kind == "power_in":
        return drive.power_in
    return model.modes[model.index(name.split(":", 1)[1])].slope_osc


def fit_dynamics(measured, model: SystemModel, drive: DriveConfig, free_params, *, z_dis=0.0,
                 errors=None, bounds=None, max_nfev=2000) -> DynamicsFit:
    """Fit δω(Δ) and δγ(Δ) jointly by bounded nonlinear least squares.

    Parameters
    ----------
    measured : array_like, shape (n, 3)
        Rows of (Δ, δω, δγ) in rad/s.
    model, drive : SystemModel, DriveConfig
        Fixed parameters and starting values of the free ones.
    free_params : sequence of str
        Subset of "z_dis", "power_in", "slope_osc:<label>".
    z_dis : float
        Starting membrane position (m).
    errors : array_like, shape (n, 2), optional
        Standard deviations of (δω, δγ); residuals are then weighted by
        inverse variance.  Without them each series is scaled to unit RMS.
    bounds : dict, optional
        Per-name (low, high) in SI units; defaults are ±50 nm for z_dis,
        [0, 100 mW] for the power and ±50 MHz/nm (/2π) for slopes.

    Returns
    -------
    DynamicsFit
        Standard errors come from the Jacobian at the optimum, scaled by
        the residual variance when no ``errors`` are supplied.

    Raises
    ------
    FitError
        When the optimizer stops without convergence.
    """
    names = list(free_params)
    if not names:
        raise ConfigError("free_params must not be empty", "free_params")
    if len(set(names)) != len(names):
        raise ConfigError("free_params has duplicates", "free_params")
    data = np.asarray(measured, dtype=float)
    if data.ndim != 2 or data.shape[1] != 3 or len(data) < len(names) + 1:
        raise ConfigError("measured must be an (n, 3) array with n > number of free parameters", "measured")
    order = np.argsort(data[:, 0], kind="stable")
    data = data[order]
    det, dom, dgam = data.T
    if errors is not None:
        err = np.asarray(errors, dtype=float)[order]
        if err.shape != (len(data), 2) or np.any(err <= 0):
            raise ConfigError("errors must be an (n, 2) array of positive values", "errors")
        w_om, w_ga = 1.0 / err[:, 0], 1.0 / err[:, 1]
    else:
        rms_om = np.sqrt(np.mean(dom**2))
        rms_ga = np.sqrt(np.mean(dgam**2))
        w_om = np.full(len(det), 1.0 / rms_om if rms_om > 0 else 1.0)
        w_ga = np.full(len(det), 1.0 / rms_ga if rms_ga > 0 else 1.0)

    scale = np.array([_UNITS[_kind(n)] for n in names])
    lo, hi = [], []
    for n in names:
        b = (bounds or {}).get(n)
        if b is None:
            b = tuple(v * _UNITS[_kind(n)] for v in _DEFAULT_BOUNDS[_kind(n)])
        lo.append(b[0])
        hi.append(b[1])
    lo, hi = np.array(lo) / scale, np.array(hi) / scale
    x0 = np.array([_initial(model, drive, z_dis, n) for n in names]) / scale
    x0 = np.clip(x0, np.nextafter(lo, np.inf), np.nextafter(hi, -np.inf))
    omega_m = model.mech.omega_m

    def predict(x):
        m, dr, z = _apply(model, drive, z_dis, names, x * scale)
        if dr.photon_flux == 0:
            return np.zeros(len(det), complex)
        return sigma_array(m, z, det, omega_m, dr.photon_flux)

    def resid(x):
        s = predict(x)
        return np.concatenate([(s.real - dom) * w_om, (-2.0 * s.imag - dgam) * w_ga])

    res = least_squares(resid, x0, bounds=(lo, hi), method="trf", jac="3-point", x_scale=1.0,
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    if res.status <= 0:
        raise FitError(f"dynamics fit did not converge: {res.message}",
                       best_residual=float(np.linalg.norm(res.fun)), trace=res.message)
    x = res.x
    span = hi - lo
    for n, v, a, b, s in zip(names, x, lo, hi, span):
        tol = 1e-6 * (s if np.isfinite(s) else max(1.0, abs(v)))
        if v - a <= tol or b - v <= tol:
            warnings.warn(f"parameter {n!r} finished on its bound", BoundaryWarning, stacklevel=2)
    dof = max(res.fun.size - x.size, 1)
    s2 = 2.0 * res.cost / dof if errors is None else 1.0
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * s2
        std = np.sqrt(np.clip(np.diag(cov), 0, None)) * scale
    except np.linalg.LinAlgError:
        std = np.full(len(names), np.nan)
    values = dict(zip(names, (x * scale).tolist()))
    m, dr, z = _apply(model, drive, z_dis, names, x * scale)
    return DynamicsFit(
        values=values,
        errors=dict(zip(names, std.tolist())),
        cost=float(res.cost),
        residual_rms=float(np.sqrt(np.mean(res.fun**2))),
        nfev=int(res.nfev),
        model=m,
        drive=dr,
        z_dis=float(z),
    )
