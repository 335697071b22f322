"""Linearized optomechanical response of the multimode cavity.

The mechanical mode sees the optical field through the self-energy

    Σ[ω] = -i α† (χ_c[ω] - χ_c†[-ω]) α,    α = g_m a_0,

with g_m the diagonal matrix of single-phonon couplings.  Its real part
at ω = ω_m is the optical spring, ``-2 Im Σ`` the optical damping.  The
mechanical susceptibility is taken in the high-Q form, which is accurate
to O(1/Q).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, ValidityWarning
from .model import DriveConfig, SystemModel, _inverse_susceptibility, steady_state

LOW_Q = 100.0


@dataclass(frozen=True)
class SelfEnergyResult:
    """Σ at one frequency with the derived spring and damping (rad/s)."""

    sigma: complex

    @property
    def delta_omega(self):
        return self.sigma.real

    @property
    def delta_gamma(self):
        return -2.0 * self.sigma.imag


class CouplingVector(NamedTuple):
    alpha: np.ndarray


def _check_q(model):
    q = model.mech.quality_factor
    if q < LOW_Q:
        warnings.warn(
            f"mechanical Q = {q:.3g} < {LOW_Q:g}; the high-Q self-energy is unreliable",
            ValidityWarning,
            stacklevel=3,
        )


def coupling_vector(model: SystemModel, drive: DriveConfig, z_dis: float) -> CouplingVector:
    """Total optomechanical coupling α = g_m a_0 (rad/s per unit dimensionless z)."""
    return CouplingVector(model.g_m * steady_state(model, drive, z_dis))


def sigma_array(model: SystemModel, z_dis, detunings, omega, flux):
    """Self-energy for arrays of detunings (and/or z) at a fixed photon flux.

    Vectorized core shared by the sweep and fitting routines; returns a
    complex array with the broadcast shape of ``z_dis`` and ``detunings``.
    """
    s = model.sqrt_kappa_in.astype(complex)
    a0_inv = _inverse_susceptibility(model, z_dis, detunings, 0.0)
    a0 = np.linalg.solve(a0_inv, np.broadcast_to(s, a0_inv.shape[:-1])[..., None])[..., 0]
    alpha = model.g_m * a0 * np.sqrt(flux)
    plus = _quad(_inverse_susceptibility(model, z_dis, detunings, omega), alpha)
    minus = _quad(_inverse_susceptibility(model, z_dis, detunings, -omega), alpha)
    # α†χ†[-ω]α is the conjugate of α†χ[-ω]α
    return -1j * (plus - np.conj(minus))


def _quad(a_inv, alpha):
    x = np.linalg.solve(a_inv, alpha[..., None])[..., 0]
    return np.sum(np.conj(alpha) * x, axis=-1)


def self_energy(model: SystemModel, drive: DriveConfig, z_dis: float, omega: float | None = None) -> SelfEnergyResult:
    """Self-energy at ``omega`` (defaults to the bare mechanical frequency)."""
    _check_q(model)
    if omega is None:
        omega = model.mech.omega_m
    if drive.photon_flux == 0:
        return SelfEnergyResult(0j)
    sigma = sigma_array(model, z_dis, drive.detuning, omega, drive.photon_flux)
    return SelfEnergyResult(complex(sigma))


def spring_damping_sweep(model: SystemModel, drive: DriveConfig, z_dis: float, detunings) -> list:
    """Self-energy at ω_m for every detuning of a sorted grid."""
    d = np.asarray(detunings, dtype=float)
    if d.ndim != 1 or not np.all(np.isfinite(d)):
        raise ConfigError("detunings must be a finite 1-D grid", "detunings")
    if np.any(np.diff(d) < 0):
        raise ConfigError("detunings must be sorted", "detunings")
    _check_q(model)
    if drive.photon_flux == 0:
        return [SelfEnergyResult(0j) for _ in d]
    sig = sigma_array(model, z_dis, d, model.mech.omega_m, drive.photon_flux)
    return [SelfEnergyResult(complex(x)) for x in sig]


def sweep_table(detunings, results):
    """Plot-ready columns (Δ, δω/2π, δγ/2π), all in Hz."""
    d = np.asarray(detunings, dtype=float)
    dom = np.array([r.delta_omega for r in results])
    dgam = np.array([r.delta_gamma for r in results])
    return np.column_stack([d, dom, dgam]) / (2 * np.pi)


class PsdResult(NamedTuple):
    """Brownian displacement spectrum.

    ``psd`` is in units of z_zpf² per Hz, normalized so that the bare
    oscillator integrates (over ordinary frequency) to n_th; multiply by
    ``z_zpf**2`` for m²/Hz.  Points where the dressed linewidth is not
    positive are ``nan`` and flagged in ``unstable``.
    """

    omegas: np.ndarray
    psd: np.ndarray
    unstable: np.ndarray

    @property
    def any_unstable(self):
        return bool(self.unstable.any())


def brownian_psd(model: SystemModel, drive: DriveConfig, z_dis: float, omegas) -> PsdResult:
    """Thermal displacement spectrum dressed by the optical self-energy."""
    mech = model.mech
    _check_q(model)
    w = np.asarray(omegas, dtype=float)
    if drive.photon_flux > 0:
        sig = sigma_array(model, z_dis, drive.detuning, w, drive.photon_flux)
    else:
        sig = np.zeros_like(w, dtype=complex)
    width = mech.gamma_m - 2.0 * sig.imag
    unstable = width <= 0
    chi_inv = 0.5 * mech.gamma_m + 1j * (mech.omega_m - w) + 1j * sig
    psd = mech.n_th * mech.gamma_m / np.abs(chi_inv) ** 2
    # per unit ordinary frequency: integral over f of gamma |chi|² is 1
    psd = np.where(unstable, np.nan, psd)
    return PsdResult(w, psd, unstable)


def modulation_response(model: SystemModel, drive: DriveConfig, z_dis: float) -> float:
    """Amplitude of the mechanical-frequency modulation, β |δω| (rad/s).

    δω is linear in the drive power, so a power modulation of relative
    depth β modulates the mechanical frequency by β |δω| to first order.
    """
    if drive.modulation is None:
        raise ConfigError("modulation_response needs drive.modulation", "drive.modulation")
    beta = drive.modulation.depth
    return beta * abs(self_energy(model, drive, z_dis).delta_omega)


def modulation_response_sweep(model: SystemModel, drive: DriveConfig, z_dis: float, detunings):
    if drive.modulation is None:
        raise ConfigError("modulation_response needs drive.modulation", "drive.modulation")
    res = spring_damping_sweep(model, drive, z_dis, detunings)
    return drive.modulation.depth * np.abs([r.delta_omega for r in res])


def photon_number(model: SystemModel, drive: DriveConfig, z_dis: float) -> float:
    """Total intracavity photon number Σ|a_n|²."""
    return float(np.sum(np.abs(steady_state(model, drive, z_dis)) ** 2))
