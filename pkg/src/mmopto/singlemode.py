"""Closed-form single-mode optomechanics in real arithmetic.

These expressions never build a matrix or call a linear solver, so they
serve as an independent reference for the multimode code path (N = 1 and
the decoupled limit) and as the "local single-mode" comparison far from a
crossing.
"""

import numpy as np


def photon_number(kappa, kappa_in, detuning, flux):
    """Intracavity photons for a drive detuned by ``detuning`` from the mode."""
    return kappa_in * flux / (0.25 * kappa**2 + detuning**2)


def self_energy(kappa, kappa_in, detuning, omega, flux, g):
    """Self-energy of one mode with single-phonon coupling ``g`` (rad/s).

    ``detuning`` is laser minus mode frequency.  Returns the complex
    self-energy; the optical spring is its real part and the optical
    damping ``-2 * imag``.
    """
    alpha2 = g**2 * photon_number(kappa, kappa_in, detuning, flux)
    q = 0.25 * kappa**2
    d_plus = q + (detuning + omega) ** 2
    d_minus = q + (detuning - omega) ** 2
    spring = alpha2 * ((detuning + omega) / d_plus + (detuning - omega) / d_minus)
    imag = -alpha2 * 0.5 * kappa * (1.0 / d_plus - 1.0 / d_minus)
    return spring + 1j * imag


def reflectance(kappa, kappa_in, detuning):
    """Reflected power fraction: 1 - kappa_in (kappa - kappa_in) / (kappa²/4 + Δ²)."""
    return 1.0 - kappa_in * (kappa - kappa_in) / (0.25 * kappa**2 + np.asarray(detuning) ** 2)


def dip_depth(kappa_in_ratio):
    """On-resonance dip depth 1 - (1 - 2 kappa_in/kappa)²."""
    return 1.0 - (1.0 - 2.0 * kappa_in_ratio) ** 2


def kappa_in_ratio_from_depth(depth):
    """Invert :func:`dip_depth` on the under-coupled branch (ratio <= 1/2)."""
    depth = np.clip(depth, 0.0, 1.0)
    return 0.5 * (1.0 - np.sqrt(1.0 - depth))
