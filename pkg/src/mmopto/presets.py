"""Parameter sets of the membrane-in-the-middle device (laboratory units).

Values are per 2π: kappa in MHz, input couplings in kHz, slopes in
MHz/nm, tunneling in MHz.  The splitting ``sigma_mhz`` between the two
near-degenerate triplet modes is not part of the published table; the
default places the second crossing about 2.7 nm from the first.
"""

from __future__ import annotations

from .model import CouplingTerm, MechanicalOscillator, OpticalMode, SystemModel, DriveConfig
from .units import KHZ, MHZ, MHZ_PER_NM, NG, NM, TWO_PI, UW

MECH = dict(omega_m_khz=354.6, q=1e5, mass_eff_ng=43.0, temperature_k=0.5)
WAVELENGTH_NM = 1064.0
FIBER_EFFICIENCY = 0.6

# columns of the system-parameter table; where the table leaves slope_osc
# as a fit parameter (crossing III) the fitted values are used
TABLE = {
    "fig2": dict(
        slope_dis=(1.87, -1.77, -1.77), slope_osc=(1.40, -1.46, -0.65),
        t=(1.57, 0.76), phi=(1.9, 1.1),
        kappa=(1.0, 1.3, 1.3), kappa_in_khz=(74.0, 7.0, 4.0), power_uw=40.0,
    ),
    "I": dict(
        slope_dis=(2.13, -1.82), slope_osc=(1.56, -1.66),
        t=(4.57,), phi=(1.6,),
        kappa=(1.0, 1.3), kappa_in_khz=(46.8, 4.7), power_uw=80.0,
    ),
    "II": dict(
        slope_dis=(1.87, -1.77, -1.77), slope_osc=(1.40, -1.46, -0.65),
        t=(1.57, 0.76), phi=(1.9, 1.1),
        kappa=(1.0, 1.3, 1.3), kappa_in_khz=(74.0, 7.0, 4.0), power_uw=80.0,
    ),
    "III": dict(
        slope_dis=(1.87, -1.77, -1.77), slope_osc=(1.26, -1.46, -0.62),
        t=(1.57, 0.76), phi=(1.9, 1.1),
        kappa=(1.0, 1.3, 1.3), kappa_in_khz=(74.0, 7.0, 4.0), power_uw=80.0,
    ),
}

LABELS = ("L", "R1", "R2")


def mechanics(q=None, omega_m_khz=None, mass_eff_ng=None, temperature_k=None):
    q = MECH["q"] if q is None else q
    omega_m = (MECH["omega_m_khz"] if omega_m_khz is None else omega_m_khz) * KHZ
    return MechanicalOscillator(
        omega_m=omega_m,
        gamma_m=omega_m / q,
        mass_eff=(MECH["mass_eff_ng"] if mass_eff_ng is None else mass_eff_ng) * NG,
        temperature=MECH["temperature_k"] if temperature_k is None else temperature_k,
    )


def table_model(column="fig2", n_modes=None, sigma_mhz=-10.0, mech=None, crossing="R1"):
    """Model built from one column of the parameter table.

    ``n_modes=2`` keeps the singlet L and the triplet mode forming the
    requested ``crossing`` ("R1" or "R2"), each as an isolated crossing at
    z = 0.  With three modes R1 crosses L at z = 0 and R2 is offset by
    ``sigma_mhz``.
    """
    p = TABLE[column]
    n_avail = len(p["slope_dis"])
    n_modes = n_avail if n_modes is None else n_modes
    if n_modes > n_avail:
        raise ValueError(f"column {column!r} has only {n_avail} modes")
    mech = mechanics() if mech is None else mech
    if n_modes == 2 and crossing == "R2":
        idx = (0, 2)
        pairs = [((LABELS[0], LABELS[2]), p["t"][1], p["phi"][1])]
    else:
        idx = tuple(range(n_modes))
        pairs = [((LABELS[0], LABELS[k]), p["t"][k - 1], p["phi"][k - 1]) for k in range(1, n_modes)]
    modes = []
    for k in idx:
        offset = sigma_mhz * MHZ if (k == 2 and n_modes == 3) else 0.0
        modes.append(OpticalMode(
            LABELS[k],
            kappa=p["kappa"][k] * MHZ,
            kappa_in=p["kappa_in_khz"][k] * KHZ,
            slope_dis=p["slope_dis"][k] * MHZ_PER_NM,
            slope_osc=p["slope_osc"][k] * MHZ_PER_NM,
            offset=offset,
        ))
    couplings = [CouplingTerm(pair, t * MHZ, phi) for pair, t, phi in pairs]
    return SystemModel(tuple(modes), tuple(couplings), mech,
                       crossing_frequency=TWO_PI * 299792458.0 / (WAVELENGTH_NM * NM))


def table_drive(column="fig2", detuning=0.0, power_uw=None, modulation=None):
    p = TABLE[column]
    return DriveConfig(
        detuning=detuning,
        power_in=(p["power_uw"] if power_uw is None else power_uw) * UW,
        wavelength=WAVELENGTH_NM * NM,
        fiber_efficiency=FIBER_EFFICIENCY,
        modulation=modulation,
    )


def symmetric_crossing(t_mhz=2.0, slope=2.0, slope_osc=1.5, kappa_mhz=1.0, kappa_in_khz=100.0,
                       phi=None, mech=None):
    """Idealized crossing: equal linewidths and couplings, opposite slopes, φ = π/2."""
    from math import pi

    phi = pi / 2 if phi is None else phi
    mech = mechanics() if mech is None else mech
    modes = (
        OpticalMode("A", kappa_mhz * MHZ, kappa_in_khz * KHZ, slope * MHZ_PER_NM, slope_osc * MHZ_PER_NM),
        OpticalMode("B", kappa_mhz * MHZ, kappa_in_khz * KHZ, -slope * MHZ_PER_NM, -slope_osc * MHZ_PER_NM),
    )
    return SystemModel(modes, (CouplingTerm(("A", "B"), t_mhz * MHZ, phi),), mech)


__all__ = ["TABLE", "table_model", "table_drive", "symmetric_crossing", "mechanics"]
