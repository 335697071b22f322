"""Coupled-mode cavity model: domain types, the mode matrix and its
linear-response quantities.

Everything here works in a frame rotating at the crossing frequency, so a
mode whose diagonal entry is zero sits exactly at the crossing.  The
driving laser is described by its detuning from that frequency.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from math import pi, sqrt
from typing import NamedTuple, Optional

import numpy as np
from scipy import constants as const
from scipy.optimize import minimize_scalar

from .errors import ConfigError, CrossingError

HBAR = const.hbar
C_LIGHT = const.c
K_B = const.k

TWO_PI = 2.0 * pi


@dataclass(frozen=True)
class OpticalMode:
    """One cavity basis mode.

    Attributes
    ----------
    label : str
    kappa : float
        Total energy decay rate (rad/s).
    kappa_in : float
        Decay rate through the driven input port (rad/s), ``<= kappa``.
    slope_dis : float
        Detuning per unit static membrane displacement (rad/s per m).
    slope_osc : float
        Detuning per unit oscillatory displacement (rad/s per m).
    offset : float
        Diagonal detuning at zero displacement (rad/s).
    """

    label: str
    kappa: float
    kappa_in: float
    slope_dis: float = 0.0
    slope_osc: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if not self.label:
            raise ConfigError("mode label must be non-empty", "label")
        if not np.isfinite(self.kappa) or self.kappa <= 0:
            raise ConfigError(f"kappa must be positive, got {self.kappa!r}", "kappa")
        if not np.isfinite(self.kappa_in) or self.kappa_in < 0:
            raise ConfigError(f"kappa_in must be >= 0, got {self.kappa_in!r}", "kappa_in")
        if self.kappa_in > self.kappa:
            raise ConfigError(
                f"kappa_in ({self.kappa_in!r}) exceeds kappa ({self.kappa!r})", "kappa_in"
            )
        for name in ("slope_dis", "slope_osc", "offset"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError("must be finite", name)

    @property
    def kappa_vac(self):
        return self.kappa - self.kappa_in


@dataclass(frozen=True)
class CouplingTerm:
    """Membrane-mediated tunneling ``t * exp(i phi)`` between two modes.

    The entry ``(i, j)`` of the mode matrix is ``t e^{i phi}``; entry
    ``(j, i)`` holds the conjugate.  ``phi`` is stored in ``[0, 2π)``.
    """

    pair: tuple
    t: float
    phi: float = 0.0

    def __post_init__(self):
        pair = tuple(self.pair)
        if len(pair) != 2:
            raise ConfigError("coupling pair must name exactly two modes", "pair")
        if pair[0] == pair[1]:
            raise ConfigError(f"coupling pair {pair} couples a mode to itself", "pair")
        if not np.isfinite(self.t) or self.t < 0:
            raise ConfigError(f"t must be >= 0, got {self.t!r}", "t")
        if not np.isfinite(self.phi):
            raise ConfigError("phi must be finite", "phi")
        object.__setattr__(self, "pair", pair)
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    @property
    def amplitude(self):
        return self.t * np.exp(1j * self.phi)


@dataclass(frozen=True)
class MechanicalOscillator:
    """Membrane mode: frequency, intrinsic linewidth, effective mass, bath temperature."""

    omega_m: float
    gamma_m: float
    mass_eff: float
    temperature: float = 0.0

    def __post_init__(self):
        for name in ("omega_m", "gamma_m", "mass_eff"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"must be positive, got {value!r}", name)
        if not np.isfinite(self.temperature) or self.temperature < 0:
            raise ConfigError(f"must be >= 0, got {self.temperature!r}", "temperature")
        if not (np.isfinite(self.z_zpf) and self.z_zpf > 0):
            raise ConfigError("zero-point amplitude is not finite", "mass_eff")

    @property
    def z_zpf(self):
        """Zero-point displacement sqrt(hbar / (2 m omega_m)) in meters."""
        return sqrt(HBAR / (2.0 * self.mass_eff * self.omega_m))

    @property
    def quality_factor(self):
        return self.omega_m / self.gamma_m

    @property
    def n_th(self):
        """Thermal occupancy k_B T / (hbar omega_m)."""
        return K_B * self.temperature / (HBAR * self.omega_m)


@dataclass(frozen=True)
class Modulation:
    """Amplitude modulation of the drive power: frequency (Hz) and depth."""

    mod_freq: float
    depth: float

    def __post_init__(self):
        if not np.isfinite(self.mod_freq) or self.mod_freq < 0:
            raise ConfigError("mod_freq must be >= 0", "mod_freq")
        if not (0.0 <= self.depth <= 1.0):
            raise ConfigError(f"depth must be in [0, 1], got {self.depth!r}", "depth")


@dataclass(frozen=True)
class DriveConfig:
    """Laser drive.

    ``detuning`` is measured from the crossing frequency (rad/s),
    ``power_in`` is the power before the fiber (W) and
    ``fiber_efficiency`` the fraction of it that reaches the cavity.
    """

    detuning: float
    power_in: float
    wavelength: float = 1064e-9
    fiber_efficiency: float = 1.0
    modulation: Optional[Modulation] = None

    def __post_init__(self):
        if not np.isfinite(self.detuning):
            raise ConfigError("detuning must be finite", "detuning")
        if not np.isfinite(self.power_in) or self.power_in < 0:
            raise ConfigError(f"power_in must be >= 0, got {self.power_in!r}", "power_in")
        if not np.isfinite(self.wavelength) or self.wavelength <= 0:
            raise ConfigError("wavelength must be positive", "wavelength")
        if not (0.0 < self.fiber_efficiency <= 1.0):
            raise ConfigError(
                f"fiber_efficiency must be in (0, 1], got {self.fiber_efficiency!r}",
                "fiber_efficiency",
            )

    @property
    def photon_energy(self):
        return TWO_PI * HBAR * C_LIGHT / self.wavelength

    @property
    def photon_flux(self):
        """Photons per second arriving at the cavity input."""
        return self.fiber_efficiency * self.power_in / self.photon_energy

    @property
    def a_in(self):
        """Input amplitude sqrt(flux), real and non-negative by convention."""
        return sqrt(self.photon_flux)

    def with_detuning(self, detuning):
        return dataclasses.replace(self, detuning=float(detuning))

    def with_power(self, power_in):
        return dataclasses.replace(self, power_in=float(power_in))


@dataclass(frozen=True)
class SystemModel:
    """N optical modes, their couplings and the mechanical oscillator."""

    modes: tuple
    couplings: tuple = ()
    mech: MechanicalOscillator = field(
        default_factory=lambda: MechanicalOscillator(TWO_PI * 354.6e3, TWO_PI * 3.546, 43e-12)
    )
    crossing_frequency: float = 0.0

    def __post_init__(self):
        modes = tuple(self.modes)
        couplings = tuple(self.couplings)
        if not modes:
            raise ConfigError("at least one optical mode is required", "modes")
        labels = [m.label for m in modes]
        seen = set()
        for i, label in enumerate(labels):
            if label in seen:
                raise ConfigError(f"duplicate mode label {label!r}", f"modes[{i}].label")
            seen.add(label)
        pairs = set()
        for k, term in enumerate(couplings):
            for label in term.pair:
                if label not in seen:
                    raise ConfigError(
                        f"coupling references unknown mode {label!r}", f"couplings[{k}].pair"
                    )
            key = frozenset(term.pair)
            if key in pairs:
                raise ConfigError(
                    f"more than one coupling for pair {term.pair}", f"couplings[{k}].pair"
                )
            pairs.add(key)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "couplings", couplings)

    @property
    def n_modes(self):
        return len(self.modes)

    @cached_property
    def labels(self):
        return tuple(m.label for m in self.modes)

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigError(f"unknown mode label {label!r}") from None

    @cached_property
    def kappa(self):
        return np.array([m.kappa for m in self.modes])

    @cached_property
    def kappa_in(self):
        return np.array([m.kappa_in for m in self.modes])

    @cached_property
    def sqrt_kappa_in(self):
        return np.sqrt(self.kappa_in)

    @cached_property
    def slope_dis(self):
        return np.array([m.slope_dis for m in self.modes])

    @cached_property
    def slope_osc(self):
        return np.array([m.slope_osc for m in self.modes])

    @cached_property
    def offset(self):
        return np.array([m.offset for m in self.modes])

    @cached_property
    def coupling_matrix(self):
        """Off-diagonal part of the mode matrix."""
        n = self.n_modes
        out = np.zeros((n, n), dtype=complex)
        for term in self.couplings:
            i, j = self.index(term.pair[0]), self.index(term.pair[1])
            out[i, j] = term.amplitude
            out[j, i] = np.conj(term.amplitude)
        return out

    @cached_property
    def g_m(self):
        """Per-mode single-phonon coupling slope_osc * z_zpf (rad/s)."""
        return self.slope_osc * self.mech.z_zpf

    def replace_mode(self, label, **changes):
        i = self.index(label)
        modes = list(self.modes)
        modes[i] = dataclasses.replace(modes[i], **changes)
        return dataclasses.replace(self, modes=tuple(modes))

    def replace_coupling(self, pair, **changes):
        key = frozenset(pair)
        couplings = list(self.couplings)
        for k, term in enumerate(couplings):
            if frozenset(term.pair) == key:
                couplings[k] = dataclasses.replace(term, **changes)
                return dataclasses.replace(self, couplings=tuple(couplings))
        raise ConfigError(f"no coupling between {tuple(pair)}")

    def replace_mech(self, **changes):
        return dataclasses.replace(self, mech=dataclasses.replace(self.mech, **changes))


# ---------------------------------------------------------------------------
# Mode matrix and eigen-branches


def mode_matrix(model: SystemModel, z_dis: float, z_osc: float = 0.0) -> np.ndarray:
    """Hermitian N x N matrix of mode frequencies and couplings (rad/s)."""
    diag = model.offset + model.slope_dis * z_dis + model.slope_osc * z_osc
    return model.coupling_matrix + np.diag(diag.astype(complex))


def _mode_matrices(model, z_values):
    """Stack of mode matrices for an array of static displacements."""
    z = np.asarray(z_values, dtype=float)
    diag = model.offset + model.slope_dis * z[..., None]
    out = np.broadcast_to(model.coupling_matrix, z.shape + model.coupling_matrix.shape).copy()
    idx = np.arange(model.n_modes)
    out[..., idx, idx] += diag
    return out


def eigen_branches(model: SystemModel, z_dis: float) -> np.ndarray:
    """Ascending real eigenfrequencies of the mode matrix at ``z_dis``."""
    return np.linalg.eigvalsh(mode_matrix(model, z_dis, 0.0))


def track_branches(model: SystemModel, z_values, *, overlap_window=1e-6):
    """Eigen-branches along a sweep of ``z_values``.

    Branches are kept in ascending order except where two of them come
    within ``overlap_window * t_min`` of each other; there the assignment
    follows eigenvector overlap with the previous point so that a branch
    stays continuous through a (near-)degeneracy.

    Returns
    -------
    values : ndarray, shape (len(z_values), N)
    vectors : ndarray, shape (len(z_values), N, N)
        ``vectors[k][:, b]`` is the eigenvector of branch ``b``.
    """
    z_values = np.asarray(z_values, dtype=float)
    ts = [c.t for c in model.couplings if c.t > 0]
    t_min = min(ts) if ts else 0.0
    # threshold for overlap-based reordering; with t = 0 any touching pair qualifies
    close = overlap_window * t_min if t_min > 0 else 1e-9 * max(1.0, float(np.abs(model.offset).max()))
    vals_all, vecs_all = np.linalg.eigh(_mode_matrices(model, z_values))
    values = np.empty_like(vals_all)
    vectors = np.empty_like(vecs_all)
    # branch b sits at ascending position order[b].  Inside and just after a
    # near-degeneracy the assignment comes from overlap with the last
    # well-separated point (eigenvectors at a degeneracy are arbitrary) and
    # then persists so a branch keeps its identity beyond it.
    order = np.arange(model.n_modes)
    ref = None
    was_close = False
    for k in range(len(z_values)):
        vals, vecs = vals_all[k], vecs_all[k]
        is_close = bool(np.any(np.diff(vals) < close))
        if ref is not None and (is_close or was_close):
            order = _assign(np.abs(ref.conj().T @ vecs) ** 2)
        vals, vecs = vals[order], vecs[:, order]
        values[k], vectors[k] = vals, vecs
        if not is_close:
            ref = vecs
        was_close = is_close
    return values, vectors


def _assign(overlap):
    # greedy max-overlap assignment; N is small
    n = overlap.shape[0]
    order = np.full(n, -1)
    taken = set()
    for flat in np.argsort(overlap, axis=None)[::-1]:
        i, j = divmod(int(flat), n)
        if order[i] < 0 and j not in taken:
            order[i] = j
            taken.add(j)
    return order


class Crossing(NamedTuple):
    z: float
    lower: int
    gap: float


def find_crossings(model: SystemModel, z_lo: float, z_hi: float, n_grid: int = 2001):
    """Locate avoided crossings (local minima of adjacent-branch separation).

    Returns a list of :class:`Crossing` with the position refined by a
    bounded scalar minimization, the index of the lower branch and the gap.
    """
    z = np.linspace(z_lo, z_hi, n_grid)
    vals = np.linalg.eigvalsh(_mode_matrices(model, z))
    sep = np.diff(vals, axis=1)
    found = []
    for b in range(model.n_modes - 1):
        s = sep[:, b]
        for k in range(1, n_grid - 1):
            if s[k] <= s[k - 1] and s[k] < s[k + 1]:
                res = minimize_scalar(
                    lambda zz: np.diff(eigen_branches(model, zz))[b],
                    bounds=(z[k - 1], z[k + 1]),
                    method="bounded",
                    options={"xatol": 1e-18},
                )
                found.append(Crossing(float(res.x), b, float(res.fun)))
    found.sort(key=lambda c: c.z)
    return found


class QuadraticCoefficient(NamedTuple):
    """Branch curvatures at an avoided crossing.

    ``branch_curvatures`` holds d²λ/dz² for every eigen-branch (rad/s per
    m²).  ``paper_convention`` is the curvature difference between the two
    branches forming the crossing; for an isolated two-mode crossing it
    equals (Δslope)² / (2t), twice the per-branch value.
    """

    branch_curvatures: np.ndarray
    paper_convention: float
    branches: tuple
    step: float


def quadratic_coefficient(model: SystemModel, crossing_z: float, *, tol=1e-3) -> QuadraticCoefficient:
    """Curvature of the eigen-branches at an avoided crossing.

    Central second differences with one Richardson extrapolation step.  The
    step is ``min(0.01 t / |Δslope|, 0.01 nm)`` where ``t`` is half the
    local gap and Δslope the slope difference of the two modes that
    dominate the crossing branches.

    Raises
    ------
    CrossingError
        If ``crossing_z`` is not a minimum of a branch separation (the
        separation's slope exceeds ``tol * |Δslope|``).
    """
    if model.n_modes < 2:
        raise CrossingError("a crossing needs at least two modes")
    vals, vecs = np.linalg.eigh(mode_matrix(model, crossing_z))
    sep = np.diff(vals)
    b = int(np.argmin(sep))
    weight = np.abs(vecs[:, b]) ** 2 + np.abs(vecs[:, b + 1]) ** 2
    i, j = np.argsort(weight)[::-1][:2]
    dslope = abs(model.slope_dis[i] - model.slope_dis[j])
    half_gap = 0.5 * sep[b]
    if dslope == 0:
        raise CrossingError("the two crossing modes have equal slopes; no avoided crossing")
    if half_gap <= 0:
        raise CrossingError("branches are degenerate at crossing_z (t = 0)")
    h = min(0.01 * half_gap / dslope, 0.01e-9)

    # separation must be stationary at a crossing
    dz = 0.1 * h
    ds = (np.diff(eigen_branches(model, crossing_z + dz))[b]
          - np.diff(eigen_branches(model, crossing_z - dz))[b]) / (2 * dz)
    if abs(ds) > tol * dslope:
        raise CrossingError(
            f"z = {crossing_z!r} m is not a branch-separation extremum "
            f"(d(sep)/dz = {ds:.3g}, slope difference {dslope:.3g}); "
            "use find_crossings() to locate it"
        )

    # shift by the branch mean to limit cancellation in the differences
    ref = np.mean(vals)

    def second_diff(step):
        up = eigen_branches(model, crossing_z + step) - ref
        mid = vals - ref
        dn = eigen_branches(model, crossing_z - step) - ref
        return (up - 2.0 * mid + dn) / step**2

    d1 = second_diff(h)
    d2 = second_diff(h / 2)
    curv = (4.0 * d2 - d1) / 3.0
    return QuadraticCoefficient(curv, float(curv[b + 1] - curv[b]), (b, b + 1), h)


# ---------------------------------------------------------------------------
# Susceptibility, steady state, reflection


def _inverse_susceptibility(model, z_dis, detuning, omega):
    """kappa/2 + i(M(z) - detuning - omega), broadcasting over the scalar args."""
    z = np.asarray(z_dis, dtype=float)
    shift = np.asarray(detuning, dtype=float) + np.asarray(omega, dtype=float)
    z, shift = np.broadcast_arrays(z, shift)
    mats = 1j * _mode_matrices(model, z)
    idx = np.arange(model.n_modes)
    mats[..., idx, idx] += 0.5 * model.kappa - 1j * shift[..., None]
    return mats


def susceptibility(model: SystemModel, drive: DriveConfig, omega: float, z_dis: float) -> np.ndarray:
    """Cavity susceptibility matrix (kappa/2 + i(M(z) - Δ - omega))^-1."""
    return np.linalg.inv(_inverse_susceptibility(model, z_dis, drive.detuning, omega))


def _solve(a, b):
    return np.linalg.solve(a, b[..., None])[..., 0]


def steady_state(model: SystemModel, drive: DriveConfig, z_dis: float) -> np.ndarray:
    """Intracavity amplitudes at zero mechanical motion; |a_n|² in photons."""
    a_inv = _inverse_susceptibility(model, z_dis, drive.detuning, 0.0)
    return _solve(a_inv, model.sqrt_kappa_in.astype(complex)) * drive.a_in


class Reflection(NamedTuple):
    amplitude_ratio: complex
    power_ratio: float


def reflection(model: SystemModel, drive: DriveConfig, z_dis: float) -> Reflection:
    """Reflected-to-incident amplitude and power ratio of the input port."""
    if drive.photon_flux <= 0:
        raise ConfigError("reflection ratio needs a non-zero drive", "power_in")
    r = reflection_amplitude(model, z_dis, drive.detuning)
    return Reflection(complex(r), float(abs(r) ** 2))


def reflection_amplitude(model: SystemModel, z_dis, detuning):
    """Reflection amplitude ratio, vectorized over broadcastable z and detuning."""
    s = model.sqrt_kappa_in.astype(complex)
    a_inv = _inverse_susceptibility(model, z_dis, detuning, 0.0)
    x = _solve(a_inv, np.broadcast_to(s, a_inv.shape[:-1]))
    return 1.0 - x @ s


def reflection_map(model: SystemModel, z_values, detunings) -> np.ndarray:
    """Power reflectance on a (len(z_values), len(detunings)) grid."""
    z = np.asarray(z_values, dtype=float)[:, None]
    d = np.asarray(detunings, dtype=float)[None, :]
    return np.abs(reflection_amplitude(model, z, d)) ** 2

