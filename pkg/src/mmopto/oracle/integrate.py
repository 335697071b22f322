"""Time-domain integration of the classical multimode equations of motion.

In the frame rotating at the drive frequency (optical sector) and the lab
frame for the mechanics, with ``c`` the mechanical amplitude in
zero-point units and ``z = c + c*``:

    da/dt = -(kappa/2 + i(M(z_dis) - Δ)) a - i g_m a z + sqrt(kappa_in) a_in
    dc/dt = -(gamma_m/2 + i omega_m) c - i sum_n g_n |a_n|^2

The thermal force is left out, so trajectories are deterministic.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, InstabilityError, ValidityWarning
from ..model import DriveConfig, SystemModel, mode_matrix
from ._backend import get_kernel

STEP_FACTOR = 0.05
SAMPLES_PER_PERIOD = 32


@dataclass(frozen=True)
class InitialState:
    """Starting point of an integration.

    ``c0`` is the mechanical amplitude (zero-point units) and ``a0`` the
    optical amplitudes.  With ``about_equilibrium`` (the default) both are
    offsets from the static radiation-pressure equilibrium; ``a0=None``
    then means "start the light at equilibrium".
    """

    c0: complex = 0j
    a0: np.ndarray | None = None
    about_equilibrium: bool = True


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution on a uniform time grid.

    ``mech_offset`` is the static equilibrium amplitude the ringdown is
    measured against (zero for synthetic traces).
    """

    times: np.ndarray
    optical_amps: np.ndarray
    mech_amp: np.ndarray
    mech_offset: complex = 0j
    kappa_min: float = 0.0
    dt: float = 0.0
    n_steps: int = 0
    n_rejected: int = 0
    backend: str = ""

    @property
    def displacement(self):
        """z(t) = c + c* in zero-point units."""
        return 2.0 * self.mech_amp.real

    def to_csv(self, path):
        """Dump ``t_s`` plus real/imaginary parts of every amplitude."""
        n = self.optical_amps.shape[1]
        header = ["t_s"]
        for k in range(n):
            header += [f"a{k}_re", f"a{k}_im"]
        header += ["c_re", "c_im"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i, t in enumerate(self.times):
                row = [repr(float(t))]
                for a in self.optical_amps[i]:
                    row += [repr(float(a.real)), repr(float(a.imag))]
                c = self.mech_amp[i]
                row += [repr(float(c.real)), repr(float(c.imag))]
                w.writerow(row)


def _generator(model, drive, z_dis):
    """Linear optical generator L = kappa/2 + i(M - Δ) and drive vector b."""
    L = 1j * mode_matrix(model, z_dis)
    L[np.diag_indices(model.n_modes)] += 0.5 * model.kappa - 1j * drive.detuning
    b = model.sqrt_kappa_in.astype(complex) * drive.a_in
    return L, b


def max_step(model: SystemModel, drive: DriveConfig, z_dis: float) -> float:
    """Largest dt allowed: 0.05 / max(kappa, |Δ| + max|eig M|)."""
    eig = np.abs(np.linalg.eigvalsh(mode_matrix(model, z_dis))).max()
    return STEP_FACTOR / max(model.kappa.max(), abs(drive.detuning) + eig)


def static_equilibrium(model: SystemModel, drive: DriveConfig, z_dis: float, *,
                       max_iter=500, tol=1e-14):
    """Static radiation-pressure equilibrium ``(a_s, c_s)``.

    Fixed-point iteration on the mechanical offset: the light at the
    displaced position pushes the membrane to a new static amplitude
    c_s = -i F / (gamma_m/2 + i omega_m).
    """
    L, b = _generator(model, drive, z_dis)
    g = model.g_m
    mech = model.mech
    denom = 0.5 * mech.gamma_m + 1j * mech.omega_m
    z = 0.0
    for _ in range(max_iter):
        a = np.linalg.solve(L + np.diag(1j * g * z), b)
        c = -1j * np.dot(g, np.abs(a) ** 2) / denom
        z_new = 2.0 * c.real
        if abs(z_new - z) <= tol * max(1.0, abs(z_new)):
            a = np.linalg.solve(L + np.diag(1j * g * z_new), b)
            c = -1j * np.dot(g, np.abs(a) ** 2) / denom
            return a, complex(c)
        z = z_new
    raise InstabilityError("no static equilibrium found (optomechanical bistability?)")


def integrate(model: SystemModel, drive: DriveConfig, z_dis: float, initial: InitialState | None = None,
              duration: float | None = None, dt: float | None = None, *, sample_every=None,
              rtol=1e-10, atol=1e-12, blowup=None, backend=None) -> Trajectory:
    """Integrate the nonlinear equations with an adaptive Dormand-Prince 5(4) scheme.

    Parameters
    ----------
    initial : InitialState, optional
        Defaults to the static equilibrium (no motion).
    duration : float, optional
        Seconds; defaults to 20 / gamma_m.  Shorter runs warn with
        :class:`ValidityWarning` because they do not suit a ringdown.
    dt : float, optional
        Maximum internal step; defaults to :func:`max_step`.  Values above
        that bound raise :class:`ConfigError`.
    sample_every : int, optional
        Number of dt intervals between stored samples; defaults to about
        32 samples per mechanical period.
    blowup : float, optional
        Mechanical amplitude treated as divergence; defaults to 1e6 times
        the initial amplitude scale.

    Raises
    ------
    InstabilityError
        When the state diverges; ``err.time`` is the last finite sample time.
    """
    limit = max_step(model, drive, z_dis)
    if dt is None:
        dt = limit
    if not dt > 0:
        raise ConfigError("dt must be positive", "dt")
    if dt > limit * (1 + 1e-12):
        raise ConfigError(f"dt = {dt:.3g} s exceeds the step bound {limit:.3g} s", "dt")
    mech = model.mech
    if duration is None:
        duration = 20.0 / mech.gamma_m
    if duration < 20.0 / mech.gamma_m:
        warnings.warn("duration shorter than 20 / gamma_m; too short for a ringdown fit",
                      ValidityWarning, stacklevel=2)
    if sample_every is None:
        period = 2 * np.pi / mech.omega_m
        sample_every = max(1, int(period / (SAMPLES_PER_PERIOD * dt)))
    n_samples = int(np.ceil(duration / (dt * sample_every))) + 1

    initial = InitialState() if initial is None else initial
    a_s, c_s = static_equilibrium(model, drive, z_dis)
    if initial.about_equilibrium:
        a_start = a_s if initial.a0 is None else a_s + np.asarray(initial.a0, dtype=complex)
        c_start = c_s + initial.c0
        offset = c_s
    else:
        a_start = np.zeros(model.n_modes, complex) if initial.a0 is None else np.asarray(initial.a0, complex)
        c_start = complex(initial.c0)
        offset = 0j
    y0 = np.concatenate([a_start, [c_start]]).astype(complex)
    if blowup is None:
        blowup = 1e6 * max(1.0, abs(c_start), abs(c_s))

    L, b = _generator(model, drive, z_dis)
    name, kernel = get_kernel(backend)
    out, n_done, n_steps, n_rej = kernel(
        np.ascontiguousarray(L), np.ascontiguousarray(b), np.ascontiguousarray(model.g_m, dtype=float),
        0.5 * mech.gamma_m, mech.omega_m, y0, float(dt), int(n_samples), int(sample_every),
        float(rtol), float(atol), float(blowup),
    )
    times = np.arange(n_samples) * (dt * sample_every)
    if n_done < n_samples:
        t_fail = float(times[n_done - 1])
        raise InstabilityError(f"integration diverged after t = {t_fail:.6g} s", time=t_fail)
    return Trajectory(
        times=times,
        optical_amps=out[:, :-1].copy(),
        mech_amp=out[:, -1].copy(),
        mech_offset=offset,
        kappa_min=float(model.kappa.min()),
        dt=float(dt),
        n_steps=int(n_steps),
        n_rejected=int(n_rej),
        backend=name,
    )
