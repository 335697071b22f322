"""Oracle-versus-self-energy comparison over a detuning grid."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..dynamics import self_energy
from ..errors import InstabilityError, InsufficientDataError, ValidityWarning
from ..model import DriveConfig, SystemModel
from .integrate import InitialState, integrate
from .ringdown import ringdown_estimate

REL_TOL = 0.05
ABS_TOL_GAMMA = 0.01


@dataclass(frozen=True)
class OracleRow:
    """One detuning of the comparison; all rates in rad/s.

    ``status`` is "ok", "unstable" (diverged or growing) or "no-signal".
    The oracle columns are nan unless the ringdown fit succeeded.
    ``z_static`` is the radiation-pressure displacement (m) of the
    equilibrium the oracle oscillates about; the self-energy column is
    evaluated at the nominal ``z_dis``.
    """

    detuning: float
    dom_sigma: float
    dom_oracle: float
    dgam_sigma: float
    dgam_oracle: float
    status: str = "ok"
    time: float | None = None
    z_static: float = 0.0

    def tolerance(self, gamma_m, which):
        ref = self.dom_sigma if which == "omega" else self.dgam_sigma
        return max(REL_TOL * abs(ref), ABS_TOL_GAMMA * gamma_m)

    def passed(self, gamma_m):
        if self.status != "ok":
            return False
        return (abs(self.dom_oracle - self.dom_sigma) <= self.tolerance(gamma_m, "omega")
                and abs(self.dgam_oracle - self.dgam_sigma) <= self.tolerance(gamma_m, "gamma"))


def weak_coupling_bound(model: SystemModel) -> float:
    """|δω| limit 0.1 gamma_m sqrt(Q) under which the comparison is meaningful."""
    return 0.1 * model.mech.gamma_m * np.sqrt(model.mech.quality_factor)


def oracle_point(model: SystemModel, drive: DriveConfig, z_dis: float, *, c0=1e3,
                 duration=None, dt=None, backend=None, dump=None) -> OracleRow:
    """Ringdown one detuning and set it against the self-energy prediction."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        res = self_energy(model, drive, z_dis)
    mech = model.mech
    nan = float("nan")
    try:
        traj = integrate(model, drive, z_dis, InitialState(c0=c0), duration, dt, backend=backend)
    except InstabilityError as err:
        return OracleRow(drive.detuning, res.delta_omega, nan, res.delta_gamma, nan, "unstable", err.time)
    if dump is not None:
        traj.to_csv(dump)
    try:
        fit = ringdown_estimate(traj)
    except InsufficientDataError:
        return OracleRow(drive.detuning, res.delta_omega, nan, res.delta_gamma, nan, "no-signal")
    status = "unstable" if fit.gamma < 0 else "ok"
    z_static = 2.0 * traj.mech_offset.real * mech.z_zpf
    return OracleRow(drive.detuning, res.delta_omega, fit.omega - mech.omega_m,
                     res.delta_gamma, fit.gamma - mech.gamma_m, status, None, z_static)


def oracle_compare(model: SystemModel, drive: DriveConfig, z_dis: float, detunings, **kwargs):
    """Run :func:`oracle_point` at every detuning.

    Warns with :class:`ValidityWarning` when a predicted spring exceeds
    the weak-coupling bound.  Instabilities are recorded per row and the
    sweep continues.
    """
    rows = []
    bound = weak_coupling_bound(model)
    for d in np.asarray(detunings, dtype=float):
        row = oracle_point(model, drive.with_detuning(float(d)), z_dis, **kwargs)
        if abs(row.dom_sigma) > bound:
            warnings.warn(
                f"|δω| = {abs(row.dom_sigma):.3g} rad/s exceeds the weak-coupling bound {bound:.3g} rad/s",
                ValidityWarning, stacklevel=2,
            )
        rows.append(row)
    return rows


def all_passed(rows, gamma_m):
    return all(r.passed(gamma_m) for r in rows)
