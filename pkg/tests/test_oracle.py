import csv
import warnings

import numpy as np
import pytest

from mmopto import presets
from mmopto.dynamics import self_energy, spring_damping_sweep
from mmopto.errors import ConfigError, InstabilityError, InsufficientDataError, ValidityWarning
from mmopto.model import DriveConfig
from mmopto.oracle import (
    HAVE_COMPILED, InitialState, OracleRow, integrate, max_step, oracle_compare, oracle_point,
    ringdown_estimate, static_equilibrium, weak_coupling_bound,
)
from mmopto.oracle._backend import get_kernel
from mmopto.oracle.integrate import _generator
from mmopto.units import MHZ, NM, UW

MODEL = presets.table_model("fig2", n_modes=2, mech=presets.mechanics(q=1000))
DRIVE = DriveConfig(0.0, 2000 * UW, fiber_efficiency=0.6)


def _quiet(fn, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        return fn(*args, **kwargs)


def test_free_ringdown_matches_closed_form():
    dark = DriveConfig(0.0, 0.0)
    mech = MODEL.mech
    traj = integrate(MODEL, dark, 0.0, InitialState(c0=1.0))
    expected = np.exp(-(0.5 * mech.gamma_m + 1j * mech.omega_m) * traj.times)
    assert np.max(np.abs(traj.mech_amp - expected)) < 1e-7
    fit = ringdown_estimate(traj)
    assert fit.omega == pytest.approx(mech.omega_m, rel=1e-9)
    assert fit.gamma == pytest.approx(mech.gamma_m, rel=1e-6)


def test_static_equilibrium_is_stationary():
    a_s, c_s = static_equilibrium(MODEL, DRIVE, 0.5 * NM)
    L, b = _generator(MODEL, DRIVE, 0.5 * NM)
    g, mech = MODEL.g_m, MODEL.mech
    z = 2 * c_s.real
    da = -(L @ a_s) - 1j * g * a_s * z + b
    dc = -(0.5 * mech.gamma_m + 1j * mech.omega_m) * c_s - 1j * np.dot(g, np.abs(a_s) ** 2)
    assert np.max(np.abs(da)) <= 1e-9 * np.max(np.abs(b))
    assert abs(dc) <= 1e-9 * abs(np.dot(g, np.abs(a_s) ** 2))


def test_equilibrium_start_stays_put():
    traj = _quiet(integrate, MODEL, DRIVE, 0.0, duration=2e-4)
    assert np.max(np.abs(traj.mech_amp - traj.mech_offset)) < 1e-6 * max(1.0, abs(traj.mech_offset))


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled kernel not built")
def test_backends_agree():
    kw = dict(initial=InitialState(c0=10.0), duration=2e-5)
    a = _quiet(integrate, MODEL, DRIVE, 0.3 * NM, backend="compiled", **kw)
    b = _quiet(integrate, MODEL, DRIVE, 0.3 * NM, backend="python", **kw)
    assert a.backend == "compiled" and b.backend == "python"
    assert a.n_steps == b.n_steps
    assert np.max(np.abs(a.mech_amp - b.mech_amp)) <= 1e-10 * np.max(np.abs(a.mech_amp))
    assert np.max(np.abs(a.optical_amps - b.optical_amps)) <= 1e-10 * np.max(np.abs(a.optical_amps))


def test_forced_python_backend(monkeypatch):
    monkeypatch.setenv("MMOPTO_FORCE_PYTHON", "1")
    assert get_kernel()[0] == "python"
    with pytest.raises(ValueError):
        get_kernel("fortran")


def test_step_bound_enforced():
    limit = max_step(MODEL, DRIVE, 0.0)
    assert limit == pytest.approx(0.05 / max(MODEL.kappa.max(), np.abs(np.linalg.eigvalsh(
        np.array([[0, 1.57 * MHZ], [1.57 * MHZ, 0]]))).max()))
    with pytest.raises(ConfigError):
        integrate(MODEL, DRIVE, 0.0, dt=2 * limit)
    with pytest.raises(ConfigError):
        integrate(MODEL, DRIVE, 0.0, dt=-1.0)


def test_short_run_warns():
    with pytest.warns(ValidityWarning):
        integrate(MODEL, DRIVE, 0.0, duration=1e-5)


def test_ringdown_needs_enough_periods():
    traj = _quiet(integrate, MODEL, DriveConfig(0.0, 0.0), 0.0, InitialState(c0=1.0), duration=5e-6)
    with pytest.raises(InsufficientDataError):
        ringdown_estimate(traj)


def test_oracle_point_agrees_with_self_energy():
    row = oracle_point(MODEL, DRIVE.with_detuning(1.0 * MHZ), 0.5 * NM)
    gm = MODEL.mech.gamma_m
    assert row.status == "ok"
    assert row.passed(gm)
    assert abs(row.dom_oracle - row.dom_sigma) <= 0.05 * abs(row.dom_sigma)
    assert row.z_static != 0.0


def test_zero_coupling_gives_zero_on_both_sides():
    dark = MODEL
    for label in dark.labels:
        dark = dark.replace_mode(label, slope_osc=0.0)
    rows = oracle_compare(dark, DRIVE, 0.0, [-1 * MHZ, 0.0, 1 * MHZ])
    gm = dark.mech.gamma_m
    for r in rows:
        assert r.dom_sigma == 0 and r.dgam_sigma == 0
        assert abs(r.dom_oracle) < 1e-6 * gm and abs(r.dgam_oracle) < 1e-6 * gm
        assert r.passed(gm)


def _most_anti_damped(power_uw=20000, z=1.0 * NM):
    drive = DriveConfig(0.0, power_uw * UW, fiber_efficiency=0.6)
    d = np.linspace(-4, 4, 161) * MHZ
    res = spring_damping_sweep(MODEL, drive, z, d)
    k = int(np.argmin([r.delta_gamma for r in res]))
    return drive.with_detuning(d[k]), res[k]


def test_anti_damping_is_flagged():
    drive, se = _most_anti_damped()
    assert se.delta_gamma < -MODEL.mech.gamma_m
    row = _quiet(oracle_point, MODEL, drive, 1.0 * NM)
    assert row.status == "unstable"
    assert not row.passed(MODEL.mech.gamma_m)


def test_divergence_raises_with_time():
    drive, _ = _most_anti_damped()
    with pytest.raises(InstabilityError) as info:
        _quiet(integrate, MODEL, drive, 1.0 * NM, InitialState(c0=1e3), blowup=1e5)
    assert info.value.time is not None and info.value.time > 0


def test_weak_coupling_warning():
    drive = DriveConfig(0.0, 60000 * UW, fiber_efficiency=0.6)
    d = np.linspace(-4, 4, 161) * MHZ
    res = spring_damping_sweep(MODEL, drive, 0.0, d)
    # strongest spring on the damped side so the run itself stays stable
    k = max((i for i, r in enumerate(res) if r.delta_gamma > 0), key=lambda i: abs(res[i].delta_omega))
    assert abs(res[k].delta_omega) > weak_coupling_bound(MODEL)
    with pytest.warns(ValidityWarning, match="weak-coupling"):
        oracle_compare(MODEL, drive, 0.0, [d[k]])
    assert weak_coupling_bound(MODEL) == pytest.approx(0.1 * MODEL.mech.gamma_m * np.sqrt(1000))


def test_row_tolerance_floor():
    row = OracleRow(0.0, 0.0, 0.005, 0.0, -0.005)
    assert row.passed(1.0)
    assert not OracleRow(0.0, 0.0, 0.02, 0.0, 0.0).passed(1.0)
    assert not OracleRow(0.0, 0.0, 0.0, 0.0, 0.0, status="unstable").passed(1.0)


def test_trajectory_csv(tmp_path):
    traj = _quiet(integrate, MODEL, DRIVE, 0.0, InitialState(c0=1.0), duration=2e-6)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    rows = list(csv.reader(open(path)))
    header = [r for r in rows if not r[0].startswith("#")][0]
    assert header == ["t_s", "a0_re", "a0_im", "a1_re", "a1_im", "c_re", "c_im"]


def test_self_energy_reference_column_matches():
    row = oracle_point(MODEL, DRIVE.with_detuning(-1.0 * MHZ), 0.0)
    assert row.dom_sigma == self_energy(MODEL, DRIVE.with_detuning(-1.0 * MHZ), 0.0).delta_omega
