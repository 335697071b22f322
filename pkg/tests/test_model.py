import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rel, single_mode
from mmopto import presets, singlemode
from mmopto.errors import ConfigError, CrossingError
from mmopto.model import (
    CouplingTerm, DriveConfig, MechanicalOscillator, OpticalMode, SystemModel, eigen_branches,
    find_crossings, mode_matrix, quadratic_coefficient, reflection, reflection_amplitude, reflection_map,
    steady_state, track_branches,
)
from mmopto.units import KHZ, MHZ, MHZ_PER_NM, NM, UW

finite = dict(allow_nan=False, allow_infinity=False)


def two_mode_model(t, phi, s_a, s_b, k_a=1.0, k_b=1.3, off_b=0.0):
    mech = presets.mechanics()
    modes = (
        OpticalMode("A", k_a * MHZ, 0.1 * k_a * MHZ, s_a * MHZ_PER_NM, 1.0 * MHZ_PER_NM),
        OpticalMode("B", k_b * MHZ, 0.2 * k_b * MHZ, s_b * MHZ_PER_NM, -1.0 * MHZ_PER_NM, off_b * MHZ),
    )
    return SystemModel(modes, (CouplingTerm(("A", "B"), t * MHZ, phi),), mech)


slopes = st.tuples(st.floats(0.2, 5.0), st.floats(-5.0, -0.2))


@settings(max_examples=50, deadline=None)
@given(t=st.floats(0.0, 5.0), phi=st.floats(0, 2 * np.pi), s=slopes,
       z=st.floats(-20, 20), z_osc=st.floats(-1, 1))
def test_mode_matrix_hermitian(t, phi, s, z, z_osc):
    m = two_mode_model(t, phi, *s)
    mat = mode_matrix(m, z * NM, z_osc * NM)
    assert np.allclose(mat, mat.conj().T, rtol=0, atol=1e-9)
    assert mat[0, 1] == pytest.approx(t * MHZ * np.exp(1j * phi))


@settings(max_examples=50, deadline=None)
@given(t=st.floats(0.01, 5.0), phi=st.floats(0, 2 * np.pi), s=slopes, z=st.floats(-20, 20))
def test_two_mode_eigenvalues_closed_form(t, phi, s, z):
    m = two_mode_model(t, phi, *s)
    da, db = s[0] * MHZ_PER_NM * z * NM, s[1] * MHZ_PER_NM * z * NM
    half = np.hypot(0.5 * (da - db), t * MHZ)
    expected = 0.5 * (da + db) + np.array([-half, half])
    assert np.allclose(eigen_branches(m, z * NM), expected, rtol=1e-12, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0.05, 5.0), phi=st.floats(0, 2 * np.pi), s=slopes, off=st.floats(-10, 10))
def test_minimum_separation_is_twice_t(t, phi, s, off):
    m = two_mode_model(t, phi, *s, off_b=off)
    z_star = off * MHZ / ((s[0] - s[1]) * MHZ_PER_NM)
    crossings = find_crossings(m, z_star - 20 * NM, z_star + 20 * NM)
    assert len(crossings) == 1
    assert crossings[0].gap == pytest.approx(2 * t * MHZ, rel=1e-9)
    assert crossings[0].z == pytest.approx(z_star, abs=1e-6 * NM)


def test_isolated_crossing_curvature_closed_form():
    m = two_mode_model(1.57, 1.9, 1.87, -1.77)
    q = quadratic_coefficient(m, 0.0)
    dslope = (1.87 + 1.77) * MHZ_PER_NM
    expected = dslope**2 / (2 * 1.57 * MHZ)
    assert q.paper_convention == pytest.approx(expected, rel=1e-6)
    # the two branches bend by half that amount in opposite directions
    assert q.branch_curvatures[1] == pytest.approx(expected / 2, rel=1e-6)
    assert q.branch_curvatures[0] == pytest.approx(-expected / 2, rel=1e-6)


def test_curvature_rejects_non_crossing_point():
    m = two_mode_model(1.0, 0.0, 2.0, -2.0)
    with pytest.raises(CrossingError):
        quadratic_coefficient(m, 2 * NM)


def test_curvature_rejects_true_crossing_and_single_mode():
    m = two_mode_model(0.0, 0.0, 2.0, -2.0)
    with pytest.raises(CrossingError):
        quadratic_coefficient(m, 0.0)
    with pytest.raises(CrossingError):
        quadratic_coefficient(single_mode(MHZ, 0.1 * MHZ, 0.0), 0.0)


def test_track_branches_follows_true_crossing():
    m = two_mode_model(0.0, 0.0, 2.0, -2.0)
    z = np.linspace(-5, 5, 101) * NM
    values, _ = track_branches(m, z)
    # without coupling each branch keeps its own slope through the degeneracy
    slopes = np.diff(values, axis=0) / np.diff(z)[:, None]
    assert np.allclose(slopes[:, 0], slopes[0, 0])
    assert np.allclose(slopes[:, 1], slopes[0, 1])


def test_fig2_three_mode_crossings():
    m = presets.table_model("fig2")
    found = find_crossings(m, -10 * NM, 10 * NM)
    assert len(found) == 2
    # gaps stay close to 2t for the two couplings (the third mode perturbs slightly)
    gaps = sorted(c.gap / MHZ for c in found)
    assert gaps[0] == pytest.approx(2 * 0.76, rel=0.03)
    assert gaps[1] == pytest.approx(2 * 1.57, rel=0.03)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(0.0, 5.0), phi=st.floats(0, 2 * np.pi), s=slopes,
       z=st.floats(-10, 10), delta=st.floats(-30, 30))
def test_reflection_is_passive_and_conserves_energy(t, phi, s, z, delta):
    m = two_mode_model(t, phi, *s)
    drive = DriveConfig(delta * MHZ, 10 * UW)
    r = reflection(m, drive, z * NM)
    assert 0.0 <= r.power_ratio <= 1.0 + 1e-12
    # photon balance: decay out of all modes minus what interferes back into the port
    a = steady_state(m, drive, z * NM)
    lost = np.sum(m.kappa * np.abs(a) ** 2) - abs(np.sum(m.sqrt_kappa_in * a)) ** 2
    assert lost == pytest.approx(drive.photon_flux * (1 - r.power_ratio), rel=1e-9, abs=1e-9 * drive.photon_flux)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0.0, 5.0), phi=st.floats(0, np.pi), s=slopes, z=st.floats(-10, 10), delta=st.floats(-30, 30))
def test_reflection_invariant_under_phase_conjugation(t, phi, s, z, delta):
    a = reflection_amplitude(two_mode_model(t, phi, *s), z * NM, delta * MHZ)
    b = reflection_amplitude(two_mode_model(t, -phi, *s), z * NM, delta * MHZ)
    assert abs(a - b) < 1e-12


def test_single_mode_reflectance_matches_closed_form():
    kappa, kin = 1.2 * MHZ, 0.3 * MHZ
    m = single_mode(kappa, kin, 0.0)
    d = np.linspace(-5, 5, 41) * MHZ
    assert rel(reflection_map(m, [0.0], d)[0], singlemode.reflectance(kappa, kin, d)) < 1e-12


def test_steady_state_solves_linear_equation(two_mode):
    drive = DriveConfig(0.3 * MHZ, 50 * UW)
    z = 0.7 * NM
    a = steady_state(two_mode, drive, z)
    lhs = (np.diag(two_mode.kappa / 2 - 1j * drive.detuning) + 1j * mode_matrix(two_mode, z)) @ a
    assert np.allclose(lhs, two_mode.sqrt_kappa_in * drive.a_in, rtol=1e-12)


def test_reflection_requires_drive(two_mode):
    with pytest.raises(ConfigError):
        reflection(two_mode, DriveConfig(0.0, 0.0), 0.0)


@pytest.mark.parametrize("kwargs, field", [
    (dict(label="A", kappa=-1.0, kappa_in=0.0), "kappa"),
    (dict(label="A", kappa=1.0, kappa_in=2.0), "kappa_in"),
    (dict(label="", kappa=1.0, kappa_in=0.5), "label"),
    (dict(label="A", kappa=1.0, kappa_in=0.5, slope_dis=np.nan), "slope_dis"),
])
def test_optical_mode_validation(kwargs, field):
    with pytest.raises(ConfigError) as info:
        OpticalMode(**kwargs)
    assert info.value.path == field


def test_model_validation_errors(mech):
    a = OpticalMode("A", MHZ, 0.1 * MHZ)
    with pytest.raises(ConfigError):
        SystemModel((a, OpticalMode("A", MHZ, 0.1 * MHZ)), (), mech)
    with pytest.raises(ConfigError):
        SystemModel((a,), (CouplingTerm(("A", "X"), MHZ),), mech)
    with pytest.raises(ConfigError):
        CouplingTerm(("A", "A"), MHZ)
    with pytest.raises(ConfigError):
        CouplingTerm(("A", "B"), -1.0)
    with pytest.raises(ConfigError):
        MechanicalOscillator(0.0, 1.0, 1e-12)
    with pytest.raises(ConfigError):
        DriveConfig(0.0, -1.0)


def test_phase_is_wrapped():
    c = CouplingTerm(("A", "B"), 1.0, -np.pi / 2)
    assert c.phi == pytest.approx(1.5 * np.pi)


def test_photon_flux_uses_fiber_efficiency():
    d1 = DriveConfig(0.0, 100 * UW, fiber_efficiency=1.0)
    d2 = DriveConfig(0.0, 100 * UW, fiber_efficiency=0.6)
    assert d2.photon_flux == pytest.approx(0.6 * d1.photon_flux)
    assert d1.photon_flux == pytest.approx(100e-6 / (6.62607015e-34 * 299792458.0 / 1064e-9))


def test_mechanics_zero_point_amplitude(mech):
    hbar = 1.054571817e-34
    assert mech.z_zpf == pytest.approx(np.sqrt(hbar / (2 * mech.mass_eff * mech.omega_m)))
    assert mech.quality_factor == pytest.approx(1e5)


def test_kappa_in_property_order(two_mode):
    assert np.allclose(two_mode.kappa_in, [74 * KHZ, 150 * KHZ])
    assert two_mode.index("R") == 1
