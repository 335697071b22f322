"""Acceptance criteria, one test per criterion.

Every test records a line ``criterion N: PASS|FAIL ...`` that is printed
in the terminal summary (see conftest.py) whatever the outcome, so a
plain ``pytest -v`` run shows the status of each criterion.
"""

import time
import warnings

import numpy as np
import pytest

from mmopto import presets, singlemode
from mmopto.dynamics import modulation_response_sweep, photon_number, self_energy, spring_damping_sweep
from mmopto.errors import ValidityWarning
from mmopto.fitkit import drift_subtract, extract_static_params, synthesize_grid
from mmopto.model import (
    CouplingTerm, DriveConfig, MechanicalOscillator, Modulation, OpticalMode, SystemModel, eigen_branches,
    find_crossings, quadratic_coefficient, reflection_map,
)
from mmopto.oracle import max_step, oracle_compare, oracle_point
from mmopto.units import KHZ, MHZ, MHZ_PER_NM, NG, NM, UW

RESULTS = []


def report(criterion, ok, detail, elapsed):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail} ({elapsed:.2f} s)"
    RESULTS.append(line)
    print(line)
    return ok


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


# ---------------------------------------------------------------------------
# 1. curvature of the three crossings


def test_criterion_1_curvature():
    targets = {"I": (presets.table_model("I", n_modes=2), 1.7),
               "II": (presets.table_model("II", n_modes=2, crossing="R1"), 4.2),
               "III": (presets.table_model("III", n_modes=2, crossing="R2"), 8.7)}
    with Timer() as tm:
        got = {k: quadratic_coefficient(m, 0.0).paper_convention / (MHZ / NM**2) for k, (m, _) in targets.items()}
    errs = {k: abs(got[k] / targets[k][1] - 1) for k in targets}
    ok = max(errs.values()) <= 0.03 and tm.elapsed < 1.0
    detail = ", ".join(f"{k}={got[k]:.3f} MHz/nm^2 ({100 * errs[k]:.2f}%)" for k in targets)
    assert report(1, ok, detail, tm.elapsed)


# ---------------------------------------------------------------------------
# 2. minimum branch separation


def test_criterion_2_gap():
    rng = np.random.default_rng(2)
    mech = presets.mechanics()
    worst = 0.0
    with Timer() as tm:
        for _ in range(1000):
            t = rng.uniform(0.05, 5.0)
            s_a, s_b = rng.uniform(0.5, 4.0), -rng.uniform(0.5, 4.0)
            off = rng.uniform(-10, 10)
            m = SystemModel(
                (OpticalMode("A", rng.uniform(0.5, 2) * MHZ, 0.0, s_a * MHZ_PER_NM),
                 OpticalMode("B", rng.uniform(0.5, 2) * MHZ, 0.0, s_b * MHZ_PER_NM, 0.0, off * MHZ)),
                (CouplingTerm(("A", "B"), t * MHZ, rng.uniform(0, 2 * np.pi)),), mech)
            z_star = off / (s_a - s_b) * NM
            # window chosen so the asymptotes are well separated at both ends
            half = max(5 * t / (s_a - s_b), 1.0) * NM
            (c,) = find_crossings(m, z_star - half, z_star + half, n_grid=201)
            worst = max(worst, abs(c.gap / (2 * t * MHZ) - 1))
    ok = worst <= 1e-9 and tm.elapsed < 5.0
    assert report(2, ok, f"worst |gap/2t - 1| = {worst:.2e} over 1000 cases", tm.elapsed)


# ---------------------------------------------------------------------------
# 3. single-mode equivalence


def test_criterion_3_single_mode():
    rng = np.random.default_rng(3)
    worst = 0.0
    with Timer() as tm:
        for _ in range(100):
            kappa = rng.uniform(0.1, 10.0) * MHZ
            kappa_in = rng.uniform(0.0, 1.0) * kappa
            delta = rng.uniform(-5, 5) * kappa
            omega_m = rng.uniform(10, 5000) * KHZ
            power = rng.uniform(1, 1000) * UW
            g = rng.uniform(0.2, 3.0) * MHZ_PER_NM
            mech = MechanicalOscillator(omega_m, omega_m / 1e5, 43 * NG, 0.5)
            model = SystemModel((OpticalMode("A", kappa, kappa_in, 0.0, g),), (), mech)
            drive = DriveConfig(delta, power)
            got = self_energy(model, drive, 0.0).sigma
            ref = singlemode.self_energy(kappa, kappa_in, delta, omega_m, drive.photon_flux, model.g_m[0])
            worst = max(worst, abs(got - ref) / abs(ref))
    ok = worst <= 1e-12 and tm.elapsed < 1.0
    assert report(3, ok, f"worst relative deviation {worst:.2e} over 100 cases", tm.elapsed)


# ---------------------------------------------------------------------------
# 4. decoupling limit


def test_criterion_4_decoupling():
    rng = np.random.default_rng(4)
    mech = presets.mechanics()
    worst = 0.0
    with Timer() as tm:
        for _ in range(200):
            modes = tuple(
                OpticalMode(lab, rng.uniform(0.5, 2) * MHZ, rng.uniform(0, 0.4) * MHZ, s * rng.uniform(0.5, 3) * MHZ_PER_NM,
                            s * rng.uniform(0.2, 2) * MHZ_PER_NM, rng.uniform(-3, 3) * MHZ)
                for lab, s in (("A", 1), ("B", -1))
            )
            model = SystemModel(modes, (CouplingTerm(("A", "B"), 0.0, 0.0),), mech)
            z = rng.uniform(-3, 3) * NM
            drive = DriveConfig(rng.uniform(-8, 8) * MHZ, rng.uniform(1, 500) * UW)
            total = self_energy(model, drive, z).sigma
            parts = sum(
                self_energy(SystemModel((OpticalMode("A", m.kappa, m.kappa_in, 0.0, m.slope_osc,
                                                     m.offset + m.slope_dis * z),), (), mech), drive, 0.0).sigma
                for m in modes
            )
            worst = max(worst, abs(total - parts) / abs(parts))
    ok = worst <= 1e-12
    assert report(4, ok, f"worst relative deviation {worst:.2e} over 200 cases", tm.elapsed)


# ---------------------------------------------------------------------------
# 5. symmetry of the optical spring

SYM = presets.symmetric_crossing(t_mhz=2.0)
SYM_DRIVE = DriveConfig(0.0, 40 * UW)


def _sym_sweep(d):
    return np.array([r.sigma for r in spring_damping_sweep(SYM, SYM_DRIVE, 0.0, d)])


@pytest.mark.xfail(strict=True, reason="for the idealized crossing Σ(-Δ) = -Σ(Δ): δγ is odd as stated but δω "
                                       "is odd too, not even, about the crossing centre (see decisions ledger)")
def test_criterion_5a_literal_parity():
    d = np.linspace(0.05, 8, 160) * MHZ
    with Timer() as tm:
        plus, minus = _sym_sweep(d), _sym_sweep(-d[::-1])[::-1]
    scale = np.max(np.abs(plus))
    even_dom = np.max(np.abs(plus.real - minus.real)) / scale
    odd_dgam = np.max(np.abs(plus.imag + minus.imag)) / scale
    ok = max(even_dom, odd_dgam) <= 1e-9
    report("5a", ok, f"literal form: δω even dev {even_dom:.2e}, δγ odd dev {odd_dgam:.2e}", tm.elapsed)
    assert ok


def test_criterion_5b_resonance_parity():
    t = 2.0
    with Timer() as tm:
        d = np.linspace(0.05, 8, 160) * MHZ
        plus, minus = _sym_sweep(d), _sym_sweep(-d[::-1])[::-1]
        antisym = np.max(np.abs(plus + minus)) / np.max(np.abs(plus))
        x = np.array([0.1, 0.25, 0.5, 1.0])
        local = []
        signs_ok = True
        for branch, sign in ((t, 1), (-t, -1)):
            lo = _sym_sweep((branch - x[::-1]) * MHZ).real[::-1]
            hi = _sym_sweep((branch + x) * MHZ).real
            signs_ok &= bool(np.all(np.sign(lo) == sign) and np.all(np.sign(hi) == sign))
            local.append(np.max(np.abs(hi - lo) / np.abs(hi + lo)))
    ok = antisym <= 1e-9 and max(local) < 0.1 and signs_ok and tm.elapsed < 10
    assert report("5b", ok, f"Σ(-Δ) = -Σ(Δ) dev {antisym:.2e}; δω even about each resonance "
                            f"(worst asymmetry {max(local):.3f}); sign + upper / - lower: {signs_ok}", tm.elapsed)


def test_criterion_5c_far_from_crossing():
    t = 2.0
    model = SYM
    dslope = (model.slope_dis[0] - model.slope_dis[1]) / MHZ_PER_NM
    z = 20 * t / dslope * NM
    worst = 0.0
    with Timer() as tm:
        branches = eigen_branches(model, z)
        for k, w in enumerate(branches):
            # nearest bare mode supplies linewidth, input coupling and g
            m = model.modes[int(np.argmin(np.abs(model.offset + model.slope_dis * z - w)))]
            d = w + np.linspace(-3, 3, 121) * m.kappa
            multi = np.array([r.delta_omega for r in spring_damping_sweep(model, SYM_DRIVE, z, d)])
            one = np.array([singlemode.self_energy(m.kappa, m.kappa_in, di - w, model.mech.omega_m,
                                                   SYM_DRIVE.photon_flux, m.slope_osc * model.mech.z_zpf).real
                            for di in d])
            worst = max(worst, np.max(np.abs(multi - one)) / np.max(np.abs(one)))
    ok = worst <= 0.05 and tm.elapsed < 10
    assert report("5c", ok, f"|z Δslope| = 20t: worst deviation from single-mode δω {100 * worst:.2f}% of peak",
                  tm.elapsed)


# ---------------------------------------------------------------------------
# 6. power linearity


def test_criterion_6_power_linearity():
    rng = np.random.default_rng(6)
    model = presets.table_model("fig2")
    worst = 0.0
    with Timer() as tm:
        for _ in range(200):
            z = rng.uniform(-3, 3) * NM
            d1 = DriveConfig(rng.uniform(-10, 10) * MHZ, rng.uniform(1, 500) * UW)
            d2 = d1.with_power(2 * d1.power_in)
            s1, s2 = self_energy(model, d1, z), self_energy(model, d2, z)
            n1, n2 = photon_number(model, d1, z), photon_number(model, d2, z)
            worst = max(worst, abs(s2.delta_omega / (2 * s1.delta_omega) - 1),
                        abs(s2.delta_gamma / (2 * s1.delta_gamma) - 1), abs(n2 / (2 * n1) - 1))
    ok = worst < 1e-12
    assert report(6, ok, f"worst deviation on doubling {worst:.2e} over 200 cases", tm.elapsed)


# ---------------------------------------------------------------------------
# 7. oracle equivalence


@pytest.mark.slow
def test_criterion_7_oracle():
    model = presets.table_model("fig2", n_modes=2, mech=presets.mechanics(q=1000))
    drive = DriveConfig(0.0, 2000 * UW, fiber_efficiency=0.6)
    gm = model.mech.gamma_m
    det = np.linspace(-4, 4, 21) * MHZ
    n_pass = n_total = 0
    worst_ratio = worst_dt = 0.0
    with Timer() as tm, warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        for z in (-1.0 * NM, 0.0, 1.0 * NM):
            rows = oracle_compare(model, drive, z, det)
            half = []
            for r in rows:
                dr = drive.with_detuning(r.detuning)
                half.append(oracle_point(model, dr, z, dt=0.5 * max_step(model, dr, z)))
            for r, h in zip(rows, half):
                n_total += 1
                n_pass += r.passed(gm)
                worst_ratio = max(worst_ratio,
                                  abs(r.dom_oracle - r.dom_sigma) / r.tolerance(gm, "omega"),
                                  abs(r.dgam_oracle - r.dgam_sigma) / r.tolerance(gm, "gamma"))
                floor = 1e-3 * gm
                worst_dt = max(worst_dt,
                               abs(h.dom_oracle - r.dom_oracle) / max(abs(r.dom_oracle), floor),
                               abs(h.dgam_oracle - r.dgam_oracle) / max(abs(r.dgam_oracle), floor))
    ok = n_pass == n_total == 63 and worst_dt < 5e-3 and tm.elapsed < 600
    assert report(7, ok, f"{n_pass}/{n_total} points within tolerance (worst {worst_ratio:.2f} of tolerance); "
                         f"dt halving changes results by {100 * worst_dt:.2e}%", tm.elapsed)


# ---------------------------------------------------------------------------
# 8. fit round trips

STATIC = SystemModel(
    (OpticalMode("L", 1.0 * MHZ, 74 * KHZ, 1.87 * MHZ_PER_NM, 1.4 * MHZ_PER_NM),
     OpticalMode("R", 1.3 * MHZ, 150 * KHZ, -1.77 * MHZ_PER_NM, -1.46 * MHZ_PER_NM)),
    (CouplingTerm(("L", "R"), 1.57 * MHZ, 1.9),), presets.mechanics(),
)
GRID_Z = np.linspace(-6, 6, 49) * NM
GRID_D = np.linspace(-13, 13, 261) * MHZ
PAIR = {"n_modes": 2, "pairs": [("L", "R")]}


def _static_errors(est):
    (l, r), (c,) = est.modes, est.crossings
    return dict(
        t=abs(c.t / STATIC.couplings[0].t - 1),
        slope=max(abs(l.slope_dis / STATIC.slope_dis[0] - 1), abs(r.slope_dis / STATIC.slope_dis[1] - 1)),
        phi=abs(c.phi - STATIC.couplings[0].phi),
        kappa=max(abs(l.kappa / STATIC.kappa[0] - 1), abs(r.kappa / STATIC.kappa[1] - 1)),
    )


def test_criterion_8_fit_round_trips():
    with Timer() as tm, warnings.catch_warnings():
        warnings.simplefilter("ignore")
        clean = _static_errors(extract_static_params(synthesize_grid(STATIC, GRID_Z, GRID_D), PAIR))
        noisy = [_static_errors(extract_static_params(synthesize_grid(STATIC, GRID_Z, GRID_D, noise=0.02, seed=s),
                                                      PAIR)) for s in range(50)]
        worst = {k: max(e[k] for e in noisy) for k in clean}

        rate = 4.7e-4
        rng = np.random.default_rng(8)
        det = np.linspace(-4, 4, 41) * MHZ
        base = 354.6e3 + 20 * np.tanh(det / MHZ)
        t_f = np.linspace(0, 3180, 41)
        t_b = 6360 - t_f
        fwd = np.column_stack([det, t_f, base + rate * t_f + 0.01 * rng.standard_normal(41)])
        bwd = np.column_stack([det, t_b, base + rate * t_b + 0.01 * rng.standard_normal(41)])[::-1]
        drift = drift_subtract(fwd, bwd).model
    clean_ok = clean["t"] <= 5e-3 and clean["slope"] <= 5e-3 and clean["phi"] <= 0.05 and clean["kappa"] <= 0.01
    noisy_ok = worst["t"] <= 0.02 and worst["slope"] <= 0.02 and worst["phi"] <= 0.1 and worst["kappa"] <= 0.05
    drift_err = abs(drift.rate / rate - 1)
    ok = clean_ok and noisy_ok and drift_err <= 0.01 and tm.elapsed < 120
    detail = (f"noiseless t {clean['t']:.1e}, slopes {clean['slope']:.1e}, φ {clean['phi']:.1e} rad, "
              f"κ {clean['kappa']:.1e}; 2% noise worst of 50: t {100 * worst['t']:.2f}%, "
              f"slopes {100 * worst['slope']:.2f}%, φ {worst['phi']:.3f} rad, κ {100 * worst['kappa']:.2f}%; "
              f"drift rate {drift.rate * 1e3:.4f} mHz/s ({100 * drift_err:.2f}%)")
    assert report(8, ok, detail, tm.elapsed)


# ---------------------------------------------------------------------------
# 9. modulation-response shapes


def _addressed_resonance(model, z, d):
    """Detuning of the deepest reflection dip (the resonance being driven)."""
    return d[int(np.argmin(reflection_map(model, [z], d)[0]))]


def test_criterion_9_modulation_shapes():
    model = presets.table_model("fig2")
    drive = presets.table_drive("fig2", modulation=Modulation(100.0, 1.0))
    kappa = model.kappa[0]
    with Timer() as tm:
        d = np.linspace(-20, 20, 8001) * MHZ
        a0 = modulation_response_sweep(model, drive, 0.0, d)
        ref0 = _addressed_resonance(model, 0.0, d)
        peak = d[int(np.argmax(a0))]
        max_ok = abs(peak - ref0) <= 0.05 * kappa

        z3 = 3 * NM
        ref3 = _addressed_resonance(model, z3, d)
        near = np.abs(d - ref3) <= 0.5 * kappa
        a3 = modulation_response_sweep(model, drive, z3, d[near])
        k = int(np.argmin(a3))
        interior = 0 < k < len(a3) - 1
        min_ok = interior and abs(d[near][k] - ref3) <= 0.05 * kappa
        # for information: the same questions asked in the crossing frame, Δ = 0
        x = np.array([-0.05, 0.0, 0.05]) * MHZ
        c3 = modulation_response_sweep(model, drive, z3, x)
        crossing_frame = c3[1] < c3[0] and c3[1] < c3[2]
    ok = max_ok and min_ok and tm.elapsed < 5
    detail = (f"z=0: global max {(peak - ref0) / kappa:+.3f} κ from the addressed resonance "
              f"({ref0 / MHZ:.3f} MHz); z=3 nm: local min {(d[near][k] - ref3) / kappa:+.3f} κ from it "
              f"({ref3 / MHZ:.3f} MHz); crossing-frame Δ=0 local min at 3 nm: {crossing_frame}")
    assert report(9, ok, detail, tm.elapsed)
