"""Command-line front end.

    mmopto spectrum --config run.json [--out DIR] [--seed N]
    mmopto spring   --config run.json
    mmopto psd      --config run.json
    mmopto modes    --config run.json
    mmopto fit      --config run.json [--grid F] [--dynamics F] [--drift-forward F --drift-backward F]
    mmopto oracle   --config run.json [--dump-trajectories]

Exit codes: 0 success, 1 oracle mismatch or I/O failure, 2 configuration
error, 3 data parse error, 4 fit convergence failure, 5 instability only,
6 insufficient data coverage, 7 data incompatible with the model.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import config_hash, load_config, run_config_to_dict
from .dynamics import brownian_psd, spring_damping_sweep, sweep_table
from .errors import (
    ConfigError, CoverageError, CrossingError, FitError, InstabilityError, ModelMismatchError, ParseError,
)
from .io import grid_from_columns, read_csv, write_csv, write_json
from .model import find_crossings, quadratic_coefficient, reflection_map, track_branches
from .units import HZ, KHZ, MHZ, MHZ_PER_NM, NM

log = logging.getLogger("mmopto")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_CONVERGENCE = 4
EXIT_INSTABILITY = 5
EXIT_COVERAGE = 6
EXIT_MISMATCH = 7


class _Run:
    """Output directory, config hash and the list of written files."""

    def __init__(self, cfg, command, out=None):
        self.cfg = cfg
        self.command = command
        self.out = out or cfg.output_dir
        self.hash = config_hash(cfg)
        self.files = []
        os.makedirs(self.out, exist_ok=True)

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.out, name)

    def csv(self, name, header, rows):
        write_csv(self.path(name), header, rows, comment=f"mmopto {self.command} config_sha1={self.hash}")

    def finish(self, summary=None):
        meta = {
            "command": self.command,
            "mmopto_version": __version__,
            "config_sha1": self.hash,
            "config": run_config_to_dict(self.cfg),
            "outputs": list(self.files),
            "summary": summary or {},
        }
        write_json(os.path.join(self.out, f"{self.command}.json"), meta)


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum(cfg, args):
    run = _Run(cfg, "spectrum", args.out)
    z = cfg.z_grid()
    d = cfg.delta_grid()
    refl = reflection_map(cfg.model, z, d)
    noise = cfg.sweep.get("noise", 0.0)
    if noise > 0:
        refl = refl + noise * np.random.default_rng(cfg.seed).standard_normal(refl.shape)
    run.csv("spectrum.csv", ["z_nm", "delta_hz"] + ["reflectance"],
            ((zi / NM, di / HZ, refl[i, j]) for i, zi in enumerate(z) for j, di in enumerate(d)))
    crossings = find_crossings(cfg.model, z[0], z[-1]) if cfg.model.n_modes > 1 else []
    run.finish({
        "shape": [len(z), len(d)],
        "noise": noise,
        "crossings": [{"z_nm": c.z / NM, "gap_hz": c.gap / HZ, "lower_branch": c.lower} for c in crossings],
        "reflectance_min": float(refl.min()),
        "reflectance_max": float(refl.max()),
    })
    return EXIT_OK


def cmd_spring(cfg, args):
    run = _Run(cfg, "spring", args.out)
    d = cfg.delta_grid()
    zs = cfg.z_dis_values()
    rows = []
    for z in zs:
        table = sweep_table(d, spring_damping_sweep(cfg.model, cfg.drive, z, d))
        rows += [(z / NM, *r) if len(zs) > 1 else tuple(r) for r in table]
    header = ["delta_hz", "dom_hz", "dgam_hz"]
    run.csv("spring.csv", (["z_nm"] + header) if len(zs) > 1 else header, rows)
    run.finish({"z_dis_nm": [z / NM for z in zs], "power_in_uw": cfg.drive.power_in * 1e6})
    return EXIT_OK


def cmd_psd(cfg, args):
    run = _Run(cfg, "psd", args.out)
    w = cfg.omega_grid()
    z = cfg.z_dis_values()[0]
    res = brownian_psd(cfg.model, cfg.drive, z, w)
    run.csv("psd.csv", ["omega_hz", "psd"], zip(w / HZ, res.psd))
    summary = {"z_dis_nm": z / NM, "detuning_hz": cfg.drive.detuning / HZ,
               "unstable_points": int(res.unstable.sum())}
    n_unstable = int(res.unstable.sum())
    if "delta_range_mhz" in cfg.sweep:
        d = cfg.delta_grid()
        rows = []
        peaks = []
        for di in d:
            r = brownian_psd(cfg.model, cfg.drive.with_detuning(di), z, w)
            n_unstable += int(r.unstable.sum())
            rows += [(di / HZ, wi / HZ, p) for wi, p in zip(w, r.psd)]
            finite = np.where(np.isfinite(r.psd), r.psd, -np.inf)
            peaks.append(w[int(np.argmax(finite))] / HZ if np.isfinite(finite).any() else float("nan"))
        run.csv("psd_map.csv", ["delta_hz", "omega_hz", "psd"], rows)
        run.csv("psd_peaks.csv", ["delta_hz", "peak_hz"], zip(d / HZ, peaks))
    summary["unstable_points_total"] = n_unstable
    run.finish(summary)
    if n_unstable:
        log.warning("%d PSD points are anti-damped (gamma_m + dgamma <= 0); written as nan", n_unstable)
        return EXIT_INSTABILITY
    return EXIT_OK


def cmd_modes(cfg, args):
    run = _Run(cfg, "modes", args.out)
    z = cfg.z_grid()
    values, _ = track_branches(cfg.model, z)
    n = cfg.model.n_modes
    run.csv("modes.csv", ["z_nm"] + [f"branch{k}_hz" for k in range(n)],
            ((zi / NM, *(values[i] / HZ)) for i, zi in enumerate(z)))
    report = []
    if n > 1:
        for c in find_crossings(cfg.model, z[0], z[-1]):
            q = quadratic_coefficient(cfg.model, c.z)
            report.append({
                "z_nm": c.z / NM,
                "gap_mhz": c.gap / MHZ,
                "branches": list(q.branches),
                "paper_convention_mhz_per_nm2": q.paper_convention / (MHZ / NM**2),
                "branch_curvatures_mhz_per_nm2": (q.branch_curvatures / (MHZ / NM**2)).tolist(),
            })
    run.finish({"crossings": report})
    return EXIT_OK


def _fit_file(cfg, args, flag, key):
    value = getattr(args, flag)
    if value:
        return value
    if key in cfg.fit:
        return cfg.resolve(cfg.fit[key])
    return None


def cmd_fit(cfg, args):
    from .fitkit import drift_subtract, extract_static_params, fit_dynamics
    from .fitkit.static import SpectrumGrid

    run = _Run(cfg, "fit", args.out)
    report = {}
    grid_file = _fit_file(cfg, args, "grid", "grid_file")
    dyn_file = _fit_file(cfg, args, "dynamics", "dynamics_file")
    fwd = _fit_file(cfg, args, "drift_forward", "drift_forward_file")
    bwd = _fit_file(cfg, args, "drift_backward", "drift_backward_file")
    if not any([grid_file, dyn_file, fwd, bwd]):
        raise ConfigError("no data files given (grid, dynamics or drift)", "fit")

    # parse everything first so schema errors surface before any fitting
    grid_cols = read_csv(grid_file, "spectrum") if grid_file else None
    dyn_cols = read_csv(dyn_file, "dynamics") if dyn_file else None
    if bool(fwd) != bool(bwd):
        raise ConfigError("drift subtraction needs both forward and backward files", "fit")
    fwd_cols = read_csv(fwd, "drift") if fwd else None
    bwd_cols = read_csv(bwd, "drift") if bwd else None

    if grid_cols is not None:
        z_nm, d_hz, refl = grid_from_columns(grid_cols, os.path.basename(grid_file))
        labels = cfg.model.labels[:2] if cfg.model.n_modes >= 2 else ("A", "B")
        sp = extract_static_params(SpectrumGrid(z_nm * NM, d_hz * HZ, refl),
                                   {"n_modes": 2, "pairs": [labels]})
        report["static"] = {
            "modes": [
                {
                    "label": m.label,
                    "kappa_mhz": m.kappa / MHZ, "kappa_mhz_err": m.kappa_err / MHZ,
                    "kappa_in_khz": m.kappa_in / KHZ, "kappa_in_khz_err": m.kappa_in_err / KHZ,
                    "slope_dis_mhz_per_nm": m.slope_dis / MHZ_PER_NM,
                    "slope_dis_mhz_per_nm_err": m.slope_dis_err / MHZ_PER_NM,
                    "offset_mhz": m.offset / MHZ, "offset_mhz_err": m.offset_err / MHZ,
                }
                for m in sp.modes
            ],
            "couplings": [
                {
                    "pair": list(c.pair),
                    "t_mhz": c.t / MHZ, "t_mhz_err": c.t_err / MHZ,
                    "phi_rad": c.phi, "phi_rad_err": c.phi_err,
                    "z_crossing_nm": c.z_crossing / NM,
                    "t_gap_mhz": c.t_gap / MHZ, "t_curvature_mhz": c.t_curvature / MHZ,
                }
                for c in sp.crossings
            ],
            "residual_rms": sp.residual_rms,
        }

    drift = None
    if fwd_cols is not None:
        f = np.column_stack([fwd_cols["delta_hz"], fwd_cols["t_s"], fwd_cols["fm_hz"]])
        b = np.column_stack([bwd_cols["delta_hz"], bwd_cols["t_s"], bwd_cols["fm_hz"]])
        drift = drift_subtract(f, b)
        run.csv("drift_corrected.csv", ["delta_hz", "t_s", "fm_hz"], drift.corrected)
        report["drift"] = {
            "rate_hz_per_s": drift.model.rate,
            "rate_hz_per_s_err": drift.model.rate_err,
            "intercept_hz": drift.model.intercept,
            "shared_detunings": drift.model.n_pairs,
        }

    if dyn_cols is not None:
        free = cfg.fit.get("free_params", ["z_dis"])
        measured = np.column_stack([dyn_cols["delta_hz"], dyn_cols["dom_hz"], dyn_cols["dgam_hz"]]) * HZ
        errors = None
        if "dom_err_hz" in dyn_cols and "dgam_err_hz" in dyn_cols:
            errors = np.column_stack([dyn_cols["dom_err_hz"], dyn_cols["dgam_err_hz"]]) * HZ
        z0 = cfg.z_dis_values()[0]
        fit = fit_dynamics(measured, cfg.model, cfg.drive, free, z_dis=z0, errors=errors,
                           max_nfev=cfg.fit.get("max_nfev", 2000))
        out = {}
        for name, v in fit.values.items():
            e = fit.errors[name]
            kind = name.split(":", 1)[0]
            if kind == "z_dis":
                out["z_dis_nm"], out["z_dis_nm_err"] = v / NM, e / NM
            elif kind == "power_in":
                out["power_in_uw"], out["power_in_uw_err"] = v * 1e6, e * 1e6
            else:
                key = f"slope_osc_mhz_per_nm:{name.split(':', 1)[1]}"
                out[key], out[key + "_err"] = v / MHZ_PER_NM, e / MHZ_PER_NM
        out["residual_rms"] = fit.residual_rms
        report["dynamics"] = out

    write_json(run.path("fit_report.json"), report)
    run.finish({"sections": sorted(report)})
    return EXIT_OK


def cmd_oracle(cfg, args):
    from .oracle import oracle_compare

    run = _Run(cfg, "oracle", args.out)
    if "detunings_mhz" in cfg.sweep:
        det = np.asarray(cfg.sweep["detunings_mhz"], dtype=float) * MHZ
    else:
        det = cfg.delta_grid()
    gamma_m = cfg.model.mech.gamma_m
    kwargs = {"c0": cfg.sweep.get("c0", 1e3)}
    if "duration_s" in cfg.sweep:
        kwargs["duration"] = cfg.sweep["duration_s"]
    if "dt_s" in cfg.sweep:
        kwargs["dt"] = cfg.sweep["dt_s"]
    rows = []
    table = []
    for iz, z in enumerate(cfg.z_dis_values()):
        if args.dump_trajectories:
            res = []
            for jd, d in enumerate(det):
                dump = run.path(f"trajectory_z{iz}_d{jd}.csv")
                res += oracle_compare(cfg.model, cfg.drive, z, [d], dump=dump, **kwargs)
        else:
            res = oracle_compare(cfg.model, cfg.drive, z, det, **kwargs)
        for r in res:
            ok = r.passed(gamma_m)
            rel_om = abs(r.dom_oracle - r.dom_sigma) / r.tolerance(gamma_m, "omega")
            rel_ga = abs(r.dgam_oracle - r.dgam_sigma) / r.tolerance(gamma_m, "gamma")
            table.append((z / NM, r.detuning / HZ, r.dom_sigma / HZ, r.dom_oracle / HZ,
                          r.dgam_sigma / HZ, r.dgam_oracle / HZ, rel_om, rel_ga, r.status, int(ok)))
            rows.append(r)
            if r.status == "unstable":
                log.warning("z = %.4g nm, detuning = %.6g MHz: unstable (t = %s s)",
                            z / NM, r.detuning / MHZ, r.time)
    run.csv("oracle.csv",
            ["z_nm", "delta_hz", "dom_sigma_hz", "dom_oracle_hz", "dgam_sigma_hz", "dgam_oracle_hz",
             "dev_dom_over_tol", "dev_dgam_over_tol", "status", "pass"], table)
    stable = [r for r in rows if r.status == "ok"]
    n_unstable = sum(r.status == "unstable" for r in rows)
    stable_ok = all(r.passed(gamma_m) for r in stable)
    passed = stable_ok and len(stable) == len(rows)
    run.finish({"points": len(rows), "unstable": n_unstable, "passed": passed,
                "criterion": "|oracle - sigma| <= max(0.05 |sigma|, 0.01 gamma_m)"})
    print(f"oracle: {len(rows)} points, {n_unstable} unstable, {'PASS' if passed else 'FAIL'}")
    if passed:
        return EXIT_OK
    if stable_ok and n_unstable:
        return EXIT_INSTABILITY
    return EXIT_FAIL


COMMANDS = {
    "spectrum": cmd_spectrum,
    "spring": cmd_spring,
    "psd": cmd_psd,
    "modes": cmd_modes,
    "fit": cmd_fit,
    "oracle": cmd_oracle,
}


def build_parser():
    p = argparse.ArgumentParser(prog="mmopto", description="Multimode cavity optomechanics toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", help="output directory (overrides output_dir)")
        s.add_argument("--seed", type=int, help="seed (overrides the config)")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "fit":
            s.add_argument("--grid", help="reflectance grid CSV (z_nm, delta_hz, reflectance)")
            s.add_argument("--dynamics", help="spring/damping CSV (delta_hz, dom_hz, dgam_hz)")
            s.add_argument("--drift-forward", help="forward sweep CSV (delta_hz, t_s, fm_hz)")
            s.add_argument("--drift-backward", help="backward sweep CSV (delta_hz, t_s, fm_hz)")
        if name == "oracle":
            s.add_argument("--dump-trajectories", action="store_true",
                           help="write every integrated trajectory as CSV")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="mmopto: %(levelname)s: %(message)s")
    warnings.simplefilter("default")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be an unsigned integer", "--seed")
            import dataclasses

            cfg = dataclasses.replace(cfg, seed=args.seed)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, CrossingError) as err:
        log.error("configuration error: %s", err)
        return EXIT_CONFIG
    except ParseError as err:
        log.error("parse error: %s", err)
        return EXIT_PARSE
    except FitError as err:
        log.error("fit did not converge: %s (best residual %s)", err, err.best_residual)
        return EXIT_CONVERGENCE
    except InstabilityError as err:
        log.error("instability: %s", err)
        return EXIT_INSTABILITY
    except CoverageError as err:
        log.error("insufficient data: %s", err)
        return EXIT_COVERAGE
    except ModelMismatchError as err:
        log.error("data incompatible with the model: %s", err)
        return EXIT_MISMATCH
    except OSError as err:
        log.error("I/O error: %s", err)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
