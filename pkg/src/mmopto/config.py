"""JSON configuration: unit-suffixed fields at the boundary, SI inside.

Every field name carries its unit (``kappa_mhz``, ``z_dis_nm`` ...) and
frequencies are the ordinary "/2π" values.  Unknown keys are rejected so
that a misspelled unit never passes silently.  Errors name the offending
field with a dotted path such as ``model.modes[1].kappa_in_khz``.

A model may also be given as ``{"preset": "fig2", ...}``; see
:func:`mmopto.presets.table_model`.  Serializing always writes the full
explicit form.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import presets
from .errors import ConfigError
from .model import CouplingTerm, DriveConfig, MechanicalOscillator, Modulation, OpticalMode, SystemModel
from .units import HZ, KHZ, MHZ, MHZ_PER_NM, NG, NM, THZ, UW

SCHEMA_VERSION = 1

_MODE_KEYS = {
    "label": None, "kappa_mhz": MHZ, "kappa_in_khz": KHZ, "slope_dis_mhz_per_nm": MHZ_PER_NM,
    "slope_osc_mhz_per_nm": MHZ_PER_NM, "offset_mhz": MHZ,
}
_MECH_KEYS = {"omega_m_khz": KHZ, "gamma_m_hz": HZ, "mass_eff_ng": NG, "temperature_k": 1.0}
_DRIVE_KEYS = {"detuning_mhz", "power_in_uw", "wavelength_nm", "fiber_efficiency", "modulation"}
_SWEEP_KEYS = {
    "z_range_nm", "delta_range_mhz", "resolution", "z_dis_nm", "omega_range_khz",
    "detunings_mhz", "c0", "duration_s", "dt_s", "noise",
}
_FIT_KEYS = {
    "grid_file", "dynamics_file", "drift_forward_file", "drift_backward_file",
    "free_params", "max_nfev",
}
_RUN_KEYS = {"schema_version", "model", "model_file", "drive", "sweep", "fit", "output_dir", "seed"}


def _check_keys(d, allowed, path):
    if not isinstance(d, dict):
        raise ConfigError("expected a JSON object", path)
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown field(s) {extra}", f"{path}.{extra[0]}")


def _num(d, key, path, default=None, required=True):
    if key not in d:
        if required and default is None:
            raise ConfigError("missing required field", f"{path}.{key}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}", f"{path}.{key}")
    return float(v)


def _out(v):
    """Value for serialization, rounded to 12 significant digits.

    Unit conversion is not bit-exact, so without rounding a config would
    drift by an ulp on every load/save cycle.  Twelve digits is far below
    any physical precision and makes load -> save -> load an identity for
    every config written with at most 12 significant digits.
    """
    return float(f"{v:.12g}")


def _wrap(fn, path, *args, **kwargs):
    # re-raise type-level errors with the config path prefixed
    try:
        return fn(*args, **kwargs)
    except ConfigError as err:
        sub = f"{path}.{_config_name(err.path)}" if err.path else path
        raise ConfigError(err.message, sub) from None


_FIELD_NAMES = {
    "kappa": "kappa_mhz", "kappa_in": "kappa_in_khz", "slope_dis": "slope_dis_mhz_per_nm",
    "slope_osc": "slope_osc_mhz_per_nm", "offset": "offset_mhz", "t": "t_mhz", "phi": "phi_rad",
    "omega_m": "omega_m_khz", "gamma_m": "gamma_m_hz", "mass_eff": "mass_eff_ng",
    "temperature": "temperature_k", "detuning": "detuning_mhz", "power_in": "power_in_uw",
    "wavelength": "wavelength_nm", "mod_freq": "mod_freq_hz",
}


def _config_name(name):
    return _FIELD_NAMES.get(name, name)


# ---------------------------------------------------------------------------
# model


def mechanics_from_dict(d, path="model.mech"):
    _check_keys(d, _MECH_KEYS, path)
    return _wrap(
        MechanicalOscillator, path,
        omega_m=_num(d, "omega_m_khz", path) * KHZ,
        gamma_m=_num(d, "gamma_m_hz", path) * HZ,
        mass_eff=_num(d, "mass_eff_ng", path) * NG,
        temperature=_num(d, "temperature_k", path, 0.0, required=False),
    )


def mechanics_to_dict(mech):
    return {
        "omega_m_khz": _out(mech.omega_m / KHZ),
        "gamma_m_hz": _out(mech.gamma_m / HZ),
        "mass_eff_ng": _out(mech.mass_eff / NG),
        "temperature_k": mech.temperature,
    }


def model_from_dict(d, path="model") -> SystemModel:
    """Build a :class:`SystemModel` from its JSON form (full or preset)."""
    if not isinstance(d, dict):
        raise ConfigError("expected a JSON object", path)
    if "preset" in d:
        _check_keys(d, {"preset", "n_modes", "sigma_mhz", "crossing", "quality_factor"}, path)
        column = d["preset"]
        if column not in presets.TABLE:
            raise ConfigError(f"unknown preset {column!r}; choose from {sorted(presets.TABLE)}", f"{path}.preset")
        q = _num(d, "quality_factor", path, None, required=False)
        n = d.get("n_modes")
        if n is not None and (not isinstance(n, int) or isinstance(n, bool) or n < 1):
            raise ConfigError(f"expected a positive integer, got {n!r}", f"{path}.n_modes")
        try:
            return presets.table_model(
                column, n_modes=n,
                sigma_mhz=_num(d, "sigma_mhz", path, -10.0, required=False),
                mech=presets.mechanics(q=q), crossing=d.get("crossing", "R1"),
            )
        except ValueError as err:
            raise ConfigError(str(err), path) from None

    _check_keys(d, {"modes", "couplings", "mech", "crossing_frequency_thz"}, path)
    raw_modes = d.get("modes")
    if not isinstance(raw_modes, list) or not raw_modes:
        raise ConfigError("expected a non-empty list", f"{path}.modes")
    modes = []
    for i, m in enumerate(raw_modes):
        p = f"{path}.modes[{i}]"
        _check_keys(m, _MODE_KEYS, p)
        if not isinstance(m.get("label"), str) or not m["label"]:
            raise ConfigError("expected a non-empty string", f"{p}.label")
        modes.append(_wrap(
            OpticalMode, p, m["label"],
            kappa=_num(m, "kappa_mhz", p) * MHZ,
            kappa_in=_num(m, "kappa_in_khz", p) * KHZ,
            slope_dis=_num(m, "slope_dis_mhz_per_nm", p, 0.0, required=False) * MHZ_PER_NM,
            slope_osc=_num(m, "slope_osc_mhz_per_nm", p, 0.0, required=False) * MHZ_PER_NM,
            offset=_num(m, "offset_mhz", p, 0.0, required=False) * MHZ,
        ))
    couplings = []
    raw_c = d.get("couplings", [])
    if not isinstance(raw_c, list):
        raise ConfigError("expected a list", f"{path}.couplings")
    for k, c in enumerate(raw_c):
        p = f"{path}.couplings[{k}]"
        _check_keys(c, {"pair", "t_mhz", "phi_rad"}, p)
        pair = c.get("pair")
        if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(x, str) for x in pair)):
            raise ConfigError("expected a list of two mode labels", f"{p}.pair")
        couplings.append(_wrap(
            CouplingTerm, p, tuple(pair),
            t=_num(c, "t_mhz", p) * MHZ,
            phi=_num(c, "phi_rad", p, 0.0, required=False),
        ))
    mech = mechanics_from_dict(d["mech"], f"{path}.mech") if "mech" in d else presets.mechanics()
    return _wrap(
        SystemModel, path, tuple(modes), tuple(couplings), mech,
        _num(d, "crossing_frequency_thz", path, 0.0, required=False) * THZ,
    )


def model_to_dict(model: SystemModel) -> dict:
    return {
        "modes": [
            {
                "label": m.label,
                "kappa_mhz": _out(m.kappa / MHZ),
                "kappa_in_khz": _out(m.kappa_in / KHZ),
                "slope_dis_mhz_per_nm": _out(m.slope_dis / MHZ_PER_NM),
                "slope_osc_mhz_per_nm": _out(m.slope_osc / MHZ_PER_NM),
                "offset_mhz": _out(m.offset / MHZ),
            }
            for m in model.modes
        ],
        "couplings": [
            {"pair": list(c.pair), "t_mhz": _out(c.t / MHZ), "phi_rad": c.phi} for c in model.couplings
        ],
        "mech": mechanics_to_dict(model.mech),
        "crossing_frequency_thz": _out(model.crossing_frequency / THZ),
    }


# ---------------------------------------------------------------------------
# drive


def drive_from_dict(d, path="drive") -> DriveConfig:
    _check_keys(d, _DRIVE_KEYS, path)
    mod = None
    if d.get("modulation") is not None:
        p = f"{path}.modulation"
        _check_keys(d["modulation"], {"mod_freq_hz", "depth"}, p)
        mod = _wrap(Modulation, p, _num(d["modulation"], "mod_freq_hz", p, 0.0, required=False),
                    _num(d["modulation"], "depth", p))
    return _wrap(
        DriveConfig, path,
        detuning=_num(d, "detuning_mhz", path, 0.0, required=False) * MHZ,
        power_in=_num(d, "power_in_uw", path) * UW,
        wavelength=_num(d, "wavelength_nm", path, presets.WAVELENGTH_NM, required=False) * NM,
        fiber_efficiency=_num(d, "fiber_efficiency", path, presets.FIBER_EFFICIENCY, required=False),
        modulation=mod,
    )


def drive_to_dict(drive: DriveConfig) -> dict:
    out = {
        "detuning_mhz": _out(drive.detuning / MHZ),
        "power_in_uw": _out(drive.power_in / UW),
        "wavelength_nm": _out(drive.wavelength / NM),
        "fiber_efficiency": drive.fiber_efficiency,
        "modulation": None,
    }
    if drive.modulation is not None:
        out["modulation"] = {"mod_freq_hz": drive.modulation.mod_freq, "depth": drive.modulation.depth}
    return out


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs; see the module docstring for units.

    ``sweep`` and ``fit`` keep their JSON (unit-suffixed) form; the
    accessors below convert to SI.
    """

    model: SystemModel
    drive: DriveConfig
    sweep: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0
    base_dir: str = "."

    def _range(self, key, scale, default=None):
        r = self.sweep.get(key, default)
        if r is None:
            raise ConfigError("missing required field", f"sweep.{key}")
        return r[0] * scale, r[1] * scale

    def resolution(self, axis=0):
        res = self.sweep.get("resolution", 201)
        return res[axis] if isinstance(res, list) else res

    def z_grid(self):
        lo, hi = self._range("z_range_nm", NM)
        import numpy as np

        return np.linspace(lo, hi, self.resolution(0))

    def delta_grid(self, default_mhz=None):
        import numpy as np

        lo, hi = self._range("delta_range_mhz", MHZ, default_mhz)
        return np.linspace(lo, hi, self.resolution(-1))

    def omega_grid(self):
        import numpy as np

        lo, hi = self._range("omega_range_khz", KHZ)
        return np.linspace(lo, hi, self.resolution(-1))

    def z_dis_values(self):
        z = self.sweep.get("z_dis_nm", 0.0)
        return [v * NM for v in (z if isinstance(z, list) else [z])]

    def resolve(self, name):
        """Path of a data file named in the config, relative to the config file."""
        return str(Path(self.base_dir) / name)


def _check_range(v, path):
    if not (isinstance(v, list) and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in v)):
        raise ConfigError("expected [low, high]", path)
    if not v[0] < v[1]:
        raise ConfigError(f"empty range {v!r}", path)


def _check_sweep(s):
    _check_keys(s, _SWEEP_KEYS, "sweep")
    for key in ("z_range_nm", "delta_range_mhz", "omega_range_khz"):
        if key in s:
            _check_range(s[key], f"sweep.{key}")
    if "resolution" in s:
        res = s["resolution"]
        items = res if isinstance(res, list) else [res]
        if not items or not all(isinstance(x, int) and not isinstance(x, bool) and x >= 2 for x in items):
            raise ConfigError("resolution must be an integer >= 2 (or a list of them)", "sweep.resolution")
    for key in ("z_dis_nm", "detunings_mhz"):
        if key in s:
            v = s[key]
            items = v if isinstance(v, list) else [v]
            if not items or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                    and math.isfinite(x) for x in items):
                raise ConfigError("expected a number or a non-empty list of numbers", f"sweep.{key}")
    if "noise" in s:
        _num(s, "noise", "sweep")
        if s["noise"] < 0:
            raise ConfigError("must be >= 0", "sweep.noise")
    for key in ("c0", "duration_s", "dt_s"):
        if key in s:
            _num(s, key, "sweep")
            if s[key] <= 0:
                raise ConfigError("must be positive", f"sweep.{key}")


def run_config_from_dict(d, base_dir=".") -> RunConfig:
    _check_keys(d, _RUN_KEYS, "config")
    version = d.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}", "schema_version")
    if ("model" in d) == ("model_file" in d):
        raise ConfigError("give exactly one of 'model' and 'model_file'", "model")
    if "model_file" in d:
        mpath = Path(base_dir) / d["model_file"]
        model = model_from_dict(_read_json(mpath, "model_file"), "model_file")
    else:
        model = model_from_dict(d["model"])
    drive = drive_from_dict(d.get("drive", {"power_in_uw": 0.0}))
    sweep = d.get("sweep", {})
    _check_sweep(sweep)
    fit = d.get("fit", {})
    _check_keys(fit, _FIT_KEYS, "fit")
    if "max_nfev" in fit and (not isinstance(fit["max_nfev"], int) or fit["max_nfev"] < 1):
        raise ConfigError("expected a positive integer", "fit.max_nfev")
    seed = d.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be an unsigned integer", "seed")
    out = d.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("expected a string", "output_dir")
    return RunConfig(model, drive, dict(sweep), dict(fit), out, seed, str(base_dir))


def run_config_to_dict(cfg: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "model": model_to_dict(cfg.model),
        "drive": drive_to_dict(cfg.drive),
        "sweep": cfg.sweep,
        "fit": cfg.fit,
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
    }


def _read_json(path, field_name="config"):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}", field_name) from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON ({err.msg} at line {err.lineno})", field_name) from None


def load_config(path) -> RunConfig:
    return run_config_from_dict(_read_json(path), base_dir=os.path.dirname(os.path.abspath(path)))


def canonical_json(obj) -> bytes:
    """Sorted-key, compact JSON bytes used for hashing."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def content_hash(obj) -> str:
    """git-style blob SHA-1 of the canonical JSON form of ``obj``."""
    data = canonical_json(obj)
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def config_hash(cfg: RunConfig) -> str:
    return content_hash(run_config_to_dict(cfg))
