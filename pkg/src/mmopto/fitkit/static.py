"""Static parameters of a two-mode avoided crossing from a reflection map.

Pipeline
--------
1. Fit every z slice with two Lorentzian dips (:func:`fit_slice`).
2. Locate the crossing at the minimum branch separation; ``t`` starts at
   half of it and is cross-checked against the vertex curvature of the
   separation, (Δslope)² / (2 sep'').
3. Fit straight lines to the branch centers in the asymptotic windows
   (separation at least ``ASYMPTOTIC_SEPARATION`` times the minimum) on
   both sides; the mode with the larger slope is the lower branch left of
   the crossing.
4. Linewidths and input couplings are averaged over the asymptotic dips
   belonging to each mode.
5. φ follows from the ratio of the two dip depths at the crossing,
   matched against the forward model on [0, π].
6. All parameters are refined together by least squares of the full
   reflection model over the grid; the refined values and their standard
   errors are reported.

The reflection power is unchanged by φ -> -φ, so φ is reported in [0, π].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares

from ..errors import ConfigError, CoverageError, DegeneracyWarning, FitError, ModelMismatchError
from ..model import CouplingTerm, OpticalMode, SystemModel, reflection_map
from .slices import fit_slice

ASYMPTOTIC_SEPARATION = 3.0
MIN_ASYMPTOTIC_ROWS = 3


@dataclass(frozen=True)
class SpectrumGrid:
    """Reflectance sampled on a (z, Δ) grid, SI units (m, rad/s)."""

    z_values: np.ndarray
    detunings: np.ndarray
    reflectance: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z_values, dtype=float)
        d = np.asarray(self.detunings, dtype=float)
        r = np.asarray(self.reflectance, dtype=float)
        if r.shape != (len(z), len(d)):
            raise ValueError(f"reflectance shape {r.shape} does not match ({len(z)}, {len(d)})")
        if np.any(np.diff(z) <= 0) or np.any(np.diff(d) <= 0):
            raise ValueError("z_values and detunings must be strictly increasing")
        object.__setattr__(self, "z_values", z)
        object.__setattr__(self, "detunings", d)
        object.__setattr__(self, "reflectance", r)


def synthesize_grid(model: SystemModel, z_values, detunings, *, noise=0.0, seed=None) -> SpectrumGrid:
    """Reflection map of ``model`` with optional additive Gaussian noise."""
    r = reflection_map(model, z_values, detunings)
    if noise > 0:
        r = r + noise * np.random.default_rng(seed).standard_normal(r.shape)
    return SpectrumGrid(np.asarray(z_values, float), np.asarray(detunings, float), r)


@dataclass(frozen=True)
class ModeEstimate:
    label: str
    kappa: float
    kappa_in: float
    slope_dis: float
    offset: float
    kappa_err: float = 0.0
    kappa_in_err: float = 0.0
    slope_dis_err: float = 0.0
    offset_err: float = 0.0


@dataclass(frozen=True)
class CrossingEstimate:
    pair: tuple
    t: float
    phi: float
    t_err: float = 0.0
    phi_err: float = 0.0
    z_crossing: float = 0.0
    t_gap: float = 0.0
    t_curvature: float = float("nan")


@dataclass(frozen=True)
class StaticParams:
    """Per-mode and per-crossing estimates (SI units) with standard errors.

    ``initial`` keeps the stage-wise estimates (slopes from asymptotic
    lines, t from the gap, φ from the dip ratio) before the global
    refinement.
    """

    modes: tuple
    crossings: tuple
    residual_rms: float
    initial: dict = field(default_factory=dict)

    def to_model(self, mech=None) -> SystemModel:
        modes = tuple(OpticalMode(m.label, m.kappa, min(m.kappa_in, m.kappa), m.slope_dis, 0.0, m.offset)
                      for m in self.modes)
        couplings = tuple(CouplingTerm(c.pair, c.t, c.phi) for c in self.crossings)
        if mech is None:
            return SystemModel(modes, couplings)
        return SystemModel(modes, couplings, mech)


def _topology(topology):
    topology = topology or {}
    n = topology.get("n_modes", 2)
    if n != 2:
        raise ConfigError("static extraction supports isolated two-mode crossings only", "topology.n_modes")
    pairs = topology.get("pairs", [("A", "B")])
    if len(pairs) != 1 or len(pairs[0]) != 2:
        raise ConfigError("expected exactly one crossing pair", "topology.pairs")
    return tuple(pairs[0])


def _slice_centers(grid, background):
    n_z = len(grid.z_values)
    centers = np.full((n_z, 2), np.nan)
    widths = np.full((n_z, 2), np.nan)
    kin = np.full((n_z, 2), np.nan)
    depths = np.full((n_z, 2), np.nan)
    for i in range(n_z):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", DegeneracyWarning)
                res = fit_slice(grid.detunings, grid.reflectance[i], 2, background=background)
        except (FitError, DegeneracyWarning):
            continue
        for k, p in enumerate(res.peaks):
            centers[i, k] = p.center
            widths[i, k] = p.fwhm
            depths[i, k] = p.depth / res.background.offset
            kin[i, k] = res.kappa_in(k)
    return centers, widths, depths, kin


def _line(z, y):
    A = np.column_stack([z, np.ones_like(z)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef  # slope, intercept


def _two_mode(labels, kappa, kin, slope, offset, t, phi):
    modes = tuple(OpticalMode(labels[k], kappa[k], kin[k], slope[k], 0.0, offset[k]) for k in range(2))
    return SystemModel(modes, (CouplingTerm(labels, t, phi),))


def _dip_ratio(model, z_c, detunings):
    # depth of the lower over the upper dip of a single slice
    row = reflection_map(model, [z_c], detunings)[0]
    lo_half = detunings < _mid_gap(model, z_c)
    return (1.0 - row[lo_half].min()) / max(1.0 - row[~lo_half].min(), 1e-300)


def _mid_gap(model, z):
    from ..model import eigen_branches

    return float(np.mean(eigen_branches(model, z)))


def extract_static_params(grid: SpectrumGrid, topology=None, *, background=False, refine=True) -> StaticParams:
    """Estimate slopes, linewidths, input couplings, t and φ of one crossing.

    Parameters
    ----------
    grid : SpectrumGrid
        Must cover the crossing and, on both sides, rows where the two
        dips are at least ``ASYMPTOTIC_SEPARATION`` times the minimum
        separation apart.
    topology : dict, optional
        ``{"n_modes": 2, "pairs": [(label_a, label_b)]}``.  ``label_a`` is
        assigned to the mode with the larger ``slope_dis``.
    background : bool
        Fit a sinusoidal baseline in the slice fits.
    refine : bool
        Run the global least-squares refinement (stage 6).

    Raises
    ------
    CoverageError
        If the crossing or an asymptotic window is missing.
    ModelMismatchError
        If the measured dip ratio at the crossing cannot be produced for
        any φ.
    """
    labels = _topology(topology)
    z = grid.z_values
    d = grid.detunings
    centers, widths, depths, kin = _slice_centers(grid, background)
    good = np.all(np.isfinite(centers), axis=1)
    if good.sum() < 2 * MIN_ASYMPTOTIC_ROWS + 1:
        raise CoverageError(f"only {int(good.sum())} slices show two resolved dips")
    sep = centers[:, 1] - centers[:, 0]
    sep_g = np.where(good, sep, np.inf)
    ic = int(np.argmin(sep_g))
    if ic == 0 or ic == len(z) - 1 or not (good[ic - 1] and good[ic + 1]):
        raise CoverageError("the minimum branch separation lies at the edge of the z range")
    # parabolic vertex of the separation around the minimum
    zz, ss = z[ic - 1: ic + 2], sep[ic - 1: ic + 2]
    a2, a1, a0 = np.polyfit(zz - z[ic], ss, 2)
    z_c = z[ic] - a1 / (2 * a2) if a2 > 0 else z[ic]
    sep_min = float(a0 - a1 * a1 / (4 * a2)) if a2 > 0 else float(sep[ic])
    t_gap = 0.5 * sep_min

    far = good & (sep >= ASYMPTOTIC_SEPARATION * sep_min)
    left = far & (z < z_c)
    right = far & (z > z_c)
    if left.sum() < MIN_ASYMPTOTIC_ROWS or right.sum() < MIN_ASYMPTOTIC_ROWS:
        raise CoverageError(
            f"asymptotic coverage too small: {int(left.sum())} rows left and {int(right.sum())} right "
            f"of the crossing with separation >= {ASYMPTOTIC_SEPARATION:g} x minimum (need {MIN_ASYMPTOTIC_ROWS})"
        )
    # left of the crossing the rising mode (A) is the lower branch
    zA = np.concatenate([z[left], z[right]])
    cA = np.concatenate([centers[left, 0], centers[right, 1]])
    cB = np.concatenate([centers[left, 1], centers[right, 0]])
    # the asymptotes of a hyperbola are lines through its center
    sA, oA = _line(zA, cA)
    sB, oB = _line(zA, cB)
    if not sA > sB:
        raise ModelMismatchError("branch slopes do not form an avoided crossing (slopes not separated)")
    kappa = np.array([
        np.mean(np.concatenate([widths[left, 0], widths[right, 1]])),
        np.mean(np.concatenate([widths[left, 1], widths[right, 0]])),
    ])
    kappa_in = np.array([
        np.mean(np.concatenate([kin[left, 0], kin[right, 1]])),
        np.mean(np.concatenate([kin[left, 1], kin[right, 0]])),
    ])
    dslope = sA - sB
    t_curv = dslope**2 / (2 * (2 * a2)) if a2 > 0 else float("nan")
    # shift offsets so both diagonals meet at the separation minimum
    mean_c = 0.5 * (centers[ic, 0] + centers[ic, 1])
    oA_c = mean_c - sA * z_c
    oB_c = mean_c - sB * z_c

    # φ from the dip-depth ratio at the crossing slice
    ratio = depths[ic, 0] / depths[ic, 1]
    phi0 = _phi_from_ratio(labels, kappa, kappa_in, (sA, sB), (oA_c, oB_c), t_gap, z[ic], d, ratio)

    initial = dict(slope_dis=(sA, sB), offset=(oA_c, oB_c), kappa=tuple(kappa), kappa_in=tuple(kappa_in),
                   t=t_gap, t_curvature=t_curv, phi=phi0, z_crossing=z_c)
    p0 = np.array([sA, sB, oA_c, oB_c, kappa[0], kappa[1],
                   np.clip(kappa_in[0] / kappa[0], 1e-6, 0.5), np.clip(kappa_in[1] / kappa[1], 1e-6, 0.5),
                   t_gap, phi0])
    if not refine:
        modes = (ModeEstimate(labels[0], kappa[0], kappa_in[0], sA, oA_c),
                 ModeEstimate(labels[1], kappa[1], kappa_in[1], sB, oB_c))
        cross = CrossingEstimate(labels, t_gap, phi0, z_crossing=z_c, t_gap=t_gap, t_curvature=t_curv)
        resid = reflection_map(_two_mode(labels, kappa, np.minimum(kappa_in, kappa), (sA, sB), (oA_c, oB_c),
                                         t_gap, phi0), z, d) - grid.reflectance
        return StaticParams(modes, (cross,), float(np.sqrt(np.mean(resid**2))), initial)
    return _refine(grid, labels, p0, initial, t_gap, t_curv, z_c)


def _phi_from_ratio(labels, kappa, kappa_in, slopes, offsets, t, z_c, detunings, ratio):
    kin = np.minimum(kappa_in, kappa)

    def f(phi):
        m = _two_mode(labels, kappa, kin, slopes, offsets, t, phi)
        return np.log(_dip_ratio(m, z_c, detunings)) - np.log(ratio)

    grid_phi = np.linspace(0.0, np.pi, 65)
    vals = np.array([f(p) for p in grid_phi])
    roots = []
    for k in range(len(grid_phi) - 1):
        if vals[k] == 0:
            roots.append(grid_phi[k])
        elif vals[k] * vals[k + 1] < 0:
            roots.append(brentq(f, grid_phi[k], grid_phi[k + 1], xtol=1e-12))
    if vals[-1] == 0:
        roots.append(grid_phi[-1])
    if not roots:
        lo, hi = np.exp(vals.min()) * ratio, np.exp(vals.max()) * ratio
        raise ModelMismatchError(
            f"dip ratio {ratio:.4g} at the crossing is outside the range [{lo:.4g}, {hi:.4g}] reachable for any phase"
        )
    # several roots: prefer the one nearest π/2 (the documented initial value)
    return float(min(roots, key=lambda r: abs(r - np.pi / 2)))


def _refine(grid, labels, p0, initial, t_gap, t_curv, z_c):
    z, d, R = grid.z_values, grid.detunings, grid.reflectance
    # work in MHz-like units so the parameters are of order one
    fs = max(abs(p0[4]), abs(p0[5]))
    zs = 1e-9
    scale = np.array([fs / zs, fs / zs, fs, fs, fs, fs, 1.0, 1.0, fs, 1.0])
    q0 = p0 / scale

    def build(q):
        p = q * scale
        kappa = p[4:6]
        return _two_mode(labels, kappa, p[6:8] * kappa, p[0:2], p[2:4], p[8], p[9])

    def resid(q):
        return (reflection_map(build(q), z, d) - R).ravel()

    lo = np.array([-np.inf, -np.inf, -np.inf, -np.inf, 1e-9, 1e-9, 0.0, 0.0, 1e-9, 0.0])
    hi = np.array([np.inf, np.inf, np.inf, np.inf, np.inf, np.inf, 1.0, 1.0, np.inf, np.pi])
    q0 = np.clip(q0, np.nextafter(lo, np.inf), np.nextafter(hi, -np.inf))
    res = least_squares(resid, q0, bounds=(lo, hi), method="trf", jac="3-point", x_scale="jac",
                        xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=200 * len(q0))
    if res.status <= 0:
        raise FitError(f"global refinement did not converge: {res.message}",
                       best_residual=float(np.linalg.norm(res.fun)), trace=res.message)
    p = res.x * scale
    dof = max(res.fun.size - res.x.size, 1)
    s2 = 2.0 * res.cost / dof
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac) * s2
        err = np.sqrt(np.clip(np.diag(cov), 0, None)) * np.abs(scale)
        # input coupling error through the ratio parametrization
        err_kin = np.hypot(err[6:8] * p[4:6], p[6:8] * err[4:6])
    except np.linalg.LinAlgError:
        err = np.full(p.shape, np.nan)
        err_kin = np.full(2, np.nan)
    kappa = p[4:6]
    modes = tuple(
        ModeEstimate(labels[k], kappa[k], p[6 + k] * kappa[k], p[k], p[2 + k],
                     err[4 + k], err_kin[k], err[k], err[2 + k])
        for k in range(2)
    )
    cross = CrossingEstimate(labels, p[8], p[9], err[8], err[9], z_crossing=z_c, t_gap=t_gap, t_curvature=t_curv)
    return StaticParams(modes, (cross,), float(np.sqrt(np.mean(res.fun**2))), initial)
