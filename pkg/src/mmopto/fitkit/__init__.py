"""Parameter estimation: slice fits, static extraction, dynamics fits, drift removal."""

from .drift import DriftModel, DriftResult, drift_subtract
from .dynamics_fit import DynamicsFit, fit_dynamics
from .slices import Background, Peak, SliceFitResult, fit_slice
from .static import (
    CrossingEstimate,
    ModeEstimate,
    SpectrumGrid,
    StaticParams,
    extract_static_params,
    synthesize_grid,
)

__all__ = [
    "fit_slice", "SliceFitResult", "Peak", "Background",
    "SpectrumGrid", "StaticParams", "ModeEstimate", "CrossingEstimate",
    "synthesize_grid", "extract_static_params",
    "fit_dynamics", "DynamicsFit",
    "drift_subtract", "DriftModel", "DriftResult",
]
