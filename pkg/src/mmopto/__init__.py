"""Multimode cavity optomechanics near avoided crossings.

Subpackages and modules:

* :mod:`mmopto.model` -- modes, couplings, mode matrix, susceptibility, reflection
* :mod:`mmopto.dynamics` -- self-energy, optical spring/damping, Brownian spectra
* :mod:`mmopto.fitkit` -- slice fits, static parameter extraction, dynamics fits, drift
* :mod:`mmopto.oracle` -- time-domain integration used to check the linear theory
* :mod:`mmopto.cli` -- the ``mmopto`` command
"""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    CouplingVector,
    PsdResult,
    SelfEnergyResult,
    brownian_psd,
    coupling_vector,
    modulation_response,
    photon_number,
    self_energy,
    spring_damping_sweep,
)
from .errors import (  # noqa: E402
    BoundaryWarning,
    ConfigError,
    CoverageError,
    CrossingError,
    DegeneracyWarning,
    FitError,
    InstabilityError,
    InsufficientDataError,
    MmoptoError,
    ModelMismatchError,
    ParseError,
    ValidityWarning,
)
from .model import (  # noqa: E402
    CouplingTerm,
    DriveConfig,
    MechanicalOscillator,
    Modulation,
    OpticalMode,
    SystemModel,
    eigen_branches,
    find_crossings,
    mode_matrix,
    quadratic_coefficient,
    reflection,
    steady_state,
    susceptibility,
)
