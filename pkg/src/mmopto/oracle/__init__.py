"""Brute-force time-domain oracle for the linearized response."""

from ._backend import BACKEND, HAVE_COMPILED, get_kernel
from .compare import OracleRow, all_passed, oracle_compare, oracle_point, weak_coupling_bound
from .integrate import InitialState, Trajectory, integrate, max_step, static_equilibrium
from .ringdown import Ringdown, ringdown_estimate

__all__ = [
    "BACKEND", "HAVE_COMPILED", "get_kernel",
    "InitialState", "Trajectory", "integrate", "max_step", "static_equilibrium",
    "Ringdown", "ringdown_estimate",
    "OracleRow", "oracle_compare", "oracle_point", "all_passed", "weak_coupling_bound",
]
