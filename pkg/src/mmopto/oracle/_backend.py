"""Pick the compiled integrator when available, the numpy one otherwise.

Setting ``MMOPTO_FORCE_PYTHON=1`` in the environment selects the fallback
even when the extension is built (used by the benchmark and the
equivalence tests).
"""

import os

from . import _rk_py

try:
    from . import _rk as _rk_c
except ImportError:  # extension not built
    _rk_c = None


def get_kernel(name=None):
    """Return ``(name, dopri5)`` for ``name`` in {"compiled", "python", None}."""
    if name is None:
        force = os.environ.get("MMOPTO_FORCE_PYTHON", "").strip().lower() in {"1", "true", "yes"}
        name = "python" if (force or _rk_c is None) else "compiled"
    if name == "compiled":
        if _rk_c is None:
            raise ImportError("the compiled integrator mmopto.oracle._rk is not built")
        return name, _rk_c.dopri5
    if name == "python":
        return name, _rk_py.dopri5
    raise ValueError(f"unknown backend {name!r}")


HAVE_COMPILED = _rk_c is not None
BACKEND = get_kernel()[0]
