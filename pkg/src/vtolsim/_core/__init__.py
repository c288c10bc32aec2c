"""Numeric core: compiled kernels with a pure-Python fallback.

The compiled extension is optional; if it is missing (or the
``VTOLSIM_PURE_PYTHON`` environment variable is set to a non-empty value)
the pure-Python implementation is used.  Both expose the same functions
with identical semantics.
"""

import os

from . import pykernels as _py

if os.environ.get("VTOLSIM_PURE_PYTHON"):
    _impl = _py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _py

BACKEND = _impl.BACKEND_NAME

rot_exp = _impl.rot_exp
error_quat = _impl.error_quat
regressor = _impl.regressor
plant_rk4_step = _impl.plant_rk4_step


def available_backends():
    """Name -> module map of every backend importable in this environment."""
    out = {"python": _py}
    try:
        from . import _kernels  # type: ignore[attr-defined]
        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
