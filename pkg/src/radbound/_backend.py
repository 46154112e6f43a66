"""Pick the compiled kernels when available, else the pure-Python twins.

Set ``RADBOUND_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pycore

if os.environ.get("RADBOUND_PURE_PYTHON"):
    _impl = _pycore
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _pycore
        BACKEND = "python"

jacobi_eigh = _impl.jacobi_eigh
min_sq_distance = _impl.min_sq_distance

__all__ = ["BACKEND", "jacobi_eigh", "min_sq_distance"]
