"""Kernel backend selected at import time.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``WKELLY_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy implementation is used.
"""
import os

from . import _kernels_py

_force_py = os.environ.get("WKELLY_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_py:
        raise ImportError("pure-python backend requested")
    from . import _kernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

solve_quad_entropy = _impl.solve_quad_entropy
lambertw_log = _impl.lambertw_log

__all__ = ["BACKEND", "solve_quad_entropy", "lambertw_log"]
