"""Kernel backend selection.

The compiled Cython extension is preferred; the numpy implementation is used
when it is missing or when the environment variable ``DENSIFY_PURE_PYTHON``
is set to a non-empty value other than ``0``.
"""
import os

from . import _kernels_py

_force_python = os.environ.get("DENSIFY_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    kernels = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "compiled"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
