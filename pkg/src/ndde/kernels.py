"""Kernel backend selection.

The compiled extension is preferred; setting ``NDDE_PURE_PYTHON=1`` in the
environment, or a missing build, selects the pure-Python implementation.
"""
import os

from . import _kernels_py

python_euler_elementwise = _kernels_py.euler_elementwise

try:
    from ._kernels import euler_elementwise as compiled_euler_elementwise
except ImportError:  # pragma: no cover - depends on the build
    compiled_euler_elementwise = None

if compiled_euler_elementwise is not None and not os.environ.get("NDDE_PURE_PYTHON"):
    euler_elementwise = compiled_euler_elementwise
    BACKEND = "compiled"
else:
    euler_elementwise = python_euler_elementwise
    BACKEND = "python"

__all__ = [
    "BACKEND",
    "euler_elementwise",
    "python_euler_elementwise",
    "compiled_euler_elementwise",
]
