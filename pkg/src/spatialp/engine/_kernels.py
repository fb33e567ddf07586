"""Pick the selection kernel at import time.

The compiled extension is used when it was built and the
``SPATIALP_PURE_PYTHON`` environment variable is unset or ``0``.
"""
import os

from . import _kernel_py as python_kernel

try:
    from . import _kernel_cy as compiled_kernel
except ImportError:  # extension not built
    compiled_kernel = None

if compiled_kernel is not None and os.environ.get("SPATIALP_PURE_PYTHON", "0") in ("", "0"):
    default_kernel = compiled_kernel
else:
    default_kernel = python_kernel


def get_kernel(name=None):
    if name is None:
        return default_kernel
    if name == "python":
        return python_kernel
    if name in ("cython", "compiled"):
        if compiled_kernel is None:
            raise ImportError("compiled kernel is not built; run `pip install -e .`")
        return compiled_kernel
    raise ValueError(f"unknown kernel {name!r}")
