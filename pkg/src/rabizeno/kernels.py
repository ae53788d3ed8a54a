"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``RABIZENO_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
se_rk4 = _kernels_py.se_rk4

if os.environ.get("RABIZENO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        se_rk4 = _compiled.se_rk4
        BACKEND = "cython"

__all__ = ["BACKEND", "se_rk4"]
