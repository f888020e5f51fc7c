"""Kernel backend selection.

The compiled module is preferred; set ``FIMLAB_PURE_PYTHON=1`` to force the
NumPy fallback (useful for debugging and for the backend benchmark).
"""
import os

from . import _kernels_py

if os.environ.get("FIMLAB_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
ss_nll = _impl.ss_nll
ss_nll_derivs = _impl.ss_nll_derivs

python_backend = _kernels_py
