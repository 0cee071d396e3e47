"""Backend selection for the hot im2col/col2im kernels.

The compiled Cython extension is preferred; the pure-NumPy module is the
fallback when the extension was not built. Set CGNI_PURE_PYTHON=1 to force
the fallback (used by the parity tests and the benchmark).
"""

import os

from . import _kernels_py

if os.environ.get("CGNI_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

_num_threads = 1


def set_num_threads(n: int) -> None:
    """Set the worker count used by the compiled kernels (1 = sequential)."""
    global _num_threads
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _num_threads = int(n)


def get_num_threads() -> int:
    return _num_threads


def im2col(x, kh, kw, stride):
    return _impl.im2col(x, kh, kw, stride, _num_threads)


def col2im(cols, c, h, w, kh, kw, stride):
    return _impl.col2im(cols, c, h, w, kh, kw, stride, _num_threads)
