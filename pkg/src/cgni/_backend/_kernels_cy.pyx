# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled im2col / col2im kernels.

Same contract and column layout as _kernels_py; see that module for the
layout documentation. Parallelised over (batch, channel) with OpenMP; each
output cell is written (im2col) or accumulated in fixed (i, j) window order
(col2im) by exactly one thread, so results are bit-identical for any thread
count and match the pure-NumPy backend.
"""

import numpy as np

cimport cython
cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()

ctypedef fused floating:
    float
    double


def im2col(x, int kh, int kw, int stride, int num_threads=1):
    oh = (x.shape[2] - kh) // stride + 1
    ow = (x.shape[3] - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise ValueError(f"window {kh}x{kw} does not fit input {x.shape[2]}x{x.shape[3]}")
    cols = np.empty((x.shape[0], x.shape[1] * kh * kw, oh * ow), dtype=x.dtype)
    if x.dtype == np.float32:
        _im2col_impl[float](x, cols, kh, kw, stride, num_threads)
    elif x.dtype == np.float64:
        _im2col_impl[double](x, cols, kh, kw, stride, num_threads)
    else:
        raise TypeError(f"unsupported dtype {x.dtype}")
    return cols


def col2im(cols, int c, int h, int w, int kh, int kw, int stride, int num_threads=1):
    x = np.zeros((cols.shape[0], c, h, w), dtype=cols.dtype)
    if cols.dtype == np.float32:
        _col2im_impl[float](cols, x, kh, kw, stride, num_threads)
    elif cols.dtype == np.float64:
        _col2im_impl[double](cols, x, kh, kw, stride, num_threads)
    else:
        raise TypeError(f"unsupported dtype {cols.dtype}")
    return x


@cython.boundscheck(False)
@cython.wraparound(False)
cdef void _im2col_impl(floating[:, :, :, ::1] x, floating[:, :, ::1] cols,
                       int kh, int kw, int stride, int num_threads):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t oh = (h - kh) // stride + 1
    cdef Py_ssize_t ow = (w - kw) // stride + 1
    cdef Py_ssize_t nc = n * c
    cdef Py_ssize_t p, bi, ci, i, j, oy, ox, row
    for p in prange(nc, nogil=True, num_threads=num_threads, schedule="static"):
        bi = p // c
        ci = p % c
        for i in range(kh):
            for j in range(kw):
                row = (ci * kh + i) * kw + j
                for oy in range(oh):
                    for ox in range(ow):
                        cols[bi, row, oy * ow + ox] = x[bi, ci, oy * stride + i, ox * stride + j]


@cython.boundscheck(False)
@cython.wraparound(False)
cdef void _col2im_impl(floating[:, :, ::1] cols, floating[:, :, :, ::1] x,
                       int kh, int kw, int stride, int num_threads):
    cdef Py_ssize_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t oh = (h - kh) // stride + 1
    cdef Py_ssize_t ow = (w - kw) // stride + 1
    cdef Py_ssize_t nc = n * c
    cdef Py_ssize_t p, bi, ci, i, j, oy, ox, row
    for p in prange(nc, nogil=True, num_threads=num_threads, schedule="static"):
        bi = p // c
        ci = p % c
        for i in range(kh):
            for j in range(kw):
                row = (ci * kh + i) * kw + j
                for oy in range(oh):
                    for ox in range(ow):
                        x[bi, ci, oy * stride + i, ox * stride + j] += cols[bi, row, oy * ow + ox]
