"""Pure-NumPy implementations of the hot data-movement kernels.

Both backends expose the same two functions with identical output layout, so
everything above them (convolution, pooling, gradients) is backend-agnostic:

    im2col(x, kh, kw, stride)           -> (n, c*kh*kw, oh*ow)
    col2im(cols, c, h, w, kh, kw, stride) -> (n, c, h, w)

`x` is the already-padded input. The column layout indexes as
cols[n, (ci*kh + i)*kw + j, oy*ow + ox]. col2im accumulates into each input
cell in fixed (i, j) window order, so results are bit-reproducible and match
the compiled backend exactly.
"""

import numpy as np


def im2col(x, kh, kw, stride, num_threads=1):
    n, c, h, w = x.shape
    oh = (h - kh) // stride + 1
    ow = (w - kw) // stride + 1
    if oh < 1 or ow < 1:
        raise ValueError(f"window {kh}x{kw} does not fit input {h}x{w}")
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = x[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
    return cols.reshape(n, c * kh * kw, oh * ow)


def col2im(cols, c, h, w, kh, kw, stride, num_threads=1):
    n = cols.shape[0]
    oh = (h - kh) // stride + 1
    ow = (w - kw) // stride + 1
    cols = cols.reshape(n, c, kh, kw, oh, ow)
    x = np.zeros((n, c, h, w), dtype=cols.dtype)
    # Within one (i, j) slab the strided destination slices never overlap, so
    # += is safe; looping (i, j) in order fixes the accumulation order per cell.
    for i in range(kh):
        for j in range(kw):
            x[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += cols[:, :, i, j]
    return x
