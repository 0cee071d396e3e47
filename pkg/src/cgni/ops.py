"""Dense NCHW tensor operations: forward and backward passes for every layer
the classifier needs, plus the SGD update rule.

Conventions
-----------
* Tensors are C-contiguous numpy arrays of shape (batch, channels, rows, cols),
  float32 for training and float64 for gradient checking. Ops preserve dtype.
* Convolution is cross-correlation (no kernel flip); kernels are stated in the
  orientation in which they are applied.
* Padding is symmetric zero padding; output spatial dims follow
  out = floor((in + 2*pad - kernel) / stride) + 1 and must be >= 1.
* Backward functions return exact analytic gradients of the forward op under
  sum reduction (the loss supplies the 1/batch scaling).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend


class ShapeError(ValueError):
    """Dimension mismatch; `axis` names the offending axis."""

    def __init__(self, axis: str, message: str):
        self.axis = axis
        super().__init__(f"{axis}: {message}")


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of one convolution or pooling stage."""

    kernel: tuple[int, int]
    stride: int
    pad: int
    in_channels: int
    out_channels: int

    def __post_init__(self):
        kh, kw = self.kernel
        if kh < 1 or kw < 1:
            raise ShapeError("kernel", f"kernel dims must be >= 1, got {self.kernel}")
        if self.stride < 1:
            raise ShapeError("stride", f"stride must be >= 1, got {self.stride}")
        if self.pad < 0:
            raise ShapeError("pad", f"pad must be >= 0, got {self.pad}")

    def out_hw(self, h: int, w: int) -> tuple[int, int]:
        kh, kw = self.kernel
        oh = (h + 2 * self.pad - kh) // self.stride + 1
        ow = (w + 2 * self.pad - kw) // self.stride + 1
        if oh < 1:
            raise ShapeError("height", f"input {h} too small for kernel {kh}, pad {self.pad}")
        if ow < 1:
            raise ShapeError("width", f"input {w} too small for kernel {kw}, pad {self.pad}")
        return oh, ow


@dataclass
class BnState:
    """Learned scale/shift plus running statistics of one batch-norm layer."""

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5
    stat_momentum: float = 0.9

    @classmethod
    def create(cls, channels: int, dtype=np.float32, eps: float = 1e-5, stat_momentum: float = 0.9):
        return cls(
            gamma=np.ones(channels, dtype=dtype),
            beta=np.zeros(channels, dtype=dtype),
            running_mean=np.zeros(channels, dtype=dtype),
            running_var=np.ones(channels, dtype=dtype),
            eps=eps,
            stat_momentum=stat_momentum,
        )


@dataclass
class SgdState:
    """Per-parameter velocity buffer for momentum SGD."""

    velocity: np.ndarray
    momentum: float = 0.9
    weight_decay: float = 0.0005

    @classmethod
    def for_param(cls, param: np.ndarray, momentum: float = 0.9, weight_decay: float = 0.0005):
        return cls(np.zeros_like(param), momentum, weight_decay)


def _pad(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return np.ascontiguousarray(x)
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def conv2d_forward(x, w, b, spec: ConvSpec, cols_out: list | None = None):
    """Cross-correlate x (n,ci,h,w) with w (co,ci,kh,kw), add per-channel bias.

    When `cols_out` is given, the padded-input column matrix is appended to it
    so the caller can hand it back to conv2d_backward and skip the re-im2col.
    """
    n, c, h, w_in = x.shape
    if c != spec.in_channels:
        raise ShapeError("channels", f"input has {c} channels, spec expects {spec.in_channels}")
    kh, kw = spec.kernel
    if w.shape != (spec.out_channels, spec.in_channels, kh, kw):
        raise ShapeError(
            "kernel",
            f"weight shape {w.shape} != {(spec.out_channels, spec.in_channels, kh, kw)}",
        )
    oh, ow = spec.out_hw(h, w_in)
    cols = _backend.im2col(_pad(x, spec.pad), kh, kw, spec.stride)
    if cols_out is not None:
        cols_out.append(cols)
    out = np.matmul(w.reshape(spec.out_channels, -1), cols)
    if b is not None:
        out += b[:, None]
    return out.reshape(n, spec.out_channels, oh, ow)


def conv2d_backward(x, w, spec: ConvSpec, grad_out, cols=None, need_grad_x=True):
    """Gradients of conv2d_forward: (grad_x, grad_w, grad_b).

    `cols` may be the column matrix captured during the forward pass;
    otherwise it is recomputed. grad_x is None when need_grad_x is false
    (first trainable layer in a chain does not need it).
    """
    n, c, h, w_in = x.shape
    kh, kw = spec.kernel
    oh, ow = spec.out_hw(h, w_in)
    if grad_out.shape != (n, spec.out_channels, oh, ow):
        raise ShapeError(
            "grad_out", f"got {grad_out.shape}, expected {(n, spec.out_channels, oh, ow)}"
        )
    gout = grad_out.reshape(n, spec.out_channels, oh * ow)
    grad_b = grad_out.sum(axis=(0, 2, 3))
    if cols is None:
        cols = _backend.im2col(_pad(x, spec.pad), kh, kw, spec.stride)
    grad_w = np.tensordot(gout, cols, axes=([0, 2], [0, 2])).reshape(w.shape)
    grad_x = None
    if need_grad_x:
        gcols = np.matmul(w.reshape(spec.out_channels, -1).T, gout)
        hp, wp = h + 2 * spec.pad, w_in + 2 * spec.pad
        gxp = _backend.col2im(np.ascontiguousarray(gcols), c, hp, wp, kh, kw, spec.stride)
        grad_x = gxp if spec.pad == 0 else gxp[:, :, spec.pad : spec.pad + h, spec.pad : spec.pad + w_in]
    return grad_x, grad_w, grad_b


def _pool_denominator(h, w, kernel, stride, pad, include_pad, dtype):
    """Per-window divisor: kernel area, or the count of non-pad cells."""
    kh = kw = kernel
    if include_pad:
        oh = (h + 2 * pad - kh) // stride + 1
        ow = (w + 2 * pad - kw) // stride + 1
        return np.full((1, oh * ow), float(kh * kw), dtype=dtype)
    mask = _pad(np.ones((1, 1, h, w), dtype=dtype), pad)
    counts = _backend.im2col(mask, kh, kw, stride).sum(axis=1)
    return counts  # (1, oh*ow)


def avg_pool2d(x, kernel: int, stride: int, pad: int = 0, include_pad: bool = False):
    """Mean over each kernel window; padded cells are excluded from the
    denominator unless include_pad is set (exclusion preserves constants)."""
    n, c, h, w = x.shape
    spec = ConvSpec((kernel, kernel), stride, pad, 1, 1)
    oh, ow = spec.out_hw(h, w)
    flat = _pad(x.reshape(n * c, 1, h, w), pad)
    cols = _backend.im2col(flat, kernel, kernel, stride)
    denom = _pool_denominator(h, w, kernel, stride, pad, include_pad, x.dtype)
    out = cols.sum(axis=1) / denom
    return out.reshape(n, c, oh, ow)


def avg_pool2d_backward(x_shape, kernel: int, stride: int, pad: int, include_pad: bool, grad_out):
    """Distribute each output gradient uniformly over its window's
    contributing cells (non-pad cells only when include_pad is false)."""
    n, c, h, w = x_shape
    spec = ConvSpec((kernel, kernel), stride, pad, 1, 1)
    oh, ow = spec.out_hw(h, w)
    if grad_out.shape != (n, c, oh, ow):
        raise ShapeError("grad_out", f"got {grad_out.shape}, expected {(n, c, oh, ow)}")
    denom = _pool_denominator(h, w, kernel, stride, pad, include_pad, grad_out.dtype)
    g = grad_out.reshape(n * c, 1, oh * ow) / denom[None, :, :]
    gcols = np.broadcast_to(g, (n * c, kernel * kernel, oh * ow))
    hp, wp = h + 2 * pad, w + 2 * pad
    gxp = _backend.col2im(np.ascontiguousarray(gcols), 1, hp, wp, kernel, kernel, stride)
    gxp = gxp.reshape(n, c, hp, wp)
    if pad:
        gxp = gxp[:, :, pad : pad + h, pad : pad + w]
    return gxp


@dataclass
class BnCache:
    x_hat: np.ndarray
    inv_std: np.ndarray
    gamma: np.ndarray


def batch_norm(x, state: BnState, train: bool):
    """Per-channel normalization; returns (out, cache). Train mode uses batch
    statistics (biased variance) and folds them into the running averages via
    running <- stat_momentum*running + (1-stat_momentum)*batch; infer mode
    uses the running statistics and returns cache=None."""
    n, c, h, w = x.shape
    gamma = state.gamma.reshape(1, c, 1, 1)
    beta = state.beta.reshape(1, c, 1, 1)
    if train:
        if n * h * w < 2:
            raise ShapeError("batch", f"train-mode statistics need n*h*w >= 2, got {n * h * w}")
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        m = state.stat_momentum
        state.running_mean = (m * state.running_mean + (1.0 - m) * mean).astype(x.dtype)
        state.running_var = (m * state.running_var + (1.0 - m) * var).astype(x.dtype)
    else:
        mean = state.running_mean
        var = state.running_var
    inv_std = 1.0 / np.sqrt(var + state.eps)
    x_hat = (x - mean.reshape(1, c, 1, 1)) * inv_std.reshape(1, c, 1, 1)
    out = gamma * x_hat + beta
    cache = BnCache(x_hat, inv_std, state.gamma) if train else None
    return out, cache


def batch_norm_backward(grad_out, cache: BnCache):
    """Gradients through train-mode batch_norm: (grad_x, grad_gamma, grad_beta)."""
    n, c, h, w = grad_out.shape
    m = n * h * w
    x_hat = cache.x_hat
    grad_beta = grad_out.sum(axis=(0, 2, 3))
    grad_gamma = (grad_out * x_hat).sum(axis=(0, 2, 3))
    dxhat = grad_out * cache.gamma.reshape(1, c, 1, 1)
    s1 = dxhat.sum(axis=(0, 2, 3), keepdims=True)
    s2 = (dxhat * x_hat).sum(axis=(0, 2, 3), keepdims=True)
    inv_std = cache.inv_std.reshape(1, c, 1, 1)
    grad_x = (inv_std / m) * (m * dxhat - s1 - x_hat * s2)
    return grad_x, grad_gamma, grad_beta


def relu(x):
    return np.maximum(x, 0)


def relu_backward(grad_out, x):
    # Subgradient at exactly 0 is 0.
    return grad_out * (x > 0)


def linear(x, w, b):
    """y = x @ w.T + b for x (n, in), w (out, in), b (out,)."""
    if x.ndim != 2:
        raise ShapeError("features", f"expected 2-d input, got shape {x.shape}")
    if x.shape[1] != w.shape[1]:
        raise ShapeError("features", f"input has {x.shape[1]} features, weight expects {w.shape[1]}")
    return x @ w.T + b


def linear_backward(grad_out, x, w):
    grad_x = grad_out @ w
    grad_w = grad_out.T @ x
    grad_b = grad_out.sum(axis=0)
    return grad_x, grad_w, grad_b


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy over the batch.

    Returns (loss, probs, grad_logits) with grad = (probs - onehot)/n; the
    softmax is stabilized by row-max subtraction.
    """
    n, k = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ShapeError("labels", f"got shape {labels.shape}, expected ({n},)")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"label ids must be in [0, {k - 1}]")
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), labels].mean())
    grad = probs.copy()
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return loss, probs, grad


def sgd_update(param, grad, state: SgdState, lr: float):
    """Momentum SGD with L2 weight decay, velocity carrying the learning rate:
    g = grad + wd*param; v <- momentum*v - lr*g; param <- param + v.
    Mutates param and state.velocity in place."""
    if param.shape != grad.shape:
        raise ShapeError("param", f"param {param.shape} vs grad {grad.shape}")
    g = grad + state.weight_decay * param
    state.velocity *= state.momentum
    state.velocity -= lr * g
    param += state.velocity
    return param
