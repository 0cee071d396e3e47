"""Central finite-difference gradient checking.

Run in float64: the probes perturb arrays in place and compare the analytic
gradients against (f(x+eps) - f(x-eps)) / (2*eps) elementwise.
"""

import numpy as np


def numerical_gradient(f, x, eps=1e-5):
    """Central-difference gradient of scalar-valued f() with respect to x,
    which f must read on every call. x is perturbed and restored in place."""
    grad = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_g = grad.reshape(-1)
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + eps
        f_plus = f()
        flat_x[i] = orig - eps
        f_minus = f()
        flat_x[i] = orig
        flat_g[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def max_rel_error(analytic, numeric):
    """max over elements of |a - n| / max(1, |a|, |n|)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.shape != n.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {n.shape}")
    if a.size == 0:
        return 0.0
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom))


def grad_check(f, wrt, analytic, eps=1e-5):
    """Worst-case relative error between analytic gradients and central
    differences of f over every array in `wrt`.

    f: () -> scalar loss, recomputed from the current contents of wrt.
    wrt: list of float64 arrays f depends on (perturbed in place).
    analytic: matching list of analytic gradient arrays.
    """
    if not 1e-7 <= eps <= 1e-4:
        raise ValueError(f"eps {eps} outside [1e-7, 1e-4]")
    worst = 0.0
    for x, g in zip(wrt, analytic, strict=True):
        if x.dtype != np.float64:
            raise TypeError("gradient checks must run in float64")
        worst = max(worst, max_rel_error(g, numerical_gradient(f, x, eps)))
    return worst
