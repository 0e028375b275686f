"""Finite-difference oracle shared by the gradient-check tests.

Deliberately independent of the autodiff engine: it only ever calls a
forward function on plain float64 numpy arrays.
"""

import numpy as np


def central_diff(f, arrays, index, step=1e-5):
    """d f(*arrays) / d arrays[index] via central differences (f returns a scalar)."""
    work = [np.array(a, dtype=np.float64) for a in arrays]
    target = work[index]
    grad = np.zeros_like(target)
    flat = target.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f(*work)
        flat[i] = orig - step
        fm = f(*work)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return grad


def max_rel_err(analytic, numeric):
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / denom))
