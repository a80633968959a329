"""Numpy fallback for the compiled kernels in ``_ckernels.pyx``."""
from __future__ import annotations

import numpy as np

FLOOR = 1e-15


def entropy_prox(z: np.ndarray, g: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        t = np.log(np.maximum(z[lo:hi], FLOOR)) - g[lo:hi]
        t = np.exp(t - t.max())
        out[lo:hi] = t / t.sum()
    return out


def project_simplex(v: np.ndarray) -> np.ndarray:
    s = np.sort(v)[::-1]
    cumsum = np.cumsum(s)
    ks = np.arange(1, v.shape[0] + 1)
    ts = (cumsum - 1.0) / ks
    rho = np.nonzero(s - ts > 0)[0][-1]
    return np.maximum(v - ts[rho], 0.0)


def kl_divergence(a: np.ndarray, b: np.ndarray) -> float:
    mask = a > 0
    return float(np.sum(a[mask] * np.log(a[mask] / b[mask])))
