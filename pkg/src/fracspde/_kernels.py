"""Hot loops with two implementations each.

The compiled variants are plain loops under numba; the numpy variants are
vectorized and used when numba is disabled. Both compute the same sums and
are compared in the test suite and in benchmarks/bench_backends.py.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit


@njit
def _scatter_add_loop(out, idx, vals):
    for i in range(idx.shape[0]):
        out[idx[i]] += vals[i]
    return out


def _scatter_add_numpy(out, idx, vals):
    np.add.at(out, idx, vals)
    return out


@njit
def _causal_sum_loop(w, f):
    # out[k] = sum_{m<k} w[k-m] * f[m]
    k_steps, n = f.shape
    out = np.zeros((k_steps, n), dtype=np.complex128)
    for k in range(1, k_steps):
        for m in range(k):
            lag = k - m
            for j in range(n):
                out[k, j] += w[lag, j] * f[m, j]
    return out


def _causal_sum_numpy(w, f):
    k_steps, n = f.shape
    out = np.zeros((k_steps, n), dtype=np.complex128)
    for k in range(1, k_steps):
        out[k] = np.sum(w[k:0:-1] * f[:k], axis=0)
    return out


def scatter_add(out: np.ndarray, idx: np.ndarray, vals: np.ndarray, backend: str | None = None):
    """out[idx[i]] += vals[i] with repeated indices accumulated, in place."""
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    vals = np.ascontiguousarray(vals, dtype=out.dtype)
    if _pick(backend) == "numba":
        return _scatter_add_loop(out, idx, vals)
    return _scatter_add_numpy(out, idx, vals)


def causal_sum(w: np.ndarray, f: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Discrete Duhamel sum over strictly earlier rows.

    w has shape (K+1, n) indexed by lag (row 0 unused), f has shape (K, n).
    Row k of the result only reads rows m < k of f.
    """
    w = np.ascontiguousarray(w, dtype=np.complex128)
    f = np.ascontiguousarray(f, dtype=np.complex128)
    if w.shape[0] < f.shape[0] or w.shape[1] != f.shape[1]:
        raise ValueError(f"lag table {w.shape} does not cover rows {f.shape}")
    if _pick(backend) == "numba":
        return _causal_sum_loop(w, f)
    return _causal_sum_numpy(w, f)


def _pick(backend):
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {backend!r}")
    if backend == "numba" and not USE_NUMBA:
        raise RuntimeError("numba backend requested but numba is disabled")
    return backend
