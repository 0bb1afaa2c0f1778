"""Hot numeric kernels: 1D convolution encoder forward/backward and Adam.

Each kernel has a numba ``@njit`` build and a pure-numpy build.  The numpy
path is selected by setting the environment variable ``INSIGHTRANK_NO_NUMBA``
(any non-empty value) before import, or used automatically when numba is not
installed.  ``benchmarks/bench_kernels.py`` compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = bool(os.environ.get("INSIGHTRANK_NO_NUMBA"))

if not _DISABLE:
    try:
        from numba import njit

        USING_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USING_NUMBA = False
else:
    USING_NUMBA = False


def _conv1d_pool_forward_np(x, w, b):
    """Forward pass: tanh conv activations max-pooled over window offsets.

    x: (L,), w: (F, r), b: (F,).  Returns (pooled (F,), argmax (F,) int64).
    """
    L = x.shape[0]
    r = w.shape[1]
    n_offsets = L - r + 1
    windows = np.lib.stride_tricks.sliding_window_view(x, r)  # (n_offsets, r)
    act = np.tanh(w @ windows.T + b[:, None])  # (F, n_offsets)
    arg = np.argmax(act, axis=1)
    pooled = act[np.arange(w.shape[0]), arg]
    return pooled, arg.astype(np.int64), n_offsets


def _conv1d_pool_backward_np(x, w, b, arg, pooled, dpooled):
    """Gradients of the pooled outputs w.r.t. x, w and b."""
    F, r = w.shape
    dx = np.zeros_like(x)
    dw = np.zeros_like(w)
    db = np.zeros_like(b)
    dpre = dpooled * (1.0 - pooled * pooled)
    for f in range(F):
        off = arg[f]
        seg = x[off : off + r]
        dw[f] += dpre[f] * seg
        db[f] += dpre[f]
        dx[off : off + r] += dpre[f] * w[f]
    return dx, dw, db


def _adam_update_np(param, grad, m, v, lr, beta1, beta2, eps, step):
    """In-place Adam update with bias correction on flat float64 arrays."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**step)
    v_hat = v / (1.0 - beta2**step)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


if USING_NUMBA:

    @njit(cache=True)
    def _conv1d_pool_forward_nb(x, w, b):
        F, r = w.shape
        L = x.shape[0]
        n_offsets = L - r + 1
        pooled = np.empty(F, dtype=np.float64)
        arg = np.empty(F, dtype=np.int64)
        for f in range(F):
            best = -2.0
            best_off = 0
            for off in range(n_offsets):
                acc = b[f]
                for t in range(r):
                    acc += w[f, t] * x[off + t]
                a = np.tanh(acc)
                if a > best:
                    best = a
                    best_off = off
            pooled[f] = best
            arg[f] = best_off
        return pooled, arg, n_offsets

    @njit(cache=True)
    def _conv1d_pool_backward_nb(x, w, b, arg, pooled, dpooled):
        F, r = w.shape
        dx = np.zeros_like(x)
        dw = np.zeros_like(w)
        db = np.zeros_like(b)
        for f in range(F):
            dpre = dpooled[f] * (1.0 - pooled[f] * pooled[f])
            off = arg[f]
            for t in range(r):
                dw[f, t] += dpre * x[off + t]
                dx[off + t] += dpre * w[f, t]
            db[f] += dpre
        return dx, dw, db

    @njit(cache=True)
    def _adam_update_nb(param, grad, m, v, lr, beta1, beta2, eps, step):
        c1 = 1.0 - beta1**step
        c2 = 1.0 - beta2**step
        for i in range(param.shape[0]):
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i]
            param[i] -= lr * (m[i] / c1) / (np.sqrt(v[i] / c2) + eps)

    conv1d_pool_forward = _conv1d_pool_forward_nb
    conv1d_pool_backward = _conv1d_pool_backward_nb
    adam_update = _adam_update_nb
else:
    conv1d_pool_forward = _conv1d_pool_forward_np
    conv1d_pool_backward = _conv1d_pool_backward_np
    adam_update = _adam_update_np
