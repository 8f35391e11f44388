"""Vectorized NumPy implementation of the mode-wise propagation kernels.

All kernels act on raw arrays: ``ksq`` is the vector of squared Euclidean
mode norms, so the free flow multiplies mode ``k`` by ``exp(-4j*pi^2*ksq*t)``
and the backward flow by its conjugate.  Step sources are given by their
breakpoints ``bp`` (length m+1) and a stacked coefficient matrix ``pieces``
of shape (m, n_modes); piece ``i`` is active on ``[bp[i], bp[i+1])``.
"""

import numpy as np

BACKEND_NAME = "numpy"

_W = 4.0 * np.pi * np.pi


def free_phase(ksq, t):
    """Phase factors of the free flow at time t, shape (n,)."""
    return np.exp(-1j * _W * t * ksq)


def free_phase_many(ksq, ts):
    """Free-flow phase factors for a batch of times, shape (nt, n)."""
    return np.exp(-1j * _W * np.multiply.outer(np.asarray(ts, dtype=float), ksq))


def _segment_weights(ksq, alpha, delta):
    """Per-mode integrals of the backward-flow phase over [alpha, alpha+delta).

    alpha and delta are broadcast-compatible arrays; the result has shape
    broadcast(alpha, delta) x n.  The zero mode integrates to delta; the
    difference of complex exponentials is assembled from half-angle sines so
    short segments keep full absolute accuracy.
    """
    w = _W * ksq
    alpha = np.asarray(alpha, dtype=float)[..., None]
    delta = np.asarray(delta, dtype=float)[..., None]
    wd = w * delta
    num = -2.0 * np.sin(0.5 * wd) ** 2 + 1j * np.sin(wd)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(1j * w * alpha) * num / (1j * w)
    zero = ksq == 0.0
    if np.any(zero):
        out[..., zero] = delta
    return out


def segment_transform(bp, pieces, ksq, a, b):
    """Backward-flow integral of the step source over [a, b), shape (n,)."""
    lo = np.maximum(bp[:-1], a)
    hi = np.minimum(bp[1:], b)
    d = hi - lo
    mask = d > 0.0
    if not np.any(mask):
        return np.zeros(ksq.shape[0], dtype=complex)
    weights = _segment_weights(ksq, lo[mask], d[mask])
    return np.einsum("ij,ij->j", pieces[mask], weights)


def segment_transform_batch(bp, pieces, ksq, bounds):
    """segment_transform for a batch of intervals, shape (nb, n)."""
    out = np.empty((bounds.shape[0], ksq.shape[0]), dtype=complex)
    for i in range(bounds.shape[0]):
        out[i] = segment_transform(bp, pieces, ksq, bounds[i, 0], bounds[i, 1])
    return out


def prefix_transform_eval(bp, pieces, ksq, ts):
    """Backward-flow integrals over [bp[0], t) for a batch of times t.

    Returns shape (nt, n).  Uses cumulative per-piece integrals so each
    evaluation costs one partial-piece correction.
    """
    m = pieces.shape[0]
    full = _segment_weights(ksq, bp[:-1], np.diff(bp))
    cum = np.empty((m + 1, ksq.shape[0]), dtype=complex)
    cum[0] = 0.0
    np.cumsum(pieces * full, axis=0, out=cum[1:])
    ts = np.asarray(ts, dtype=float)
    idx = np.clip(np.searchsorted(bp, ts, side="right") - 1, 0, m - 1)
    partial = _segment_weights(ksq, bp[idx], ts - bp[idx])
    return cum[idx] + pieces[idx] * partial
