"""Exact Euclidean distance transform of a binary map.

Two separable passes on squared distances: a linear scan for the 1-D
distance along columns, then the lower envelope of parabolas along rows
(Felzenszwalb & Huttenlocher), then a square root.
"""

import numpy as np
from numba import njit

_INF = 1e20


def max_dist(shape):
    """Sentinel used when the map has no set pixel: the image diagonal."""
    return float(np.hypot(shape[0], shape[1]))


@njit(cache=True)
def _envelope_1d(f, n, d, v, z):
    # f: squared distances along one line; writes the transformed line to d
    k = 0
    v[0] = 0
    z[0] = -_INF
    z[1] = _INF
    for q in range(1, n):
        fq = f[q] + q * q
        s = ((fq - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]))
        while s <= z[k]:
            k -= 1
            s = ((fq - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]))
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = _INF
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        dq = q - v[k]
        d[q] = dq * dq + f[v[k]]


@njit(cache=True)
def _edt_squared(mask):
    h, w = mask.shape
    # pass 1: vertical distance to the nearest set pixel, scanned row by row
    g = np.empty((h, w))
    for c in range(w):
        g[0, c] = 0.0 if mask[0, c] else _INF
    for r in range(1, h):
        for c in range(w):
            g[r, c] = 0.0 if mask[r, c] else g[r - 1, c] + 1.0
    for r in range(h - 2, -1, -1):
        for c in range(w):
            if g[r + 1, c] + 1.0 < g[r, c]:
                g[r, c] = g[r + 1, c] + 1.0
    for r in range(h):
        for c in range(w):
            if g[r, c] >= _INF:
                g[r, c] = _INF
            else:
                g[r, c] = g[r, c] * g[r, c]
    # pass 2: lower envelope of parabolas along each row
    d = np.empty(w)
    v = np.empty(w, dtype=np.int64)
    z = np.empty(w + 1)
    out = np.empty((h, w))
    for r in range(h):
        _envelope_1d(g[r], w, d, v, z)
        out[r, :] = d
    return out


def distance_transform(binary_map):
    """Per-pixel Euclidean distance (pixels) to the nearest set pixel.

    An empty map yields :func:`max_dist` everywhere.
    """
    m = np.ascontiguousarray(binary_map, dtype=np.bool_)
    if m.ndim != 2:
        raise ValueError("expected a 2-D binary map")
    if not m.any():
        return np.full(m.shape, max_dist(m.shape))
    return np.sqrt(_edt_squared(m))
