"""Faint light source detector.

A pixel is reported when it is the maximum of its square vicinity and its
intensity exceeds the vicinity mean by more than ``k`` standard deviations.
Vicinities are clipped at the image border. Plateaus are resolved in
favour of the lowest row-major index, so a flat top yields one detection.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from numba import njit

DEFAULT_K = 2.5
DEFAULT_WINDOW = 7


class Detection(NamedTuple):
    u: int
    v: int
    intensity: float


def _check_args(k, window):
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")


@njit(cache=True)
def _maxima_mask(a, half):
    # strict vicinity maximum; an equal value earlier in row-major order wins
    h, w = a.shape
    out = np.zeros((h, w), dtype=np.bool_)
    for r in range(h):
        r0, r1 = max(r - half, 0), min(r + half + 1, h)
        for c in range(w):
            p = a[r, c]
            c0, c1 = max(c - half, 0), min(c + half + 1, w)
            ok = True
            for rr in range(r0, r1):
                for cc in range(c0, c1):
                    q = a[rr, cc]
                    if q > p or (q == p and (rr < r or (rr == r and cc < c))):
                        ok = False
                        break
                if not ok:
                    break
            out[r, c] = ok
    return out


def local_maxima(img, window=DEFAULT_WINDOW):
    """Row/column indices of vicinity maxima after plateau tie-breaking."""
    a = np.asarray(img)
    if a.dtype == bool:
        a = a.astype(np.uint8)
    return np.nonzero(_maxima_mask(np.ascontiguousarray(a), window // 2))


@njit(cache=True)
def _excess_int(a, rr, cc, half, k2):
    # exact integer window sums; compares (n*I - S)^2 with k^2 (n*SS - S^2)
    h, w = a.shape
    keep = np.zeros(rr.size, dtype=np.bool_)
    for i in range(rr.size):
        r, c = rr[i], cc[i]
        n = 0
        s = 0
        ss = 0
        for y in range(max(r - half, 0), min(r + half + 1, h)):
            for x in range(max(c - half, 0), min(c + half + 1, w)):
                v = np.int64(a[y, x])
                n += 1
                s += v
                ss += v * v
        diff = n * np.int64(a[r, c]) - s
        var_n = n * ss - s * s
        keep[i] = diff > 0 and float(diff) ** 2 > k2 * float(var_n)
    return keep


def _excess_mask_int(a, rr, cc, k, half):
    return _excess_int(np.ascontiguousarray(a), rr, cc, half, float(k * k))


def _excess_mask_float(a, rr, cc, k, half):
    a = a.astype(np.float64)
    h, w = a.shape
    dr, dc = np.mgrid[-half:half + 1, -half:half + 1]
    r2 = rr[:, None] + dr.ravel()[None, :]
    c2 = cc[:, None] + dc.ravel()[None, :]
    inside = (r2 >= 0) & (r2 < h) & (c2 >= 0) & (c2 < w)
    vals = a[np.clip(r2, 0, h - 1), np.clip(c2, 0, w - 1)]
    n = inside.sum(axis=1)
    mean = np.where(inside, vals, 0.0).sum(axis=1) / n
    dev = np.where(inside, vals - mean[:, None], 0.0)
    std = np.sqrt((dev * dev).sum(axis=1) / n)
    return a[rr, cc] > mean + k * std


def detect_light_sources(img, k=DEFAULT_K, window=DEFAULT_WINDOW):
    """Detect faint point sources.

    Returns ``(binary_map, detections)``; detections are sorted by intensity,
    brightest first, ties in row-major order. Integer images are evaluated
    with exact integer arithmetic; float images in double precision.
    """
    _check_args(k, window)
    a = np.asarray(img)
    if a.ndim != 2:
        raise ValueError("expected a 2-D grayscale image")
    half = window // 2
    rr, cc = local_maxima(a, window)
    if rr.size:
        if a.dtype == bool:
            ok = _excess_mask_int(a.astype(np.uint8), rr, cc, k, half)
        elif np.issubdtype(a.dtype, np.integer):
            ok = _excess_mask_int(a, rr, cc, k, half)
        else:
            ok = _excess_mask_float(a, rr, cc, k, half)
        rr, cc = rr[ok], cc[ok]
    bmap = np.zeros(a.shape, dtype=bool)
    bmap[rr, cc] = True
    vals = a[rr, cc]
    order = np.lexsort((rr * a.shape[1] + cc, -vals.astype(np.float64)))
    dets = [Detection(int(cc[i]), int(rr[i]), float(vals[i])) for i in order]
    return bmap, dets
