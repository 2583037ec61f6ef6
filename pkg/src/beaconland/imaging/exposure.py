"""Exposure selection: brightest frame without large saturated blobs."""

from __future__ import annotations

import numpy as np
from scipy import ndimage as ndi
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import NoFeasibleGain

_EIGHT = np.ones((3, 3), dtype=bool)


def largest_saturated_component(frame, saturation=255):
    """Area in pixels of the largest 8-connected saturated region (0 if none)."""
    sat = np.asarray(frame) >= saturation
    rows = np.flatnonzero(sat.any(axis=1))
    if rows.size == 0:
        return 0
    cols = np.flatnonzero(sat.any(axis=0))
    sub = sat[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
    labels, n = ndi.label(sub, structure=_EIGHT)
    return int(np.bincount(labels.ravel())[1:].max())


def _bisect_gain(ok, lo, hi, rel_tol, max_sat_component):
    if not 0 < lo <= hi:
        raise ValueError(f"invalid gain bounds {(lo, hi)}")
    if ok(hi):
        return hi
    if not ok(lo):
        raise NoFeasibleGain(f"gain {lo:g} already saturates more than "
                             f"{max_sat_component} connected pixels")
    while hi > lo * (1.0 + rel_tol):
        mid = float(np.sqrt(lo * hi))
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def auto_exposure(camera, probe, max_sat_component=1, gain_bounds=None,
                  saturation=255, rel_tol=1e-3):
    """Largest gain whose frame keeps every saturated component small.

    ``probe(gain)`` must render a frame deterministically. Feasibility is
    assumed monotone in gain; the search bisects in log-gain until the
    bracket is narrower than ``rel_tol``. With no ``gain_bounds`` the search
    spans two decades either side of ``camera.exposure_gain``.
    """
    if gain_bounds is None:
        g = camera.exposure_gain
        gain_bounds = (g / 100.0, g * 100.0)
    lo, hi = (float(b) for b in gain_bounds)

    def ok(gain):
        return largest_saturated_component(probe(gain), saturation) <= max_sat_component

    return _bisect_gain(ok, lo, hi, rel_tol, max_sat_component)


class _SparseSaturation:
    """Largest saturated component of ``compose(background, sources, g)``
    for any ``g <= g_max``, evaluated on the pixels saturated at ``g_max``.

    Composition is monotone in gain, so no other pixel can saturate below
    ``g_max``. Values are recomputed with the same float32 operations as
    :func:`compose`, which makes the result identical to a full render.
    """

    def __init__(self, background, sources, g_max, saturation):
        self.saturation = saturation
        full = self._value(sources, background, g_max)
        rr, cc = np.nonzero(full >= saturation)
        self.bg = background[rr, cc]
        self.src = sources[rr, cc]
        n = rr.size
        width = background.shape[1] + 2
        key = (rr + 1) * width + (cc + 1)          # sorted, row-major
        ii, jj = [], []
        for off in (1, width - 1, width, width + 1):
            pos = np.searchsorted(key, key + off)
            hit = pos < n
            hit[hit] = key[pos[hit]] == key[hit] + off
            ii.append(np.flatnonzero(hit))
            jj.append(pos[hit])
        self.ei = np.concatenate(ii) if ii else np.zeros(0, np.intp)
        self.ej = np.concatenate(jj) if jj else np.zeros(0, np.intp)

    def _value(self, sources, background, gain):
        f = sources * np.float32(gain)
        f += background
        np.clip(f, 0.0, self.saturation, out=f)
        np.rint(f, out=f)
        return f.astype(np.uint8)

    def largest(self, gain):
        sat = self._value(self.src, self.bg, gain) >= self.saturation
        idx = np.flatnonzero(sat)
        if idx.size == 0:
            return 0
        remap = np.full(sat.size, -1, np.intp)
        remap[idx] = np.arange(idx.size)
        live = sat[self.ei] & sat[self.ej]
        a, b = remap[self.ei[live]], remap[self.ej[live]]
        graph = coo_matrix((np.ones(a.size, np.int8), (a, b)), shape=(idx.size, idx.size))
        _, labels = connected_components(graph, directed=False)
        return int(np.bincount(labels).max())


def auto_exposure_layers(background, sources, max_sat_component=1, gain_bounds=(0.01, 100.0),
                         saturation=255, rel_tol=1e-3):
    """:func:`auto_exposure` for a frame given as ``compose`` layers.

    Returns the same gain as probing full renders, but only the pixels that
    saturate at the upper gain bound are ever re-exposed.
    """
    lo, hi = (float(b) for b in gain_bounds)
    if not 0 < lo <= hi:
        raise ValueError(f"invalid gain bounds {gain_bounds}")
    sparse = _SparseSaturation(background, sources, hi, saturation)
    return _bisect_gain(lambda g: sparse.largest(g) <= max_sat_component,
                        lo, hi, rel_tol, max_sat_component)
