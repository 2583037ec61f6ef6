"""Binary PGM (P5) and PBM (P4) read/write."""

from __future__ import annotations

import numpy as np


class PnmError(ValueError):
    pass


def _tokens(data, count, pos):
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PnmError("truncated header")
        out.append(data[start:pos])
    # exactly one whitespace byte separates header from raster
    return out, pos + 1


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise PnmError(f"{path}: not a binary PGM (P5) file")
    try:
        (w, h, maxval), pos = _tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise PnmError(f"{path}: bad header: {exc}") from None
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise PnmError(f"{path}: bad header values")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    need = w * h * dtype.itemsize
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise PnmError(f"{path}: truncated raster ({len(raster)} of {need} bytes)")
    img = np.frombuffer(raster, dtype=dtype).reshape(h, w)
    return img.astype(np.uint8 if maxval < 256 else np.uint16)


def write_pgm(path, img):
    a = np.asarray(img)
    if a.ndim != 2:
        raise ValueError("expected a 2-D image")
    if a.dtype != np.uint8:
        a = np.clip(np.rint(a), 0, 255).astype(np.uint8)
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(a.tobytes())


def write_pbm(path, bmap):
    m = np.asarray(bmap, dtype=bool)
    h, w = m.shape
    with open(path, "wb") as fh:
        fh.write(f"P4\n{w} {h}\n".encode())
        fh.write(np.packbits(m, axis=1).tobytes())


def read_pbm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P4":
        raise PnmError(f"{path}: not a binary PBM (P4) file")
    try:
        (w, h), pos = _tokens(data, 2, 2)
        w, h = int(w), int(h)
    except ValueError as exc:
        raise PnmError(f"{path}: bad header: {exc}") from None
    if w <= 0 or h <= 0:
        raise PnmError(f"{path}: bad header values")
    stride = (w + 7) // 8
    raster = data[pos:pos + stride * h]
    if len(raster) != stride * h:
        raise PnmError(f"{path}: truncated raster")
    bits = np.unpackbits(np.frombuffer(raster, np.uint8).reshape(h, stride), axis=1)
    return bits[:, :w].astype(bool)


def distance_to_pgm(dmap, max_value=None):
    """Scale a distance map to 8 bits for debug dumps."""
    d = np.asarray(dmap, dtype=float)
    top = max_value if max_value is not None else max(float(d.max()), 1e-12)
    return np.clip(np.rint(255.0 * d / top), 0, 255).astype(np.uint8)
