"""Binary PGM (P5) and PPM (P6) codecs, 8-bit only."""

from __future__ import annotations

import os

import numpy as np


class NetpbmError(ValueError):
    pass


def _read_header(data: bytes, path):
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise NetpbmError(f"{path}: truncated header")
        fields.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    return fields, pos + 1


def _read(path, magic: bytes, channels: int) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != magic:
        raise NetpbmError(f"{path}: bad magic {data[:2]!r}, expected {magic!r}")
    fields, offset = _read_header(data, path)
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise NetpbmError(f"{path}: non-numeric header field") from None
    if maxval != 255:
        raise NetpbmError(f"{path}: maxval {maxval} unsupported, only 255")
    if width < 1 or height < 1:
        raise NetpbmError(f"{path}: bad dimensions {width}x{height}")
    expected = width * height * channels
    payload = data[offset:]
    if len(payload) < expected:
        raise NetpbmError(f"{path}: truncated payload, {len(payload)} of {expected} bytes")
    if len(payload) > expected:
        raise NetpbmError(f"{path}: payload length {len(payload)} exceeds {expected} bytes")
    arr = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return arr


def read_pgm(path) -> np.ndarray:
    """Grayscale image scaled to [0, 1]."""
    return _read(path, b"P5", 1)[..., 0] / 255.0


def read_ppm(path) -> np.ndarray:
    """RGB image as ``(H, W, 3)`` uint8."""
    return _read(path, b"P6", 3).copy()


def to_bytes(pixels) -> np.ndarray:
    a = np.asarray(pixels, dtype=np.float64)
    return np.round(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)


def _write(path, magic: bytes, raster: np.ndarray):
    h, w = raster.shape[:2]
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(magic + f"\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(raster, dtype=np.uint8).tobytes())
    os.replace(tmp, path)


def write_pgm(path, pixels):
    """Write a [0, 1] grayscale image, rounding to the nearest byte."""
    a = np.asarray(pixels)
    if a.ndim != 2:
        raise NetpbmError(f"PGM needs a 2-D array, got shape {a.shape}")
    _write(path, b"P5", to_bytes(a))


def write_ppm(path, rgb):
    """Write an ``(H, W, 3)`` uint8 image."""
    a = np.asarray(rgb)
    if a.ndim != 3 or a.shape[2] != 3 or a.dtype != np.uint8:
        raise NetpbmError(f"PPM needs an (H, W, 3) uint8 array, got {a.shape} {a.dtype}")
    _write(path, b"P6", a)
