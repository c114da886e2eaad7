"""Binary checkpoint codec.

Little-endian layout::

    b"TSCP"                      magic
    u32 version                  currently 1
    u32 n, n bytes               architecture tag (UTF-8)
    u32 n, n bytes               descriptor JSON (UTF-8, sorted keys):
                                 {"config": {...}, "threshold": float}
    u32 count                    number of tensor records
    count x record:
        u32 n, n bytes           tensor name (UTF-8)
        u32 rank
        rank x u32               extents
        prod(extents) x f64      values, row-major
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .base import ModelParams

MAGIC = b"TSCP"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _u32(v: int) -> bytes:
    return struct.pack("<I", v)


def _str(s: str) -> bytes:
    b = s.encode("utf-8")
    return _u32(len(b)) + b


def dumps(model: ModelParams) -> bytes:
    desc = json.dumps({"config": model.config, "threshold": float(model.threshold)}, sort_keys=True)
    parts = [MAGIC, _u32(VERSION), _str(model.arch), _str(desc), _u32(len(model.params))]
    for name, arr in model.params.items():
        a = np.asarray(arr, dtype="<f8")
        parts += [_str(name), _u32(a.ndim), *(_u32(e) for e in a.shape), a.tobytes(order="C")]
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = data, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"truncated checkpoint at byte {self.pos}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def str(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def loads(data: bytes) -> ModelParams:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise CheckpointError("not a checkpoint: bad magic")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    arch = r.str()
    desc = json.loads(r.str())
    params = {}
    for _ in range(r.u32()):
        name = r.str()
        shape = tuple(r.u32() for _ in range(r.u32()))
        count = int(np.prod(shape, dtype=np.int64))
        params[name] = np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape)
    if r.pos != len(data):
        raise CheckpointError(f"{len(data) - r.pos} trailing bytes after last tensor")
    from .registry import ARCHS

    if arch not in ARCHS:
        raise CheckpointError(f"unknown architecture tag {arch!r}")
    return ModelParams(arch, desc["config"], params, desc["threshold"])


def save(path, model: ModelParams):
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(dumps(model))
    os.replace(tmp, path)


def load(path) -> ModelParams:
    with open(path, "rb") as fh:
        return loads(fh.read())
