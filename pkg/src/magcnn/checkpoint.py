"""Parameter checkpoints.

Layout, all integers little-endian u32::

    b"MPRM" | version | tensor count
    per tensor: name length | name (UTF-8) | ndim | dims... | float64 LE values
"""

from __future__ import annotations

import struct
from typing import Dict

import numpy as np

from .errors import FormatError, LoadError

MAGIC = b"MPRM"
VERSION = 1


def save_checkpoint(path, params: Dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(params)))
        for name, arr in params.items():
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> Dict[str, np.ndarray]:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError:
        raise LoadError(f"checkpoint {path} not found") from None
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: not a checkpoint (bad magic)")
    pos = 4

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise FormatError(f"{path}: truncated at byte {pos}")
        out = struct.unpack_from(fmt, data, pos)
        pos += size
        return out

    version, count = take("<II")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    params = {}
    for _ in range(count):
        (n,) = take("<I")
        (raw,) = take(f"<{n}s")
        name = raw.decode("utf-8")
        (ndim,) = take("<I")
        dims = take(f"<{ndim}I")
        size = int(np.prod(dims, dtype=np.int64)) * 8
        if pos + size > len(data):
            raise FormatError(f"{path}: tensor {name!r} truncated")
        params[name] = np.frombuffer(data, dtype="<f8", count=size // 8,
                                     offset=pos).reshape(dims).astype(np.float64)
        pos += size
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    return params
