"""Checkpoint format: named float64 tensors in a flat binary file.

Layout (little endian):

    magic   4 bytes  b"MMN1"
    count   u32      number of tensors
    then per tensor, in dict order:
        name_len  u16
        name      UTF-8 bytes
        rank      u8
        dims      rank * u32
        data      prod(dims) * f64

Saving preserves dict insertion order, so save(load(x)) is byte-identical.
"""
from __future__ import annotations

import struct
from typing import Dict, Union

import numpy as np

from ..errors import FormatError
from .tensor import Tensor

__all__ = ["save_tensors", "load_tensors", "MAGIC"]

MAGIC = b"MMN1"


def save_tensors(path: str, tensors: Dict[str, Union[Tensor, np.ndarray]]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(tensors)))
        for name, t in tensors.items():
            arr = np.ascontiguousarray(
                t.data if isinstance(t, Tensor) else t, dtype="<f8"
            )
            raw = name.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise FormatError(f"tensor name too long: {name[:40]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_tensors(path: str) -> Dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise FormatError(f"bad magic in {path!r}")
    (count,) = struct.unpack_from("<I", blob, 4)
    off = 8
    out: Dict[str, np.ndarray] = {}
    for _ in range(count):
        try:
            (nlen,) = struct.unpack_from("<H", blob, off)
            off += 2
            name = blob[off : off + nlen].decode("utf-8")
            off += nlen
            (rank,) = struct.unpack_from("<B", blob, off)
            off += 1
            dims = struct.unpack_from(f"<{rank}I", blob, off)
            off += 4 * rank
            n = 1
            for d in dims:
                n *= d
            arr = np.frombuffer(blob, dtype="<f8", count=n, offset=off)
            off += 8 * n
        except (struct.error, UnicodeDecodeError, ValueError) as err:
            raise FormatError(f"truncated or corrupt checkpoint {path!r}") from err
        if name in out:
            raise FormatError(f"duplicate tensor name {name!r} in {path!r}")
        out[name] = arr.reshape(dims).copy()
    if off != len(blob):
        raise FormatError(
            f"{path!r}: {len(blob) - off} trailing bytes after {count} tensors"
        )
    return out
