"""Binary field snapshots.

Layout (little endian): magic ``b"ABPS"``, u32 version, u32 nx, u32 ny
(1 for 1D data), u32 field count, then each field as row-major float64.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"ABPS"
VERSION = 1
_HEADER = struct.Struct("<4s4I")


@dataclass(frozen=True)
class SnapshotHeader:
    version: int
    nx: int
    ny: int
    count: int


def encode(fields: np.ndarray) -> bytes:
    fields = np.asarray(fields, dtype="<f8")
    if fields.ndim == 2:
        nx, ny = fields.shape[1], 1
    elif fields.ndim == 3:
        nx, ny = fields.shape[1], fields.shape[2]
    else:
        raise ValueError("fields must be (count, nx) or (count, nx, ny)")
    head = _HEADER.pack(MAGIC, VERSION, nx, ny, fields.shape[0])
    return head + np.ascontiguousarray(fields).tobytes()


def decode(blob: bytes) -> tuple[SnapshotHeader, np.ndarray]:
    if len(blob) < _HEADER.size:
        raise ValueError("snapshot truncated before header end")
    magic, version, nx, ny, count = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    expected = _HEADER.size + 8 * nx * ny * count
    if len(blob) != expected:
        raise ValueError(f"snapshot size {len(blob)} does not match header ({expected})")
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).astype(float)
    shape = (count, nx) if ny == 1 else (count, nx, ny)
    return SnapshotHeader(version, nx, ny, count), data.reshape(shape)


def write_snapshot(path, fields: np.ndarray) -> None:
    Path(path).write_bytes(encode(fields))


def read_snapshot(path) -> tuple[SnapshotHeader, np.ndarray]:
    return decode(Path(path).read_bytes())


def state_fields(state) -> np.ndarray:
    """Collocation fields of a state: ``a0..an, b1..bn`` or ``fR, fL``."""
    if hasattr(state, "fR"):
        return np.stack([state.fR.values, state.fL.values])
    return state.values
