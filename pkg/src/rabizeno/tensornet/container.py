"""Binary snapshot container for MPS site tensors.

Layout (all little-endian)::

    magic      8 bytes   b"RZTFDMPS"
    version    uint16
    n_modes    uint32
    n_max      uint32
    fictitious uint8
    d_max      uint32
    time       float64
    n_sites    uint32
    then per site:
        Dl, d, Dr   3 x uint32
        data        Dl*d*Dr complex128, C order
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .layout import ChainLayout
from .mps import TfdMps

__all__ = ["MAGIC", "VERSION", "save_mps", "load_mps", "dumps_mps", "loads_mps"]

MAGIC = b"RZTFDMPS"
VERSION = 1
_HEAD = struct.Struct("<8sHIIBIdI")
_SITE = struct.Struct("<III")
_DTYPE = np.dtype("<c16")


def dumps_mps(psi: TfdMps, time: float = 0.0) -> bytes:
    lay = psi.layout
    parts = [_HEAD.pack(MAGIC, VERSION, lay.num_modes, lay.n_max, int(lay.fictitious),
                        psi.d_max, float(time), len(psi))]
    for A in psi.tensors:
        parts.append(_SITE.pack(*A.shape))
        parts.append(np.ascontiguousarray(A, dtype=_DTYPE).tobytes())
    return b"".join(parts)


def loads_mps(buf: bytes) -> tuple[TfdMps, float]:
    """Inverse of :func:`dumps_mps`; returns ``(state, time)``."""
    if len(buf) < _HEAD.size:
        raise ValueError("truncated snapshot header")
    magic, version, M, n_max, fict, d_max, time, n = _HEAD.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ValueError("not an MPS snapshot (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    layout = ChainLayout(M, n_max, fictitious=bool(fict))
    if n != len(layout.dims):
        raise ValueError("site count does not match the layout")
    off = _HEAD.size
    tensors = []
    for i in range(n):
        Dl, d, Dr = _SITE.unpack_from(buf, off)
        off += _SITE.size
        if d != layout.dims[i]:
            raise ValueError(f"site {i} has dimension {d}, expected {layout.dims[i]}")
        size = Dl * d * Dr
        end = off + size * _DTYPE.itemsize
        if end > len(buf):
            raise ValueError("truncated snapshot data")
        tensors.append(np.frombuffer(buf, _DTYPE, size, off).astype(complex).reshape(Dl, d, Dr))
        off = end
    if off != len(buf):
        raise ValueError("trailing bytes after snapshot")
    return TfdMps(tensors, layout, d_max), time


def save_mps(path, psi: TfdMps, time: float = 0.0) -> None:
    Path(path).write_bytes(dumps_mps(psi, time))


def load_mps(path) -> tuple[TfdMps, float]:
    return loads_mps(Path(path).read_bytes())
