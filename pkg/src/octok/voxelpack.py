"""Lossless 4x4x4 voxel-to-channel bit packing and blank-patch detection.

Grids are numpy bool arrays indexed ``grid[z, y, x]`` so that the flattened
order is x-fastest. Inside each 4x4x4 block the local index is
``li = lz*16 + ly*4 + lx``; bit ``li`` goes to channel ``li // 8`` at bit
``li % 8`` (LSB first). A packed grid has shape ``(8, D/4, D/4, D/4)``.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import InvalidInput, ParseError
from .geometry import Frame, GridSpec, Site, leaf_index_of

MAGIC = b"OCTK"
VERSION = 1
KIND_RAW = 0
KIND_PACKED = 1
_HEADER = struct.Struct("<4sHIB5x")
assert _HEADER.size == 16


def _check_grid(grid: np.ndarray) -> int:
    if grid.ndim != 3 or len(set(grid.shape)) != 1:
        raise InvalidInput(f"expected a cubic grid, got shape {grid.shape}")
    D = grid.shape[0]
    if D < 4 or D % 4:
        raise InvalidInput(f"grid dimension {D} is not a positive multiple of 4")
    return D


def pack(grid: np.ndarray) -> np.ndarray:
    D = _check_grid(grid)
    B = D // 4
    g = np.ascontiguousarray(grid, dtype=bool).reshape(B, 4, B, 4, B, 4)
    # (Z, lz, Y, ly, X, lx) -> (Z, Y, X, lz, ly, lx): last axis runs over li
    blocks = g.transpose(0, 2, 4, 1, 3, 5).reshape(B, B, B, 64)
    packed = np.packbits(blocks, axis=-1, bitorder="little")
    return np.ascontiguousarray(packed.transpose(3, 0, 1, 2))


def unpack(packed: np.ndarray) -> np.ndarray:
    packed = np.asarray(packed)
    if packed.ndim != 4 or packed.shape[0] != 8 or len(set(packed.shape[1:])) != 1:
        raise InvalidInput(f"expected shape (8, B, B, B), got {packed.shape}")
    B = packed.shape[1]
    bits = np.unpackbits(packed.astype(np.uint8).transpose(1, 2, 3, 0), axis=-1, bitorder="little")
    g = bits.reshape(B, B, B, 4, 4, 4).transpose(0, 3, 1, 4, 2, 5)
    return g.reshape(4 * B, 4 * B, 4 * B).astype(bool)


def is_blank_patch(grid: np.ndarray, origin: tuple[int, int, int], size: int = 32) -> bool:
    """True iff the ``size``-cube patch whose min corner is ``origin`` (x, y, z) is all zero."""
    D = grid.shape[0]
    x, y, z = origin
    if size < 1 or min(x, y, z) < 0 or max(x, y, z) + size > D:
        raise InvalidInput(f"patch at {tuple(origin)} of size {size} exceeds grid of size {D}")
    return not grid[z:z + size, y:y + size, x:x + size].any()


def blank_mask(grid: np.ndarray, size: int = 32) -> np.ndarray:
    """Blank flag for every non-overlapping patch, indexed ``[pz, py, px]``."""
    D = _check_grid(grid)
    if D % size:
        raise InvalidInput(f"patch size {size} does not tile grid of size {D}")
    n = D // size
    return ~grid.reshape(n, size, n, size, n, size).any(axis=(1, 3, 5))


def write_raw(grid: np.ndarray) -> bytes:
    D = _check_grid(grid)
    bits = np.packbits(np.ascontiguousarray(grid, dtype=bool).ravel(), bitorder="little")
    return _HEADER.pack(MAGIC, VERSION, D, KIND_RAW) + bits.tobytes()


def write_packed(packed: np.ndarray) -> bytes:
    D = packed.shape[1] * 4
    return _HEADER.pack(MAGIC, VERSION, D, KIND_PACKED) + np.ascontiguousarray(packed, dtype=np.uint8).tobytes()


def read_grid_file(data: bytes) -> tuple[int, np.ndarray]:
    """Parse either file kind; returns ``(kind, array)``."""
    if len(data) < _HEADER.size:
        raise ParseError("file shorter than header")
    magic, version, D, kind = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ParseError(f"unsupported version {version}")
    if D < 4 or D % 4:
        raise ParseError(f"grid dimension {D} is not a positive multiple of 4")
    body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    if body.size != D ** 3 // 8:
        raise ParseError(f"expected {D ** 3 // 8} payload bytes, got {body.size}")
    if kind == KIND_RAW:
        bits = np.unpackbits(body, bitorder="little").astype(bool)
        return kind, bits.reshape(D, D, D)
    if kind == KIND_PACKED:
        B = D // 4
        return kind, body.reshape(8, B, B, B).copy()
    raise ParseError(f"unknown grid file kind {kind}")


def grid_spec_for(D: int) -> GridSpec:
    """Unit-voxel grid whose leaf level covers a ``D``-cube; one offset bin per leaf."""
    L = 2
    while (1 << (L - 1)) < D:
        L += 1
    return GridSpec(origin=(0.0, 0.0, 0.0), L=L, c_leaf=1.0, c_r=1.0)


def grid_to_frame(grid: np.ndarray, type_id: int, frame_index: int = 0) -> Frame:
    """One site per set voxel, at the voxel centre."""
    zs, ys, xs = np.nonzero(grid)
    sites = tuple(Site(type_id, (x + 0.5, y + 0.5, z + 0.5))
                  for x, y, z in zip(xs.tolist(), ys.tolist(), zs.tolist()))
    return Frame(sites, frame_index)


def frame_to_grid(frame: Frame, spec: GridSpec, D: int) -> np.ndarray:
    grid = np.zeros((D, D, D), dtype=bool)
    for s in frame.sites:
        x, y, z = leaf_index_of(spec, s.pos)
        if max(x, y, z) >= D:
            raise InvalidInput(f"voxel {(x, y, z)} outside grid of size {D}")
        grid[z, y, x] = True
    return grid
