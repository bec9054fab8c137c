"""Pruned occupancy octree over Morton codes, plus 2-level subtree codes.

Child index convention: ``ci = (ix << 2) | (iy << 1) | iz`` with x most
significant. Morton codes interleave bits the same way, so the parent of a code
is ``code >> 3`` and its child slot is ``code & 7``.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import InvalidCode, InvalidInput
from .geometry import Cell, GridSpec

MAX_MORTON_BITS = 21


def _part1by2(n: int) -> int:
    n &= 0x1FFFFF
    n = (n | (n << 32)) & 0x1F00000000FFFF
    n = (n | (n << 16)) & 0x1F0000FF0000FF
    n = (n | (n << 8)) & 0x100F00F00F00F00F
    n = (n | (n << 4)) & 0x10C30C30C30C30C3
    n = (n | (n << 2)) & 0x1249249249249249
    return n


def _compact1by2(n: int) -> int:
    n &= 0x1249249249249249
    n = (n ^ (n >> 2)) & 0x10C30C30C30C30C3
    n = (n ^ (n >> 4)) & 0x100F00F00F00F00F
    n = (n ^ (n >> 8)) & 0x1F0000FF0000FF
    n = (n ^ (n >> 16)) & 0x1F00000000FFFF
    n = (n ^ (n >> 32)) & 0x1FFFFF
    return n


# 12-bit chunk -> 4 bits per axis
_DECODE_LUT = tuple((_compact1by2(i >> 2), _compact1by2(i >> 1), _compact1by2(i)) for i in range(4096))


def unchecked_decode(code: int) -> Cell:
    x, y, z = _DECODE_LUT[code & 0xFFF]
    shift = 4
    code >>= 12
    while code:
        a, b, c = _DECODE_LUT[code & 0xFFF]
        x |= a << shift
        y |= b << shift
        z |= c << shift
        shift += 4
        code >>= 12
    return (x, y, z)


def morton_encode(cell: Cell, level: int) -> int:
    if not 0 <= level <= MAX_MORTON_BITS:
        raise InvalidInput(f"level {level} unsupported")
    n = 1 << level
    x, y, z = cell
    if not (0 <= x < n and 0 <= y < n and 0 <= z < n):
        raise InvalidInput(f"cell {tuple(cell)} outside level {level}")
    return (_part1by2(x) << 2) | (_part1by2(y) << 1) | _part1by2(z)


def morton_decode(code: int, level: int) -> Cell:
    if not 0 <= level <= MAX_MORTON_BITS:
        raise InvalidInput(f"level {level} unsupported")
    if not 0 <= code < (1 << (3 * level)):
        raise InvalidInput(f"code {code} outside level {level}")
    return unchecked_decode(code)


@dataclass(frozen=True)
class Octree:
    spec: GridSpec
    levels: tuple[tuple[int, ...], ...]

    @property
    def n_leaves(self) -> int:
        return len(self.levels[-1])

    def occupied(self, level: int, code: int) -> bool:
        codes = self.levels[level]
        i = bisect_left(codes, code)
        return i < len(codes) and codes[i] == code

    def codes_at(self, level: int) -> tuple[int, ...]:
        """Subtree code of every occupied cell at ``level``, in Morton order."""
        return tuple(v for _, v in iter_subtree_codes(self.levels[level + 1]))


def build_octree(spec: GridSpec, leaf_cells: Iterable[Cell]) -> Octree:
    L = spec.L
    leaf_level = L - 1
    codes = sorted({morton_encode(c, leaf_level) for c in leaf_cells})
    if not codes:
        raise InvalidInput("octree needs at least one leaf")
    return octree_from_codes(spec, codes)


def octree_from_codes(spec: GridSpec, leaf_codes: list[int]) -> Octree:
    levels = [tuple(leaf_codes)]
    cur = leaf_codes
    for _ in range(spec.L - 1):
        parents = []
        last = -1
        for c in cur:
            p = c >> 3
            if p != last:
                parents.append(p)
                last = p
        levels.append(tuple(parents))
        cur = parents
    levels.reverse()
    return Octree(spec, tuple(levels))


def iter_subtree_codes(child_codes: Iterable[int]) -> Iterator[tuple[int, int]]:
    """Yield ``(parent_code, subtree_code)`` from sorted child Morton codes."""
    parent = -1
    mask = 0
    for c in child_codes:
        p = c >> 3
        if p != parent:
            if parent >= 0:
                yield parent, mask
            parent, mask = p, 0
        mask |= 1 << (c & 7)
    if parent >= 0:
        yield parent, mask


def subtree_code(oct: Octree, level: int, parent: Cell) -> int:
    if not 0 <= level <= oct.spec.L - 2:
        raise InvalidInput(f"level {level} has no children in a depth-{oct.spec.L} tree")
    code = morton_encode(parent, level)
    if not oct.occupied(level, code):
        raise InvalidInput(f"cell {tuple(parent)} not occupied at level {level}")
    mask = 0
    for ci in range(8):
        if oct.occupied(level + 1, (code << 3) | ci):
            mask |= 1 << ci
    return mask


def children_from_code(parent: Cell, code: int) -> list[Cell]:
    if not 1 <= code <= 255:
        raise InvalidCode(f"subtree code {code} outside 1..255")
    px, py, pz = parent[0] << 1, parent[1] << 1, parent[2] << 1
    return [(px + (ci >> 2), py + ((ci >> 1) & 1), pz + (ci & 1))
            for ci in range(8) if code >> ci & 1]


def child_codes(parent_code: int, code: int) -> list[int]:
    """Morton-code form of :func:`children_from_code`, ascending."""
    if not 1 <= code <= 255:
        raise InvalidCode(f"subtree code {code} outside 1..255")
    base = parent_code << 3
    return [base | ci for ci in range(8) if code >> ci & 1]
