"""Hierarchical grid, cell addressing, in-cell offsets and rotation augmentation.

Coordinates are plain ``(x, y, z)`` float tuples. A :class:`GridSpec` describes
the cubic root cell; level ``l`` splits it into ``2**l`` cells per axis and the
leaves live at level ``L - 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput, OutOfBounds, TooLarge

Vec3 = tuple[float, float, float]
Cell = tuple[int, int, int]

DEFAULT_LEAF = 0.24
DEFAULT_RESOLUTION = 0.01
DEFAULT_MAX_L = 16

# absorbs float noise so values like 0.05 / 0.01 floor to 5, not 4
_SNAP = 1e-9


@dataclass(frozen=True)
class GridSpec:
    origin: Vec3
    L: int
    c_leaf: float
    c_r: float

    def __post_init__(self):
        if self.L < 2:
            raise InvalidInput(f"L must be >= 2, got {self.L}")
        if not (self.c_leaf > 0 and self.c_r > 0):
            raise InvalidInput("cell length and resolution must be positive")
        if not all(math.isfinite(v) for v in self.origin):
            raise InvalidInput("origin must be finite")
        if self.n_p < 1:
            raise InvalidInput("resolution coarser than leaf cell")

    @property
    def c0(self) -> float:
        return self.c_leaf * (1 << (self.L - 1))

    @property
    def n_p(self) -> int:
        return int(round(self.c_leaf / self.c_r))

    @property
    def leaves_per_axis(self) -> int:
        return 1 << (self.L - 1)

    @property
    def default_offset(self) -> Cell:
        h = self.n_p // 2
        return (h, h, h)

    def cell_length(self, level: int) -> float:
        return self.c0 / (1 << level)


@dataclass(frozen=True)
class Site:
    type_id: int
    pos: Vec3


@dataclass(frozen=True)
class Frame:
    sites: tuple[Site, ...]
    frame_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))

    def positions(self) -> np.ndarray:
        return np.array([s.pos for s in self.sites], dtype=float).reshape(-1, 3)

    def types(self) -> list[int]:
        return [s.type_id for s in self.sites]


@dataclass
class GridConfig:
    """Knobs for fitting a grid to a sample.

    ``L=None`` picks the smallest depth that fits; ``margin=None`` means half a
    leaf cell of slack on every side.
    """
    c_leaf: float = DEFAULT_LEAF
    c_r: float = DEFAULT_RESOLUTION
    margin: float | None = None
    L: int | None = None
    max_L: int = DEFAULT_MAX_L

    def fit(self, frames: Sequence["Frame"]) -> "GridSpec":
        return fit_grid(frames, c_leaf=self.c_leaf, margin=self.margin, c_r=self.c_r, L=self.L,
                        max_L=self.max_L)


def _all_positions(frames: Sequence[Frame]) -> np.ndarray:
    pts = [f.positions() for f in frames]
    if not pts:
        return np.zeros((0, 3))
    return np.concatenate(pts, axis=0)


def fit_grid(frames: Sequence[Frame], c_leaf: float = DEFAULT_LEAF, margin: float | None = None,
             c_r: float = DEFAULT_RESOLUTION, L: int | None = None,
             max_L: int = DEFAULT_MAX_L) -> GridSpec:
    """Fit one shared grid around every site of every frame.

    The joint bounding box is centred in the root cell. With ``L`` given the
    depth is fixed and the margin is shrunk as needed; ``TooLarge`` is raised
    only if the structure itself does not fit.
    """
    if not c_leaf > 0:
        raise InvalidInput("c_leaf must be positive")
    if margin is None:
        margin = c_leaf / 2
    if margin < 0:
        raise InvalidInput("margin must be non-negative")
    pts = _all_positions(frames)
    if len(pts) == 0:
        raise InvalidInput("no sites to fit a grid around")
    if not np.isfinite(pts).all():
        raise InvalidInput("non-finite coordinates")
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    extent = float((hi - lo).max())
    center = (lo + hi) / 2

    if L is None:
        need = (extent + 2 * margin) / c_leaf
        L = 2
        while (1 << (L - 1)) < need - _SNAP:
            L += 1
            if L > max_L:
                raise TooLarge(f"extent {extent:.3f} needs more than {max_L} levels")
    else:
        if L < 2:
            raise InvalidInput("L must be >= 2")
        if L > max_L:
            raise TooLarge(f"L={L} exceeds max_L={max_L}")
        if extent > c_leaf * (1 << (L - 1)) * (1 + _SNAP):
            raise TooLarge(f"extent {extent:.3f} does not fit in L={L} root cell")
    c0 = c_leaf * (1 << (L - 1))
    origin = tuple(float(v) for v in center - c0 / 2)
    return GridSpec(origin=origin, L=L, c_leaf=c_leaf, c_r=c_r)


def leaf_index_of(spec: GridSpec, p: Vec3) -> Cell:
    n = spec.leaves_per_axis
    c0 = spec.c0
    tol = _SNAP * c0
    out = []
    for a in range(3):
        r = p[a] - spec.origin[a]
        if not (-tol <= r <= c0 + tol):
            raise OutOfBounds(f"point {tuple(p)} outside root cell")
        i = math.floor(r / spec.c_leaf + _SNAP)
        out.append(min(max(i, 0), n - 1))
    return tuple(out)


def _check_cell(spec: GridSpec, level: int, cell: Cell):
    if not 0 <= level <= spec.L - 1:
        raise InvalidInput(f"level {level} outside 0..{spec.L - 1}")
    n = 1 << level
    if len(cell) != 3 or not all(0 <= c < n for c in cell):
        raise InvalidInput(f"cell {cell} outside level {level}")


def cell_center(spec: GridSpec, level: int, cell: Cell) -> Vec3:
    _check_cell(spec, level, cell)
    h = spec.cell_length(level)
    o = spec.origin
    return (o[0] + (cell[0] + 0.5) * h, o[1] + (cell[1] + 0.5) * h, o[2] + (cell[2] + 0.5) * h)


def leaf_min(spec: GridSpec, leaf: Cell) -> Vec3:
    o, c = spec.origin, spec.c_leaf
    return (o[0] + leaf[0] * c, o[1] + leaf[1] * c, o[2] + leaf[2] * c)


def quantize_offset(spec: GridSpec, p: Vec3, leaf: Cell) -> Cell:
    lo = leaf_min(spec, leaf)
    top = spec.n_p - 1
    return tuple(min(max(math.floor((p[a] - lo[a]) / spec.c_r + _SNAP), 0), top) for a in range(3))


def dequantize_offset(spec: GridSpec, leaf: Cell, e: Cell) -> Vec3:
    n_p = spec.n_p
    if len(e) != 3 or not all(0 <= v < n_p for v in e):
        raise InvalidInput(f"offset {tuple(e)} outside [0, {n_p})")
    lo = leaf_min(spec, leaf)
    return tuple(lo[a] + (e[a] + 0.5) * spec.c_r for a in range(3))


def rotation_matrix(seed) -> np.ndarray:
    """Uniform random rotation from a normalised Gaussian quaternion."""
    rng = np.random.default_rng(seed)
    w, x, y, z = rng.standard_normal(4)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_rotation(frames: Sequence[Frame], seed, enabled: bool = True) -> list[Frame]:
    """Rotate all frames jointly about their common centroid."""
    frames = list(frames)
    if not enabled:
        return frames
    pts = _all_positions(frames)
    if len(pts) == 0:
        return frames
    R = rotation_matrix(seed)
    centroid = pts.mean(axis=0)
    out = []
    for f in frames:
        if not f.sites:
            out.append(f)
            continue
        rot = (f.positions() - centroid) @ R.T + centroid
        sites = tuple(Site(s.type_id, tuple(float(v) for v in q)) for s, q in zip(f.sites, rot))
        out.append(Frame(sites, f.frame_index))
    return out
