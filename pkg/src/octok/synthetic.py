"""Pseudo-random structures for tests, acceptance runs and the corpus script."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Frame, Site

ORGANIC = (1, 6, 7, 8, 9)  # H C N O F


@dataclass
class CorpusConfig:
    n_structures: int = 1000
    min_sites: int = 1
    max_sites: int = 200
    min_extent: float = 1.0
    max_extent: float = 50.0
    min_dist: float = 0.5
    types: tuple[int, ...] = ORGANIC
    seed: int = 0


def random_structure(rng: np.random.Generator, n_sites: int, extent: float, min_dist: float = 0.5,
                     types=ORGANIC, frame_index: int = 0) -> Frame:
    """Uniform points in an ``extent`` cube with a hard minimum pair distance.

    Rejection sampling; if the cube is too crowded fewer than ``n_sites``
    points are returned (never fewer than one).
    """
    pts = np.empty((n_sites, 3))
    k = 0
    attempts = 0
    d2 = min_dist * min_dist
    while k < n_sites and attempts < 60 * n_sites:
        attempts += 1
        p = rng.uniform(0.0, extent, 3)
        if k and (((pts[:k] - p) ** 2).sum(axis=1) < d2).any():
            continue
        pts[k] = p
        k += 1
    tids = rng.choice(np.asarray(types), size=k)
    sites = tuple(Site(int(t), tuple(map(float, p))) for t, p in zip(tids, pts[:k]))
    return Frame(sites, frame_index)


def random_corpus(cfg: CorpusConfig = CorpusConfig()) -> list[Frame]:
    rng = np.random.default_rng(cfg.seed)
    out = []
    for _ in range(cfg.n_structures):
        n = int(rng.integers(cfg.min_sites, cfg.max_sites + 1))
        extent = float(rng.uniform(cfg.min_extent, cfg.max_extent))
        out.append(random_structure(rng, n, extent, cfg.min_dist, cfg.types))
    return out


def random_molecule(rng: np.random.Generator, n_heavy: int = 9, bond: tuple[float, float] = (1.2, 1.55),
                    h_bond: float = 1.09, max_atoms: int = 29) -> Frame:
    """Loose organic-molecule mimic: a branched heavy-atom walk plus capping hydrogens.

    Not chemistry; it only reproduces the spatial density of small organics
    (bond lengths, ~1 A minimum separation), which is what sets token counts.
    """
    heavy = [np.zeros(3)]
    while len(heavy) < n_heavy:
        anchor = heavy[int(rng.integers(len(heavy)))]
        v = rng.standard_normal(3)
        p = anchor + v / np.linalg.norm(v) * rng.uniform(*bond)
        if min(np.linalg.norm(p - q) for q in heavy) >= bond[0] - 1e-9:
            heavy.append(p)
    pts = list(heavy)
    tids = [int(rng.choice((6, 6, 6, 7, 8))) for _ in heavy]
    for a in heavy:
        for _ in range(int(rng.integers(1, 3))):
            if len(pts) >= max_atoms:
                break
            v = rng.standard_normal(3)
            p = a + v / np.linalg.norm(v) * h_bond
            if min(np.linalg.norm(p - q) for q in pts) >= 1.0:
                pts.append(p)
                tids.append(1)
    return Frame(tuple(Site(t, tuple(map(float, p))) for t, p in zip(tids, pts)), 0)
