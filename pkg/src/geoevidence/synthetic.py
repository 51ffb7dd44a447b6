"""Synthetic templates and scenes for testing and benchmarking."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SegmentSet, SimilarityTransform, transform_set

_OUTLINE_UPPER = [(0, 60), (40, 40), (100, 8), (118, 4), (122, 14), (140, 30), (150, 22), (176, 42), (165, 60)]

_INTERIOR = [
    # cockpit
    (20, 60, 35, 52), (35, 52, 50, 56), (50, 56, 50, 64), (50, 64, 35, 68), (35, 68, 20, 60),
    # fuselage ridges
    (50, 56, 120, 50), (50, 64, 120, 70),
    # tails
    (128, 50, 160, 34), (128, 70, 160, 86),
    # intakes
    (60, 42, 80, 36), (60, 78, 80, 84),
    # wing facets
    (70, 50, 110, 20), (70, 70, 110, 100),
    # exhaust
    (145, 55, 145, 65),
]


def f117_template() -> SegmentSet:
    """Faceted stealth-aircraft silhouette, 30 segments, ~176 x 112 px."""
    upper = _OUTLINE_UPPER
    lower = [(x, 120 - y) for x, y in reversed(upper)]
    ring = upper + lower[1:]
    rows = [(*ring[k], *ring[k + 1]) for k in range(len(ring) - 1)]
    rows += _INTERIOR
    return SegmentSet.from_array(np.array(rows, dtype=float), "f117")


def f117_variant(rng: np.random.Generator, jitter: float = 1.5) -> SegmentSet:
    """F117-like template with 25..35 segments and jittered endpoints."""
    base = f117_template().as_array().copy()
    base += rng.uniform(-jitter, jitter, size=base.shape)
    count = int(rng.integers(25, 36))
    if count < len(base):
        drop = rng.choice(np.arange(16, len(base)), size=len(base) - count, replace=False)
        base = np.delete(base, drop, axis=0)
    while len(base) < count:
        # extra interior facet lines
        c = rng.uniform([40, 35], [140, 85])
        ang = rng.uniform(0, math.pi)
        half = rng.uniform(6, 15)
        d = half * np.array([math.cos(ang), math.sin(ang)])
        base = np.vstack([base, np.concatenate([c - d, c + d])])
    return SegmentSet.from_array(base, "f117-variant")


def random_template(rng: np.random.Generator, count: int = 12, size: float = 100.0) -> SegmentSet:
    """Unstructured template: ``count`` segments of length 10..40 in a ``size`` box."""
    mids = rng.uniform(0, size, size=(count, 2))
    ang = rng.uniform(0, math.pi, size=count)
    half = rng.uniform(5, 20, size=count)
    d = np.stack([np.cos(ang), np.sin(ang)], axis=1) * half[:, None]
    return SegmentSet.from_array(np.hstack([mids - d, mids + d]), "random")


def clutter(rng: np.random.Generator, count: int, frame=(800.0, 800.0), length=(10.0, 60.0)) -> np.ndarray:
    """(count, 4) array of uniformly placed and oriented segments."""
    mids = rng.uniform((0, 0), frame, size=(count, 2))
    ang = rng.uniform(0, 2 * math.pi, size=count)
    half = rng.uniform(*length, size=count) / 2
    d = np.stack([np.cos(ang), np.sin(ang)], axis=1) * half[:, None]
    return np.hstack([mids - d, mids + d])


def random_transform(
    rng: np.random.Generator, template: SegmentSet, scale=(0.5, 2.0), frame=(800.0, 800.0), margin: float = 10.0
) -> SimilarityTransform:
    """Random similarity placing the whole template inside ``frame``."""
    s = float(rng.uniform(*scale))
    r = float(rng.uniform(-math.pi, math.pi))
    moved = SimilarityTransform(s, r).apply_array(template.as_array()).reshape(-1, 2)
    lo, hi = moved.min(axis=0), moved.max(axis=0)
    tx = rng.uniform(margin - lo[0], frame[0] - margin - hi[0])
    ty = rng.uniform(margin - lo[1], frame[1] - margin - hi[1])
    return SimilarityTransform(s, r, (float(tx), float(ty)))


@dataclass
class PlantedScene:
    scene: SegmentSet
    transform: SimilarityTransform
    # scene index of each surviving template segment (-1 where deleted)
    planted_index: np.ndarray


def plant(
    template: SegmentSet,
    transform: SimilarityTransform,
    clutter_segments: np.ndarray,
    rng: np.random.Generator,
    delete: np.ndarray | None = None,
) -> PlantedScene:
    """Scene = transformed template (minus ``delete`` indices) + clutter, shuffled."""
    placed = transform_set(transform, template).as_array()
    keep = np.ones(len(placed), dtype=bool)
    if delete is not None:
        keep[np.asarray(delete, dtype=int)] = False
    rows = np.vstack([placed[keep], np.asarray(clutter_segments, dtype=float).reshape(-1, 4)])
    perm = rng.permutation(len(rows))
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    planted_index = np.full(len(placed), -1)
    planted_index[np.flatnonzero(keep)] = inv[: keep.sum()]
    return PlantedScene(SegmentSet.from_array(rows[perm], "scene"), transform, planted_index)
