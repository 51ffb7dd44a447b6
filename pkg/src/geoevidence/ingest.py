"""Raster image -> merged line segments.

Three stages: Canny edges, edge linking with recursive-split line fitting,
then merging of collinear, nearly touching pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .geometry import Point2, Segment, SegmentSet


@dataclass(frozen=True)
class GrayImage:
    """Row-major luminance in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D array, got shape {px.shape}")
        if not np.all((px >= 0.0) & (px <= 1.0)):
            raise ValueError("pixel values must lie in [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class EdgeMap:
    edges: np.ndarray  # bool, (height, width)

    @property
    def width(self) -> int:
        return self.edges.shape[1]

    @property
    def height(self) -> int:
        return self.edges.shape[0]


@dataclass(frozen=True)
class IngestParams:
    canny_low: float = 0.1
    canny_high: float = 0.2
    min_segment_length: float = 8.0
    fit_deviation: float = 2.0
    merge_angle: float = math.radians(5.0)
    merge_gap: float = 3.0
    sigma: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.canny_low < self.canny_high:
            raise ValueError("need 0 <= canny_low < canny_high")
        for name in ("min_segment_length", "fit_deviation", "merge_angle", "merge_gap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def load_image(path: str | Path) -> GrayImage:
    """Read an 8-bit (or 16-bit) grayscale or RGB raster."""
    from PIL import Image

    with Image.open(path) as im:
        im.load()
        if im.mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=float)
            top = 65535.0 if arr.max(initial=0) > 255 or im.mode.startswith("I;16") else 255.0
            return GrayImage(np.clip(arr / top, 0.0, 1.0))
        if im.mode == "F":
            return GrayImage(np.clip(np.asarray(im, dtype=float), 0.0, 1.0))
        if im.mode in ("L", "1"):
            return GrayImage(np.asarray(im.convert("L"), dtype=float) / 255.0)
        rgb = np.asarray(im.convert("RGB"), dtype=float) / 255.0
    lum = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return GrayImage(np.clip(lum, 0.0, 1.0))


# Sectors of gradient direction (mod 180 deg) and the pixel offset along it.
_NMS_STEPS = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}


def detect_edges(img: GrayImage, p: IngestParams = IngestParams()) -> EdgeMap:
    smooth = ndimage.gaussian_filter(img.pixels, p.sigma, mode="nearest") if p.sigma > 0 else img.pixels
    gx = ndimage.sobel(smooth, axis=1, mode="nearest")
    gy = ndimage.sobel(smooth, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    top = mag.max()
    h, w = mag.shape
    if top <= 1e-12 or h < 3 or w < 3:
        return EdgeMap(np.zeros_like(mag, dtype=bool))
    mag = mag / top

    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    sector = (np.floor((angle + 22.5) / 45.0).astype(int)) % 4
    tol = 1e-9
    thin = np.zeros_like(mag, dtype=bool)
    core = (slice(1, h - 1), slice(1, w - 1))
    center = mag[core]
    for s, (dr, dc) in _NMS_STEPS.items():
        ahead = mag[1 + dr : h - 1 + dr, 1 + dc : w - 1 + dc]
        behind = mag[1 - dr : h - 1 - dr, 1 - dc : w - 1 - dc]
        # ties along the gradient go to the pixel further along it: one-pixel bands
        local_max = (center >= behind - tol) & (center > ahead + tol)
        thin[core] |= (sector[core] == s) & local_max
    thin &= mag > 0

    strong = thin & (mag >= p.canny_high)
    weak = thin & (mag >= p.canny_low)
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return EdgeMap(np.zeros_like(thin))
    keep = np.zeros(count + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return EdgeMap(keep[labels])


_FOUR = [(-1, 0), (0, 1), (1, 0), (0, -1)]
_DIAG = [(-1, 1), (1, 1), (1, -1), (-1, -1)]


def _neighbors(mask: np.ndarray, r: int, c: int) -> list[tuple[int, int]]:
    """8-neighbours of (r, c) in ``mask``, skipping diagonals reachable via a 4-neighbour."""
    h, w = mask.shape
    out = []
    four = set()
    for dr, dc in _FOUR:
        rr, cc = r + dr, c + dc
        if 0 <= rr < h and 0 <= cc < w and mask[rr, cc]:
            out.append((rr, cc))
            four.add((dr, dc))
    for dr, dc in _DIAG:
        rr, cc = r + dr, c + dc
        if (dr, 0) in four or (0, dc) in four:
            continue
        if 0 <= rr < h and 0 <= cc < w and mask[rr, cc]:
            out.append((rr, cc))
    return out


def link_edges(edges: EdgeMap) -> list[np.ndarray]:
    """Trace edge pixels into chains of ``(x, y)`` points.

    Tracing starts from chain ends in raster order, then from any pixel still
    unvisited (closed loops, pieces between junctions). A chain stops at a
    junction pixel; every edge pixel lands in exactly one chain.
    """
    mask = np.asarray(edges.edges, dtype=bool)
    unvisited = mask.copy()
    rows, cols = np.nonzero(mask)
    pixels = list(zip(rows.tolist(), cols.tolist()))
    degree = {px: len(_neighbors(mask, *px)) for px in pixels}

    def walk(start):
        path = []
        cur = start
        while True:
            nxt = _neighbors(unvisited, *cur)
            if not nxt:
                break
            if len(nxt) > 1 and cur != start:
                # fork without a junction pixel: leave the other branch for a new chain
                break
            cur = nxt[0]
            unvisited[cur] = False
            path.append(cur)
            if degree[cur] >= 3:
                break
        return path

    chains = []

    def trace(start):
        unvisited[start] = False
        forward = walk(start)
        if degree[start] >= 3:
            backward = []
        else:
            backward = walk(start)
        chain = backward[::-1] + [start] + forward
        chains.append(np.array([(c, r) for r, c in chain], dtype=float))

    for px in pixels:
        if unvisited[px] and degree[px] <= 1:
            trace(px)
    for px in pixels:
        if unvisited[px]:
            trace(px)
    return chains


def _split_points(pts: np.ndarray, tol: float) -> list[tuple[int, int]]:
    """Index ranges of sub-chains whose points stay within ``tol`` of their chord."""
    spans = []
    stack = [(0, len(pts) - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            spans.append((i, j))
            continue
        a, b = pts[i], pts[j]
        v = b - a
        chord = math.hypot(v[0], v[1])
        rel = pts[i + 1 : j] - a
        if chord > 1e-12:
            dev = np.abs(v[0] * rel[:, 1] - v[1] * rel[:, 0]) / chord
        else:
            dev = np.hypot(rel[:, 0], rel[:, 1])
        k = int(np.argmax(dev))
        if dev[k] >= tol:
            mid = i + 1 + k
            # right half pushed first so spans come out in chain order
            stack.append((mid, j))
            stack.append((i, mid))
        else:
            spans.append((i, j))
    return spans


def fit_segments(chains: list[np.ndarray], p: IngestParams = IngestParams(), name: str = "image") -> SegmentSet:
    segs = []
    for pts in chains:
        pts = np.asarray(pts, dtype=float)
        if len(pts) < 2:
            continue
        for i, j in _split_points(pts, p.fit_deviation):
            a, b = pts[i], pts[j]
            if math.hypot(*(b - a)) < max(p.min_segment_length, 1e-6):
                continue
            segs.append(Segment(Point2(float(a[0]), float(a[1])), Point2(float(b[0]), float(b[1]))))
    return SegmentSet(tuple(segs), name)


def _mergeable(s: np.ndarray, others: np.ndarray, p: IngestParams) -> np.ndarray:
    """Mask over ``others`` rows that may merge with ``s``."""
    u = s[2:] - s[:2]
    v = others[:, 2:] - others[:, :2]
    cross = np.abs(u[0] * v[:, 1] - u[1] * v[:, 0])
    dot = np.abs(u[0] * v[:, 0] + u[1] * v[:, 1])
    ok = np.arctan2(cross, dot) <= p.merge_angle

    se = s.reshape(2, 2)
    oe = others.reshape(-1, 2, 2)
    diff = se[None, :, None, :] - oe[:, None, :, :]
    gap = np.hypot(diff[..., 0], diff[..., 1]).reshape(-1, 4).min(axis=1)
    ok &= gap <= p.merge_gap

    ulen = math.hypot(u[0], u[1])
    rel = oe - s[:2]
    d_os = np.abs(u[0] * rel[..., 1] - u[1] * rel[..., 0]).mean(axis=1) / ulen
    vlen = np.hypot(v[:, 0], v[:, 1])
    rel = se[None, :, :] - oe[:, :1, :]
    d_so = np.abs(v[:, None, 0] * rel[..., 1] - v[:, None, 1] * rel[..., 0]).mean(axis=1) / vlen
    return ok & (np.maximum(d_os, d_so) <= p.fit_deviation)


def _span(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Segment joining the two most distant of the four endpoints, oriented like ``s``."""
    ends = np.vstack([s.reshape(2, 2), t.reshape(2, 2)])
    best, pair = -1.0, (0, 1)
    for i in range(4):
        for j in range(i + 1, 4):
            d = math.hypot(*(ends[j] - ends[i]))
            if d > best:
                best, pair = d, (i, j)
    a, b = ends[pair[0]], ends[pair[1]]
    if np.dot(b - a, s[2:] - s[:2]) < 0:
        a, b = b, a
    return np.concatenate([a, b])


def merge_collinear(segs: SegmentSet, p: IngestParams = IngestParams()) -> SegmentSet:
    """Merge nearly collinear, nearly touching pairs until nothing changes.

    The earlier segment of a pair absorbs the later one and keeps its slot.
    """
    arr = np.array(segs.as_array(), dtype=float).reshape(-1, 4)
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(arr):
            while i + 1 < len(arr):
                mask = _mergeable(arr[i], arr[i + 1 :], p)
                if not mask.any():
                    break
                j = i + 1 + int(np.argmax(mask))
                arr[i] = _span(arr[i], arr[j])
                arr = np.delete(arr, j, axis=0)
                changed = True
            i += 1
    return SegmentSet.from_array(arr, segs.name)


def extract_segments(img: GrayImage, p: IngestParams = IngestParams(), name: str = "image") -> SegmentSet:
    """Full preprocessing. Short pieces are dropped after merging, not before."""
    chains = link_edges(detect_edges(img, p))
    raw = fit_segments(chains, replace(p, min_segment_length=1e-6), name)
    merged = merge_collinear(raw, p)
    kept = [s for s in merged if math.dist(tuple(s.p), tuple(s.q)) >= p.min_segment_length]
    return SegmentSet(tuple(kept), name)
