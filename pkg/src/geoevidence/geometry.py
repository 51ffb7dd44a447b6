"""2-D primitives: points, segments, similarity transforms and segment projection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

# Segments shorter than this are rejected; every evidence formula divides by |AB|.
MIN_SEGMENT_LENGTH = 1e-9


@dataclass(frozen=True, slots=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y


@dataclass(frozen=True, slots=True)
class Segment:
    """Directed segment from ``p`` to ``q``."""

    p: Point2
    q: Point2

    def __post_init__(self):
        if math.hypot(self.q.x - self.p.x, self.q.y - self.p.y) <= MIN_SEGMENT_LENGTH:
            raise ValueError(f"degenerate segment {self.p} -> {self.q}")

    @classmethod
    def from_coords(cls, x1: float, y1: float, x2: float, y2: float) -> "Segment":
        return cls(Point2(float(x1), float(y1)), Point2(float(x2), float(y2)))

    def coords(self) -> tuple[float, float, float, float]:
        return (self.p.x, self.p.y, self.q.x, self.q.y)

    def reversed(self) -> "Segment":
        return Segment(self.q, self.p)


@dataclass(frozen=True)
class SegmentSet:
    """Ordered, indexable collection of segments.

    Indices are stable: evidence labels and detection records refer to them.
    An empty set is allowed (a blank image yields one); the detector treats it
    as "nothing to match".
    """

    segments: tuple[Segment, ...]
    name: str = "segments"
    _array: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        arr = np.array([s.coords() for s in self.segments], dtype=float).reshape(-1, 4)
        arr.flags.writeable = False
        object.__setattr__(self, "_array", arr)

    @classmethod
    def from_array(cls, arr, name: str = "segments") -> "SegmentSet":
        arr = np.asarray(arr, dtype=float).reshape(-1, 4)
        return cls(tuple(Segment.from_coords(*row) for row in arr), name)

    def as_array(self) -> np.ndarray:
        """(n, 4) read-only array of ``x1 y1 x2 y2`` rows."""
        return self._array

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __getitem__(self, i: int) -> Segment:
        return self.segments[i]


@dataclass(frozen=True)
class SimilarityTransform:
    """x -> scale * R(rotation) x + translation. No reflection."""

    scale: float
    rotation: float
    translation: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be finite and > 0, got {self.scale}")
        if not math.isfinite(self.rotation):
            raise ValueError("rotation must be finite")
        tx, ty = self.translation
        object.__setattr__(self, "translation", (float(tx), float(ty)))

    @classmethod
    def identity(cls) -> "SimilarityTransform":
        return cls(1.0, 0.0, (0.0, 0.0))

    def _linear(self) -> tuple[float, float]:
        return self.scale * math.cos(self.rotation), self.scale * math.sin(self.rotation)

    def apply_point(self, pt: Point2) -> Point2:
        a, b = self._linear()
        tx, ty = self.translation
        return Point2(a * pt.x - b * pt.y + tx, b * pt.x + a * pt.y + ty)

    def apply_array(self, xy: np.ndarray) -> np.ndarray:
        """Map an array whose last axis holds interleaved ``x, y`` pairs."""
        xy = np.asarray(xy, dtype=float)
        pts = xy.reshape(-1, 2)
        a, b = self._linear()
        tx, ty = self.translation
        out = np.empty_like(pts)
        out[:, 0] = a * pts[:, 0] - b * pts[:, 1] + tx
        out[:, 1] = b * pts[:, 0] + a * pts[:, 1] + ty
        return out.reshape(xy.shape)

    def compose(self, other: "SimilarityTransform") -> "SimilarityTransform":
        """Return ``self ∘ other`` (apply ``other`` first)."""
        a, b = self._linear()
        ox, oy = other.translation
        tx, ty = self.translation
        return SimilarityTransform(
            self.scale * other.scale,
            _wrap_angle(self.rotation + other.rotation),
            (a * ox - b * oy + tx, b * ox + a * oy + ty),
        )

    def inverse(self) -> "SimilarityTransform":
        s = 1.0 / self.scale
        r = -self.rotation
        c, sn = s * math.cos(r), s * math.sin(r)
        tx, ty = self.translation
        return SimilarityTransform(s, r, (-(c * tx - sn * ty), -(sn * tx + c * ty)))


@dataclass(frozen=True)
class Projection:
    """Relation of a segment CD to a reference segment AB.

    ``t_e``/``t_f`` parametrize the foot points of C and D on AB's carrier line
    (0 at A, 1 at B); ``theta`` is the undirected angle between the carrier
    lines; ``d`` is the mean perpendicular distance of C and D to AB's line.
    """

    theta: float
    d: float
    t_e: float
    t_f: float
    ref_length: float


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def segment_length(s: Segment) -> float:
    return math.hypot(s.q.x - s.p.x, s.q.y - s.p.y)


def midpoint(s: Segment) -> Point2:
    return Point2((s.p.x + s.q.x) / 2.0, (s.p.y + s.q.y) / 2.0)


def bounding_box(segments: Iterable[Segment]) -> tuple[Point2, Point2]:
    segs = list(segments)
    if not segs:
        raise ValueError("bounding box of an empty segment set")
    xs = [c for s in segs for c in (s.p.x, s.q.x)]
    ys = [c for s in segs for c in (s.p.y, s.q.y)]
    return Point2(min(xs), min(ys)), Point2(max(xs), max(ys))


def solve_similarity(src: Segment, dst: Segment) -> SimilarityTransform:
    """The unique similarity mapping ``src.p -> dst.p`` and ``src.q -> dst.q``."""
    u = complex(src.q.x - src.p.x, src.q.y - src.p.y)
    v = complex(dst.q.x - dst.p.x, dst.q.y - dst.p.y)
    z = v / u
    t = complex(dst.p.x, dst.p.y) - z * complex(src.p.x, src.p.y)
    return SimilarityTransform(abs(z), math.atan2(z.imag, z.real), (t.real, t.imag))


def apply_transform(t: SimilarityTransform, s: Segment) -> Segment:
    return Segment(t.apply_point(s.p), t.apply_point(s.q))


def transform_set(t: SimilarityTransform, segs: SegmentSet, name: str | None = None) -> SegmentSet:
    arr = t.apply_array(segs.as_array())
    return SegmentSet.from_array(arr, segs.name if name is None else name)


def project_onto(cd: Segment, ab: Segment) -> Projection:
    vx, vy = ab.q.x - ab.p.x, ab.q.y - ab.p.y
    length = math.hypot(vx, vy)
    l2 = vx * vx + vy * vy
    ex, ey = cd.p.x - ab.p.x, cd.p.y - ab.p.y
    fx, fy = cd.q.x - ab.p.x, cd.q.y - ab.p.y
    t_e = (ex * vx + ey * vy) / l2
    t_f = (fx * vx + fy * vy) / l2
    d = (abs(vx * ey - vy * ex) + abs(vx * fy - vy * fx)) / (2.0 * length)
    ux, uy = cd.q.x - cd.p.x, cd.q.y - cd.p.y
    theta = math.atan2(abs(ux * vy - uy * vx), abs(ux * vx + uy * vy))
    return Projection(theta=theta, d=d, t_e=t_e, t_f=t_f, ref_length=length)


Box = tuple[Point2, Point2]


def box_area(b: Box) -> float:
    return max(0.0, b[1].x - b[0].x) * max(0.0, b[1].y - b[0].y)


def box_intersection(a: Box, b: Box) -> float:
    w = min(a[1].x, b[1].x) - max(a[0].x, b[0].x)
    h = min(a[1].y, b[1].y) - max(a[0].y, b[0].y)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def box_iou(a: Box, b: Box) -> float:
    inter = box_intersection(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (box_area(a) + box_area(b) - inter)


def segments_from_coords(rows: Sequence[Sequence[float]], name: str = "segments") -> SegmentSet:
    return SegmentSet(tuple(Segment.from_coords(*r) for r in rows), name)
