"""Coverage similarity of a hypothesis and the triangle-fan area filter."""

from __future__ import annotations

from dataclasses import dataclass

from .evidence import EvidenceAssignment, match_length
from .geometry import Point2, Segment, SegmentSet, midpoint, segment_length


@dataclass(frozen=True)
class ScoreBreakdown:
    matchval: tuple[float, ...]
    total_hyp_length: float
    gamma: int
    sim: float


@dataclass(frozen=True)
class AreaReport:
    center: Point2
    area_hy: float
    area_ev: float
    passed: bool


def similarity(hyps: SegmentSet, image: SegmentSet, asg: EvidenceAssignment) -> ScoreBreakdown:
    """Sim = (sum of capped matched lengths / sum of lengths) * (gamma / M)."""
    m = len(hyps)
    matchval = []
    total = 0.0
    for h, ev in zip(hyps, asg.evidence):
        length = segment_length(h)
        total += length
        covered = sum(match_length(image[i], h) for i in ev)
        matchval.append(min(length, covered))
    gamma = asg.gamma
    sim = (sum(matchval) / total) * (gamma / m) if m else 0.0
    return ScoreBreakdown(tuple(matchval), total, gamma, min(1.0, sim))


def center_point(hyps: SegmentSet) -> Point2:
    mids = [midpoint(h) for h in hyps]
    return Point2(sum(p.x for p in mids) / len(mids), sum(p.y for p in mids) / len(mids))


def triangle_area(s: Segment, c: Point2) -> float:
    ux, uy = s.q.x - s.p.x, s.q.y - s.p.y
    wx, wy = c.x - s.p.x, c.y - s.p.y
    return abs(ux * wy - uy * wx) / 2.0


def area_filter(hyps: SegmentSet, asg: EvidenceAssignment) -> AreaReport:
    center = center_point(hyps)
    area_hy = 0.0
    area_ev = 0.0
    for h, ev in zip(hyps, asg.evidence):
        a = triangle_area(h, center)
        area_hy += a
        if ev:
            area_ev += a
    return AreaReport(center, area_hy, area_ev, area_ev >= 0.5 * area_hy)
