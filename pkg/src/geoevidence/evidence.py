"""Evidence metric between an image segment and a hypothetical segment.

An image segment CD supports a hypothetical segment AB when the combined
angle/distance/position penalty is small. Each image segment supports at most
one hypothetical segment: the one with the lowest penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Projection, Segment, SegmentSet, project_onto, segment_length

# Penalties closer than this are treated as tied, so that the lowest
# hypothetical index wins deterministically despite rounding noise.
TIE_EPS = 1e-12


@dataclass(frozen=True)
class EvidenceParams:
    th: float = 0.5
    endpoint_eps: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.th <= 1.0:
            raise ValueError(f"th must lie in (0, 1], got {self.th}")
        if not 0.0 < self.endpoint_eps < 0.2:
            raise ValueError(f"endpoint_eps must lie in (0, 0.2), got {self.endpoint_eps}")


@dataclass(frozen=True)
class EvidenceScore:
    d1: float
    d2: float
    d3: float
    dis: float


@dataclass
class EvidenceAssignment:
    """Exclusive mapping of image segments onto hypothetical segments.

    ``evidence[j]`` lists the image segments supporting hypothetical segment
    ``j`` in image order; ``assigned[i]`` / ``dis[i]`` give the reverse
    mapping (``None`` when image segment ``i`` supports nothing).
    """

    evidence: list[list[int]]
    assigned: list[int | None]
    dis: list[float | None] = field(default_factory=list)

    @property
    def gamma(self) -> int:
        return sum(1 for ev in self.evidence if ev)


def d3_term(t_e: float, t_f: float, eps: float = 0.05) -> float:
    """Projected-position penalty.

    Cases are tested in a fixed order; the endpoint-degenerate case goes first
    and the boundaries t = 0 / t = 1 are closed so that every input lands in
    exactly one branch.
    """
    lo, hi = min(t_e, t_f), max(t_e, t_f)
    if hi - lo <= eps and ((abs(lo) <= eps and abs(hi) <= eps) or (abs(lo - 1) <= eps and abs(hi - 1) <= eps)):
        return 0.5
    if 0.0 <= lo and hi <= 1.0:
        return 0.0
    if lo <= 0.0 and hi >= 1.0:
        return 0.0
    if lo >= 1.0:
        return abs(t_e - t_f) + lo - 1.0
    if hi <= 0.0:
        return abs(t_e - t_f) - hi
    if lo < 0.0:
        # lo < 0 < hi < 1
        return 1.0 - abs(hi)
    # 0 < lo < 1 < hi
    return abs(lo)


def evidence_distance(proj: Projection, eps: float = 0.05) -> EvidenceScore:
    d1 = abs(math.sin(proj.theta))
    d2 = proj.d / proj.ref_length
    d3 = d3_term(proj.t_e, proj.t_f, eps)
    return EvidenceScore(d1, d2, d3, d1 + d2 + d3)


def passes_threshold(s: EvidenceScore, p: EvidenceParams) -> bool:
    cap = 2.0 / 3.0 * p.th
    return s.dis <= p.th and s.d1 <= cap and s.d2 <= cap and s.d3 <= cap


def score_pair(cd: Segment, ab: Segment, p: EvidenceParams) -> EvidenceScore:
    return evidence_distance(project_onto(cd, ab), p.endpoint_eps)


def assign_evidence(hyps: SegmentSet, image: SegmentSet, p: EvidenceParams) -> EvidenceAssignment:
    evidence: list[list[int]] = [[] for _ in range(len(hyps))]
    assigned: list[int | None] = []
    best_dis: list[float | None] = []
    for i, l in enumerate(image):
        h_best = None
        mindis = p.th
        for j, h in enumerate(hyps):
            s = score_pair(l, h, p)
            if not passes_threshold(s, p) or s.dis >= mindis:
                continue
            # strict improvement needed once a candidate exists
            if h_best is not None and s.dis > mindis - TIE_EPS:
                continue
            h_best, mindis = j, s.dis
        assigned.append(h_best)
        best_dis.append(None if h_best is None else mindis)
        if h_best is not None:
            evidence[h_best].append(i)
    return EvidenceAssignment(evidence, assigned, best_dis)


def match_length(l: Segment, h: Segment) -> float:
    """Length of ``h`` covered by the orthogonal projection of ``l``."""
    proj = project_onto(l, h)
    lo = max(0.0, min(proj.t_e, proj.t_f))
    hi = min(1.0, max(proj.t_e, proj.t_f))
    return segment_length(h) * max(0.0, hi - lo)
