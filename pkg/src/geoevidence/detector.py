"""Hypothesis enumeration, verification and ranking.

Every (template segment, image segment, endpoint order) triple fixes one
similarity transform. The whole template is projected with it and scored by
how much of it is covered by image evidence. High-ranking projections are
then checked with the area filter and de-duplicated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _kernel
from .evidence import EvidenceAssignment, EvidenceParams, assign_evidence
from .geometry import (
    Box,
    Point2,
    SegmentSet,
    SimilarityTransform,
    bounding_box,
    box_iou,
    transform_set,
)
from .scoring import AreaReport, ScoreBreakdown, area_filter, similarity

log = logging.getLogger(__name__)

# Sims equal to this many decimals count as tied and fall back to enumeration order.
RANK_DECIMALS = 9


@dataclass(frozen=True)
class DetectParams:
    evidence: EvidenceParams = field(default_factory=EvidenceParams)
    min_scale: float = 0.2
    max_scale: float = 5.0
    top_k: int = 10
    sim_floor: float = 0.3
    nms_iou: float = 0.5
    prune: bool = True
    # (width, height) of the scene raster; None uses the scene's segment extent.
    frame: tuple[float, float] | None = None
    min_frame_overlap: float = 0.25
    parallel: bool = False

    def __post_init__(self):
        if not 0 < self.min_scale <= self.max_scale:
            raise ValueError("need 0 < min_scale <= max_scale")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not 0.0 <= self.sim_floor <= 1.0:
            raise ValueError("sim_floor must lie in [0, 1]")
        if not 0.0 < self.nms_iou <= 1.0:
            raise ValueError("nms_iou must lie in (0, 1]")


@dataclass(frozen=True)
class Hypothesis:
    transform: SimilarityTransform
    hyp_segments: SegmentSet
    # (template index, image index, endpoint order flag)
    origin: tuple[int, int, int]
    index: int = 0


@dataclass(frozen=True)
class Detection:
    hypothesis: Hypothesis
    score: ScoreBreakdown
    area: AreaReport
    bbox: Box
    labels: tuple[int | None, ...]
    assignment: EvidenceAssignment = field(repr=False, compare=False)

    @property
    def sim(self) -> float:
        return self.score.sim


@dataclass
class HypothesisTable:
    """Column store of enumerated hypotheses, in enumeration order."""

    scale: np.ndarray
    rotation: np.ndarray
    tx: np.ndarray
    ty: np.ndarray
    origin: np.ndarray  # (H, 3) int

    def __len__(self) -> int:
        return len(self.scale)

    def kernel_params(self) -> np.ndarray:
        return np.ascontiguousarray(
            np.stack(
                [self.scale * np.cos(self.rotation), self.scale * np.sin(self.rotation), self.tx, self.ty],
                axis=1,
            )
        )

    def transform(self, k: int) -> SimilarityTransform:
        return SimilarityTransform(
            float(self.scale[k]), float(self.rotation[k]), (float(self.tx[k]), float(self.ty[k]))
        )


def _frame_overlap(tmpl: np.ndarray, scale, rotation, tx, ty, frame: Box) -> np.ndarray:
    """Fraction of each projected template's bbox lying inside ``frame``."""
    pts = tmpl.reshape(-1, 2)
    a = (scale * np.cos(rotation))[:, None]
    b = (scale * np.sin(rotation))[:, None]
    xs = a * pts[:, 0] - b * pts[:, 1] + tx[:, None]
    ys = b * pts[:, 0] + a * pts[:, 1] + ty[:, None]
    # half-pixel pad keeps axis-aligned (zero-area) templates measurable
    x0, x1 = xs.min(axis=1) - 0.5, xs.max(axis=1) + 0.5
    y0, y1 = ys.min(axis=1) - 0.5, ys.max(axis=1) + 0.5
    iw = np.clip(np.minimum(x1, frame[1].x) - np.maximum(x0, frame[0].x), 0.0, None)
    ih = np.clip(np.minimum(y1, frame[1].y) - np.maximum(y0, frame[0].y), 0.0, None)
    return (iw * ih) / ((x1 - x0) * (y1 - y0))


def _scene_frame(image: SegmentSet, p: DetectParams) -> Box:
    if p.frame is not None:
        return Point2(0.0, 0.0), Point2(float(p.frame[0]), float(p.frame[1]))
    return bounding_box(image)


def hypothesis_table(template: SegmentSet, image: SegmentSet, p: DetectParams) -> HypothesisTable:
    m_arr = template.as_array()
    l_arr = image.as_array()
    if len(m_arr) == 0 or len(l_arr) == 0:
        empty = np.empty(0)
        return HypothesisTable(empty, empty, empty, empty, np.empty((0, 3), dtype=np.int64))

    mp = m_arr[:, 0] + 1j * m_arr[:, 1]
    u = (m_arr[:, 2] + 1j * m_arr[:, 3]) - mp
    lp = l_arr[:, 0] + 1j * l_arr[:, 1]
    lq = l_arr[:, 2] + 1j * l_arr[:, 3]
    # (M, N, 2): flag 0 maps m.p->l.p, flag 1 maps m.p->l.q
    dst_p = np.stack([lp, lq], axis=1)[None, :, :]
    v = np.stack([lq - lp, lp - lq], axis=1)[None, :, :]
    z = v / u[:, None, None]
    t = dst_p - z * mp[:, None, None]

    mi, ni, fi = np.meshgrid(np.arange(len(m_arr)), np.arange(len(l_arr)), np.arange(2), indexing="ij")
    origin = np.stack([mi.ravel(), ni.ravel(), fi.ravel()], axis=1)
    z = z.ravel()
    t = t.ravel()
    scale = np.abs(z)
    rotation = np.angle(z)
    tx, ty = t.real.copy(), t.imag.copy()

    if p.prune:
        keep = (scale >= p.min_scale) & (scale <= p.max_scale)
        frame = _scene_frame(image, p)
        idx = np.flatnonzero(keep)
        for start in range(0, len(idx), 4096):
            sl = idx[start : start + 4096]
            frac = _frame_overlap(m_arr, scale[sl], rotation[sl], tx[sl], ty[sl], frame)
            keep[sl[frac < p.min_frame_overlap]] = False
        scale, rotation, tx, ty, origin = scale[keep], rotation[keep], tx[keep], ty[keep], origin[keep]

    return HypothesisTable(scale, rotation, tx, ty, origin)


def _hypothesis(table: HypothesisTable, k: int, template: SegmentSet) -> Hypothesis:
    t = table.transform(k)
    return Hypothesis(
        transform=t,
        hyp_segments=transform_set(t, template, name=f"{template.name}@{k}"),
        origin=tuple(int(v) for v in table.origin[k]),
        index=k,
    )


def enumerate_hypotheses(template: SegmentSet, image: SegmentSet, p: DetectParams) -> Iterator[Hypothesis]:
    table = hypothesis_table(template, image, p)
    for k in range(len(table)):
        yield _hypothesis(table, k, template)


def verify(h: Hypothesis, image: SegmentSet, p: DetectParams) -> Detection:
    asg = assign_evidence(h.hyp_segments, image, p.evidence)
    score = similarity(h.hyp_segments, image, asg)
    area = area_filter(h.hyp_segments, asg)
    return Detection(
        hypothesis=h,
        score=score,
        area=area,
        bbox=bounding_box(h.hyp_segments),
        labels=tuple(asg.assigned),
        assignment=asg,
    )


def score_table(table: HypothesisTable, template: SegmentSet, image: SegmentSet, p: DetectParams) -> np.ndarray:
    """Sim of every hypothesis in ``table`` via the compiled scorer."""
    if len(table) == 0:
        return np.empty(0)
    fn = _kernel.score_hypotheses_parallel if p.parallel else _kernel.score_hypotheses_serial
    return fn(
        table.kernel_params(),
        np.ascontiguousarray(template.as_array()),
        np.ascontiguousarray(image.as_array()),
        float(p.evidence.th),
        float(p.evidence.endpoint_eps),
    )


def rank_order(sims: np.ndarray) -> np.ndarray:
    """Indices by sim descending; near-equal sims keep enumeration order."""
    key = -np.round(sims, RANK_DECIMALS)
    return np.lexsort((np.arange(len(sims)), key))


def suppress(dets: list[Detection], nms_iou: float) -> list[Detection]:
    kept: list[Detection] = []
    for d in dets:
        if all(box_iou(d.bbox, k.bbox) <= nms_iou for k in kept):
            kept.append(d)
    return kept


def detect(template: SegmentSet, image: SegmentSet, p: DetectParams | None = None) -> list[Detection]:
    p = p or DetectParams()
    if len(template) == 0 or len(image) == 0:
        return []
    table = hypothesis_table(template, image, p)
    sims = score_table(table, template, image, p)
    log.debug("scored %d hypotheses", len(table))
    top = rank_order(sims)[: p.top_k]
    candidates = [verify(_hypothesis(table, int(k), template), image, p) for k in top]
    candidates.sort(key=lambda d: (-round(d.score.sim, RANK_DECIMALS), d.hypothesis.index))
    passed = [d for d in candidates if d.area.passed]
    kept = suppress(passed, p.nms_iou)
    return [d for d in kept if d.score.sim >= p.sim_floor]
