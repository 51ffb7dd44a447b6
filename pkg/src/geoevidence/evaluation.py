"""Ground-truth matching, precision-recall sweeps and equal error rate."""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, TextIO

from .geometry import Box, Point2, box_area, box_intersection, box_iou

GroundTruth = Mapping[str, Sequence[Box]]
# (score, box) pairs for one image
ScoredBoxes = Sequence[tuple[float, Box]]


@dataclass(frozen=True)
class Criterion:
    """``iou`` needs IoU >= threshold; ``half-gt`` needs overlap >= threshold * GT area."""

    kind: str = "half-gt"
    threshold: float = 0.5

    def __post_init__(self):
        if self.kind not in ("iou", "half-gt"):
            raise ValueError(f"unknown criterion {self.kind!r}")
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("criterion threshold must lie in (0, 1]")

    @classmethod
    def parse(cls, text: str) -> "Criterion":
        if text == "half-gt":
            return cls("half-gt", 0.5)
        if text.startswith("iou:"):
            try:
                return cls("iou", float(text[4:]))
            except ValueError:
                pass
        raise ValueError(f"criterion must be 'half-gt' or 'iou:<x>', got {text!r}")

    def overlap(self, det: Box, gt: Box) -> float:
        if self.kind == "iou":
            return box_iou(det, gt)
        return box_intersection(det, gt) / box_area(gt)

    def accepts(self, det: Box, gt: Box) -> bool:
        return self.overlap(det, gt) >= self.threshold


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float
    tp: int
    fp: int
    fn: int


def match_detections(dets: Sequence[Box], gt: Sequence[Box], criterion: Criterion = Criterion()) -> tuple[int, int, int]:
    """Greedy one-to-one matching of ``dets`` (already in rank order) to ``gt``.

    Each detection takes the still-unmatched truth it overlaps most.
    """
    taken = [False] * len(gt)
    tp = 0
    for d in dets:
        best, best_ov = -1, -1.0
        for k, g in enumerate(gt):
            if taken[k] or not criterion.accepts(d, g):
                continue
            ov = criterion.overlap(d, g)
            if ov > best_ov:
                best, best_ov = k, ov
        if best >= 0:
            taken[best] = True
            tp += 1
    return tp, len(dets) - tp, len(gt) - tp


def pr_curve(
    corpus: Mapping[str, ScoredBoxes], gt: GroundTruth, criterion: Criterion = Criterion()
) -> list[PRPoint]:
    """Sweep the score threshold over every distinct detection score, high to low."""
    total_gt = sum(len(b) for b in gt.values())
    if total_gt == 0:
        raise ValueError("ground truth is empty; recall is undefined")
    ranked = {img: sorted(dets, key=lambda sb: -sb[0]) for img, dets in corpus.items()}
    thresholds = sorted({s for dets in corpus.values() for s, _ in dets}, reverse=True)
    images = sorted(set(gt) | set(corpus))
    curve = []
    for th in thresholds:
        tp = fp = fn = 0
        for img in images:
            boxes = [b for s, b in ranked.get(img, ()) if s >= th]
            a, b, c = match_detections(boxes, gt.get(img, ()), criterion)
            tp, fp, fn = tp + a, fp + b, fn + c
        curve.append(PRPoint(th, tp / (tp + fp), tp / total_gt, tp, fp, fn))
    return curve


def eer(curve: Sequence[PRPoint]) -> float:
    """Value where precision meets recall, interpolated between sweep points.

    Falls back to the mean of precision and recall at the closest approach when
    the two never cross; an empty curve scores 0.
    """
    if not curve:
        return 0.0
    gaps = [pt.precision - pt.recall for pt in curve]
    for k, pt in enumerate(curve):
        if gaps[k] == 0.0 and pt.recall > 0.0:
            return pt.recall
        if k > 0 and gaps[k - 1] > 0.0 > gaps[k]:
            prev = curve[k - 1]
            alpha = gaps[k - 1] / (gaps[k - 1] - gaps[k])
            return prev.recall + alpha * (pt.recall - prev.recall)
    k = min(range(len(curve)), key=lambda i: abs(gaps[i]))
    return (curve[k].precision + curve[k].recall) / 2.0


def parse_ground_truth(text: str, source: str | None = None) -> dict[str, list[Box]]:
    from .formats import FormatError

    gt: dict[str, list[Box]] = defaultdict(list)
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FormatError("expected 'image_id xmin ymin xmax ymax'", lineno, source)
        try:
            x0, y0, x1, y1 = (float(v) for v in parts[1:])
        except ValueError:
            raise FormatError("non-numeric box coordinate", lineno, source) from None
        if not (x0 < x1 and y0 < y1):
            raise FormatError("box needs min < max on both axes", lineno, source)
        gt[parts[0]].append((Point2(x0, y0), Point2(x1, y1)))
    return dict(gt)


def write_pr_csv(curve: Sequence[PRPoint], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["threshold", "precision", "recall"])
    for pt in curve:
        w.writerow([repr(pt.threshold), repr(pt.precision), repr(pt.recall)])


def load_detection_corpus(directory: str | Path) -> dict[str, list[tuple[float, Box]]]:
    """``<image_id>.json`` detection documents -> scored boxes per image id."""
    from .formats import read_detections

    corpus = {}
    for path in sorted(Path(directory).glob("*.json")):
        doc = read_detections(path)
        corpus[path.stem] = [
            (r.sim, (Point2(r.bbox[0], r.bbox[1]), Point2(r.bbox[2], r.bbox[3]))) for r in doc.detections
        ]
    return corpus
