"""Shape-template object detection from line-segment geometric evidence."""

from .detector import DetectParams, Detection, Hypothesis, detect, enumerate_hypotheses, verify
from .evidence import EvidenceParams, assign_evidence
from .geometry import Point2, Segment, SegmentSet, SimilarityTransform

__all__ = [
    "DetectParams",
    "Detection",
    "EvidenceParams",
    "Hypothesis",
    "Point2",
    "Segment",
    "SegmentSet",
    "SimilarityTransform",
    "assign_evidence",
    "detect",
    "enumerate_hypotheses",
    "verify",
]

__version__ = "0.1.0"
