"""Plain-text segment files and JSON detection documents."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import TextIO

from .detector import Detection
from .geometry import Segment, SegmentSet

SEGFILE_MAGIC = "segset"
SEGFILE_VERSION = "v1"
DETECTIONS_FORMAT = "geoevidence-detections v1"


class FormatError(ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


def _clean_name(name: str) -> str:
    name = re.sub(r"\s+", "_", name.strip())
    return name or "unnamed"


def format_segments(segs: SegmentSet) -> str:
    lines = [f"{SEGFILE_MAGIC} {SEGFILE_VERSION} {_clean_name(segs.name)} {len(segs)}"]
    for s in segs:
        lines.append(" ".join(repr(float(v)) for v in s.coords()))
    return "\n".join(lines) + "\n"


def parse_segments(text: str, source: str | None = None) -> SegmentSet:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty segment file", 1, source)
    head = lines[0].split()
    if len(head) != 4 or head[0] != SEGFILE_MAGIC or head[1] != SEGFILE_VERSION:
        raise FormatError(f"expected header '{SEGFILE_MAGIC} {SEGFILE_VERSION} <name> <count>'", 1, source)
    name = head[2]
    try:
        count = int(head[3])
    except ValueError:
        raise FormatError(f"bad segment count {head[3]!r}", 1, source) from None
    if count < 0:
        raise FormatError("negative segment count", 1, source)

    segs = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise FormatError(f"expected 4 numbers, got {len(parts)}", lineno, source)
        try:
            coords = [float(v) for v in parts]
        except ValueError:
            raise FormatError(f"non-numeric value in {line.strip()!r}", lineno, source) from None
        try:
            segs.append(Segment.from_coords(*coords))
        except ValueError as exc:
            raise FormatError(str(exc), lineno, source) from None
    if len(segs) != count:
        raise FormatError(f"header declares {count} segments, found {len(segs)}", len(lines), source)
    return SegmentSet(tuple(segs), name)


def read_segments(path: str | Path) -> SegmentSet:
    path = Path(path)
    try:
        text = path.read_text()
    except UnicodeDecodeError:
        raise FormatError("not a text segment file", None, str(path)) from None
    return parse_segments(text, str(path))


def write_segments(segs: SegmentSet, path: str | Path) -> None:
    Path(path).write_text(format_segments(segs))


@dataclass(frozen=True)
class DetectionRecord:
    rank: int
    scale: float
    rotation: float
    tx: float
    ty: float
    sim: float
    gamma: int
    area_ev: float
    area_hy: float
    bbox: tuple[float, float, float, float]
    origin: tuple[int, int, int]
    hyp_segments: tuple[tuple[float, float, float, float], ...]
    # (image segment index, template segment index) for every labelled image segment
    labels: tuple[tuple[int, int], ...]

    @classmethod
    def from_detection(cls, det: Detection, rank: int) -> "DetectionRecord":
        t = det.hypothesis.transform
        lo, hi = det.bbox
        return cls(
            rank=rank,
            scale=t.scale,
            rotation=t.rotation,
            tx=t.translation[0],
            ty=t.translation[1],
            sim=det.score.sim,
            gamma=det.score.gamma,
            area_ev=det.area.area_ev,
            area_hy=det.area.area_hy,
            bbox=(lo.x, lo.y, hi.x, hi.y),
            origin=det.hypothesis.origin,
            hyp_segments=tuple(s.coords() for s in det.hypothesis.hyp_segments),
            labels=tuple((i, j) for i, j in enumerate(det.labels) if j is not None),
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["transform"] = {k: d.pop(k) for k in ("scale", "rotation", "tx", "ty")}
        d["hyp_segments"] = [list(s) for s in self.hyp_segments]
        d["labels"] = [list(p) for p in self.labels]
        d["bbox"] = list(self.bbox)
        d["origin"] = list(self.origin)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "DetectionRecord":
        t = d["transform"]
        return cls(
            rank=int(d["rank"]),
            scale=float(t["scale"]),
            rotation=float(t["rotation"]),
            tx=float(t["tx"]),
            ty=float(t["ty"]),
            sim=float(d["sim"]),
            gamma=int(d["gamma"]),
            area_ev=float(d["area_ev"]),
            area_hy=float(d["area_hy"]),
            bbox=tuple(float(v) for v in d["bbox"]),
            origin=tuple(int(v) for v in d["origin"]),
            hyp_segments=tuple(tuple(float(v) for v in s) for s in d["hyp_segments"]),
            labels=tuple((int(i), int(j)) for i, j in d["labels"]),
        )


@dataclass(frozen=True)
class DetectionDocument:
    template: str
    template_size: int
    scene: str
    scene_size: int
    detections: tuple[DetectionRecord, ...]

    @classmethod
    def build(cls, template: SegmentSet, scene: SegmentSet, dets: list[Detection]) -> "DetectionDocument":
        return cls(
            template=template.name,
            template_size=len(template),
            scene=scene.name,
            scene_size=len(scene),
            detections=tuple(DetectionRecord.from_detection(d, k + 1) for k, d in enumerate(dets)),
        )


def format_detections(doc: DetectionDocument) -> str:
    body = {
        "format": DETECTIONS_FORMAT,
        "template": doc.template,
        "template_size": doc.template_size,
        "scene": doc.scene,
        "scene_size": doc.scene_size,
        "detections": [r.to_json() for r in doc.detections],
    }
    return json.dumps(body, indent=1) + "\n"


def parse_detections(text: str, source: str | None = None) -> DetectionDocument:
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
    if not isinstance(body, dict) or body.get("format") != DETECTIONS_FORMAT:
        raise FormatError(f"not a '{DETECTIONS_FORMAT}' document", None, source)
    try:
        return DetectionDocument(
            template=str(body["template"]),
            template_size=int(body["template_size"]),
            scene=str(body["scene"]),
            scene_size=int(body["scene_size"]),
            detections=tuple(DetectionRecord.from_json(d) for d in body["detections"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed detection record: {exc}", None, source) from None


def read_detections(path: str | Path) -> DetectionDocument:
    return parse_detections(Path(path).read_text(), str(path))


def write_detections(doc: DetectionDocument, out: TextIO) -> None:
    out.write(format_detections(doc))
