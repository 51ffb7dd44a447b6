"""SVG overlay of scene segments, hypotheses and their evidence."""

from __future__ import annotations

import colorsys
import xml.etree.ElementTree as ET

from .formats import DetectionDocument
from .geometry import SegmentSet

SCENE_COLOR = "#a0a0a0"
DASH = "6 4"


class RenderError(ValueError):
    pass


def segment_color(index: int) -> str:
    """Stable, well-separated hue per template segment index (golden-angle walk)."""
    hue = (index * 0.618033988749895) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.85, 0.9)
    return "#{:02x}{:02x}{:02x}".format(round(r * 255), round(g * 255), round(b * 255))


def _num(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _line(parent, coords, **attrs):
    x1, y1, x2, y2 = coords
    return ET.SubElement(parent, "line", x1=_num(x1), y1=_num(y1), x2=_num(x2), y2=_num(y2), **attrs)


def render_svg(scene: SegmentSet, doc: DetectionDocument, margin: float = 10.0) -> str:
    arr = scene.as_array()
    for rec in doc.detections:
        for i, j in rec.labels:
            if not 0 <= i < len(scene):
                raise RenderError(f"detection {rec.rank}: image segment {i} not in scene ({len(scene)} segments)")
            if not 0 <= j < len(rec.hyp_segments):
                raise RenderError(f"detection {rec.rank}: template segment {j} out of range")

    xs = [v for row in arr for v in (row[0], row[2])]
    ys = [v for row in arr for v in (row[1], row[3])]
    for rec in doc.detections:
        for s in rec.hyp_segments:
            xs += [s[0], s[2]]
            ys += [s[1], s[3]]
    if xs:
        x0, y0 = min(xs) - margin, min(ys) - margin
        w, h = max(xs) - min(xs) + 2 * margin, max(ys) - min(ys) + 2 * margin
    else:
        x0, y0, w, h = 0.0, 0.0, 2 * margin, 2 * margin

    root = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        version="1.1",
        width=_num(w),
        height=_num(h),
        viewBox=f"{_num(x0)} {_num(y0)} {_num(w)} {_num(h)}",
    )
    g_scene = ET.SubElement(root, "g", id="scene", stroke=SCENE_COLOR, **{"stroke-width": "1"})
    for row in arr:
        _line(g_scene, row, **{"class": "scene"})

    for rec in doc.detections:
        g = ET.SubElement(root, "g", id=f"detection-{rec.rank}", **{"stroke-width": "2"})
        ET.SubElement(g, "title").text = f"rank {rec.rank} sim {rec.sim:.4f}"
        for j, s in enumerate(rec.hyp_segments):
            _line(g, s, stroke=segment_color(j), **{"class": "hypothesis", "stroke-dasharray": DASH})
        for i, j in rec.labels:
            _line(g, arr[i], stroke=segment_color(j), **{"class": "evidence"})

    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"
