"""Command-line entry point: preprocess, detect, render, eval, synth.

Exit codes: 0 success (``detect``: at least one detection), 1 ``detect``
found nothing, 2 bad input.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import synthetic
from .detector import DetectParams, detect
from .evaluation import Criterion, eer, load_detection_corpus, parse_ground_truth, pr_curve, write_pr_csv
from .evidence import EvidenceParams
from .formats import (
    DetectionDocument,
    FormatError,
    SEGFILE_MAGIC,
    format_detections,
    read_detections,
    read_segments,
    write_segments,
)
from .geometry import SegmentSet, transform_set
from .ingest import IngestParams, extract_segments, load_image
from .render import RenderError, render_svg

log = logging.getLogger("geoevidence")

EXIT_OK, EXIT_EMPTY, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _add_ingest_flags(p: argparse.ArgumentParser) -> None:
    d = IngestParams()
    g = p.add_argument_group("preprocessing")
    g.add_argument("--canny-low", type=float, default=d.canny_low, help="hysteresis low threshold, fraction of max gradient")
    g.add_argument("--canny-high", type=float, default=d.canny_high, help="hysteresis high threshold, fraction of max gradient")
    g.add_argument("--sigma", type=float, default=d.sigma, help="Gaussian smoothing sigma in px")
    g.add_argument("--min-seg-len", type=float, default=d.min_segment_length, help="drop segments shorter than this (px)")
    g.add_argument("--fit-dev", type=float, default=d.fit_deviation, help="max pixel deviation from a fitted segment (px)")
    g.add_argument("--merge-angle", type=float, default=math.degrees(d.merge_angle), help="merge angle tolerance in DEGREES")
    g.add_argument("--merge-gap", type=float, default=d.merge_gap, help="max endpoint gap for merging (px)")


def _ingest_params(args) -> IngestParams:
    try:
        return IngestParams(
            canny_low=args.canny_low,
            canny_high=args.canny_high,
            min_segment_length=args.min_seg_len,
            fit_deviation=args.fit_dev,
            merge_angle=math.radians(args.merge_angle),
            merge_gap=args.merge_gap,
            sigma=args.sigma,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _read_image(path: str):
    try:
        return load_image(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: cannot decode image ({exc})") from None


def _read_segfile(path: str) -> SegmentSet:
    try:
        return read_segments(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    except FormatError as exc:
        raise InputError(str(exc)) from None


def _is_segfile(path: str) -> bool:
    try:
        with open(path, "rb") as fh:
            return fh.read(len(SEGFILE_MAGIC)) == SEGFILE_MAGIC.encode()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None


def cmd_preprocess(args) -> int:
    img = _read_image(args.image)
    segs = extract_segments(img, _ingest_params(args), name=Path(args.image).stem)
    out = args.out or str(Path(args.image).with_suffix(".seg"))
    write_segments(segs, out)
    print(len(segs))
    return EXIT_OK


def cmd_detect(args) -> int:
    template = _read_segfile(args.template)
    frame = None
    if _is_segfile(args.scene):
        scene = _read_segfile(args.scene)
    else:
        img = _read_image(args.scene)
        scene = extract_segments(img, _ingest_params(args), name=Path(args.scene).stem)
        frame = (float(img.width), float(img.height))
    try:
        params = DetectParams(
            evidence=EvidenceParams(th=args.th, endpoint_eps=args.eps),
            min_scale=args.min_scale,
            max_scale=args.max_scale,
            top_k=args.top_k,
            sim_floor=args.sim_floor,
            nms_iou=args.nms_iou,
            prune=not args.no_prune,
            frame=frame,
            parallel=args.parallel,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None

    dets = detect(template, scene, params)
    text = format_detections(DetectionDocument.build(template, scene, dets))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    log.info("%d detection(s)", len(dets))
    return EXIT_OK if dets else EXIT_EMPTY


def cmd_render(args) -> int:
    scene = _read_segfile(args.scene)
    try:
        doc = read_detections(args.detections)
    except OSError as exc:
        raise InputError(f"{args.detections}: {exc.strerror or exc}") from None
    except FormatError as exc:
        raise InputError(str(exc)) from None
    try:
        svg = render_svg(scene, doc)
    except RenderError as exc:
        raise InputError(str(exc)) from None
    Path(args.out).write_text(svg)
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        criterion = Criterion.parse(args.criterion)
        gt = parse_ground_truth(Path(args.gt).read_text(), args.gt)
        corpus = load_detection_corpus(args.detections_dir)
    except OSError as exc:
        raise InputError(f"{exc.filename}: {exc.strerror or exc}") from None
    except (FormatError, ValueError) as exc:
        raise InputError(str(exc)) from None
    if not gt:
        raise InputError(f"{args.gt}: no ground-truth boxes; recall is undefined")
    missing = sorted(set(gt) - set(corpus))
    if missing:
        raise InputError("no detections file for image id(s): " + ", ".join(missing))
    curve = pr_curve(corpus, gt, criterion)
    with open(args.out, "w", newline="") as fh:
        write_pr_csv(curve, fh)
    print(f"EER={eer(curve):.6f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    rng = np.random.default_rng(args.seed)
    template = synthetic.f117_template()
    frame = (args.size, args.size)
    t = synthetic.random_transform(rng, template, frame=frame)
    scene = synthetic.plant(template, t, synthetic.clutter(rng, args.clutter, frame=frame), rng).scene
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_segments(template, out / "template.seg")
    write_segments(scene, out / "scene.seg")
    write_segments(transform_set(t, template, name="truth"), out / "truth.seg")
    print(f"scale={t.scale:.6f} rotation={t.rotation:.6f} tx={t.translation[0]:.6f} ty={t.translation[1]:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoevidence",
        description="Find instances of a line-segment template by collecting geometric evidence.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="image -> segment file")
    p.add_argument("image")
    p.add_argument("-o", "--out", help="output segment file (default: <image>.seg)")
    _add_ingest_flags(p)
    p.set_defaults(func=cmd_preprocess)

    d_ev, d_det = EvidenceParams(), DetectParams()
    p = sub.add_parser(
        "detect",
        help="match a template against a scene",
        description="Angles are radians in output documents; angle flags are in degrees.",
    )
    p.add_argument("--template", required=True, help="template segment file")
    p.add_argument("--scene", required=True, help="scene segment file or raster image")
    p.add_argument("--out", help="write the detections document here instead of stdout")
    p.add_argument("--th", type=float, default=d_ev.th, help="evidence threshold TH (typically 0.4-0.6)")
    p.add_argument("--eps", type=float, default=d_ev.endpoint_eps, help="endpoint tolerance of the position term")
    p.add_argument("--top-k", type=int, default=d_det.top_k, help="ranked hypotheses sent to the area filter")
    p.add_argument("--min-scale", type=float, default=d_det.min_scale)
    p.add_argument("--max-scale", type=float, default=d_det.max_scale)
    p.add_argument("--sim-floor", type=float, default=d_det.sim_floor, help="drop detections below this Sim")
    p.add_argument("--nms-iou", type=float, default=d_det.nms_iou, help="box IoU above which lower-ranked duplicates drop")
    p.add_argument("--no-prune", action="store_true", help="enumerate every hypothesis (no scale/frame pruning)")
    p.add_argument("--parallel", action="store_true", help="score hypotheses on all cores")
    _add_ingest_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("render", help="SVG overlay of detections")
    p.add_argument("--scene", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="precision-recall curve and EER over a corpus")
    p.add_argument("--detections-dir", required=True, help="directory of <image_id>.json detection documents")
    p.add_argument("--gt", required=True, help="ground truth: 'image_id xmin ymin xmax ymax' per line")
    p.add_argument("--criterion", default="half-gt", help="'half-gt' or 'iou:<x>'")
    p.add_argument("--out", default="pr.csv", help="PR curve CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write a synthetic template + cluttered scene")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clutter", type=int, default=200)
    p.add_argument("--size", type=float, default=800.0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
