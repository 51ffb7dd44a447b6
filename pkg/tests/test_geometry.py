import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from geoevidence.geometry import (
    Point2,
    Segment,
    SegmentSet,
    SimilarityTransform,
    apply_transform,
    bounding_box,
    box_iou,
    midpoint,
    project_onto,
    segment_length,
    solve_similarity,
)

coord = st.floats(-1000, 1000, allow_nan=False, allow_infinity=False)


@st.composite
def segments(draw):
    x1, y1, x2, y2 = (draw(coord) for _ in range(4))
    assume(math.hypot(x2 - x1, y2 - y1) > 1e-3)
    return Segment.from_coords(x1, y1, x2, y2)


@st.composite
def transforms(draw):
    return SimilarityTransform(
        draw(st.floats(0.1, 10)), draw(st.floats(-math.pi, math.pi)), (draw(coord), draw(coord))
    )


def seg(*c):
    return Segment.from_coords(*c)


def close_pt(a, b, tol=1e-9):
    return math.hypot(a.x - b.x, a.y - b.y) <= tol


def test_degenerate_segment_rejected():
    with pytest.raises(ValueError):
        seg(1, 1, 1, 1)
    with pytest.raises(ValueError):
        Point2(float("nan"), 0)


def test_scale_must_be_positive():
    with pytest.raises(ValueError):
        SimilarityTransform(0.0, 0.0)
    with pytest.raises(ValueError):
        SimilarityTransform(-1.0, 0.0)


@pytest.mark.parametrize(
    "src, dst, scale, rot, trans",
    [
        ((0, 0, 1, 0), (0, 0, 1, 0), 1.0, 0.0, (0, 0)),
        ((0, 0, 1, 0), (2, 3, 2, 5), 2.0, math.pi / 2, (2, 3)),
        ((0, 0, 2, 0), (5, 5, 6, 5), 0.5, 0.0, (5, 5)),
    ],
)
def test_solve_similarity_examples(src, dst, scale, rot, trans):
    t = solve_similarity(seg(*src), seg(*dst))
    assert t.scale == pytest.approx(scale, abs=1e-12)
    assert t.rotation == pytest.approx(rot, abs=1e-12)
    assert t.translation == pytest.approx(trans, abs=1e-12)
    # application oracle
    out = apply_transform(t, seg(*src))
    assert close_pt(out.p, seg(*dst).p) and close_pt(out.q, seg(*dst).q)


def test_apply_transform_examples():
    s = seg(0, 0, 1, 0)
    assert apply_transform(SimilarityTransform.identity(), s) == s
    out = apply_transform(SimilarityTransform(2, 0), s)
    assert out.coords() == (0, 0, 2, 0)
    out = apply_transform(SimilarityTransform(2, math.pi / 2, (2, 3)), s)
    assert out.coords() == pytest.approx((2, 3, 2, 5), abs=1e-12)


def test_project_onto_examples():
    pr = project_onto(seg(1, 1, 3, 1), seg(0, 0, 4, 0))
    assert (pr.theta, pr.d, pr.t_e, pr.t_f, pr.ref_length) == pytest.approx((0, 1, 0.25, 0.75, 4))
    ab = seg(0, 0, 4, 0)
    pr = project_onto(ab, ab)
    assert (pr.theta, pr.d, pr.t_e, pr.t_f) == pytest.approx((0, 0, 0, 1))
    pr = project_onto(seg(0, 0, 0, 2), ab)
    assert (pr.theta, pr.d, pr.t_e, pr.t_f) == pytest.approx((math.pi / 2, 1, 0, 0))


def _dot_oracle(cd, ab):
    a = np.array([ab.p.x, ab.p.y])
    v = np.array([ab.q.x, ab.q.y]) - a
    c = np.array([cd.p.x, cd.p.y])
    d = np.array([cd.q.x, cd.q.y])
    t_e = np.dot(c - a, v) / np.dot(v, v)
    t_f = np.dot(d - a, v) / np.dot(v, v)
    foot_e, foot_f = a + t_e * v, a + t_f * v
    dist = (np.linalg.norm(c - foot_e) + np.linalg.norm(d - foot_f)) / 2
    u = d - c
    cosang = abs(np.dot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.acos(min(1.0, cosang)), dist, t_e, t_f


@given(segments(), segments())
def test_project_onto_matches_closed_form(cd, ab):
    pr = project_onto(cd, ab)
    theta, d, t_e, t_f = _dot_oracle(cd, ab)
    assert 0 <= pr.theta <= math.pi / 2
    assert pr.theta == pytest.approx(theta, abs=1e-6)
    assert pr.d == pytest.approx(d, rel=1e-6, abs=1e-6)
    assert pr.t_e == pytest.approx(t_e, rel=1e-9, abs=1e-9)
    assert pr.t_f == pytest.approx(t_f, rel=1e-9, abs=1e-9)


def test_small_helpers():
    assert segment_length(seg(0, 0, 3, 4)) == 5
    assert midpoint(seg(0, 0, 2, 4)) == Point2(1, 2)
    lo, hi = bounding_box(SegmentSet((seg(0, 0, 1, 1), seg(-1, 2, 0, 0))))
    assert (lo, hi) == (Point2(-1, 0), Point2(1, 2))


def test_box_iou():
    a = (Point2(0, 0), Point2(1, 1))
    assert box_iou(a, a) == 1
    assert box_iou(a, (Point2(2, 2), Point2(3, 3))) == 0
    assert box_iou(a, (Point2(0.5, 0), Point2(1.5, 1))) == pytest.approx(1 / 3)


@given(segments(), segments())
def test_round_trip(src, dst):
    out = apply_transform(solve_similarity(src, dst), src)
    scale = max(1.0, abs(dst.p.x), abs(dst.p.y), abs(dst.q.x), abs(dst.q.y))
    assert close_pt(out.p, dst.p, 1e-9 * scale) and close_pt(out.q, dst.q, 1e-9 * scale)


@given(segments(), segments(), segments())
def test_composition(src, mid, dst):
    direct = solve_similarity(src, dst)
    composed = solve_similarity(mid, dst).compose(solve_similarity(src, mid))
    for pt in (src.p, src.q, Point2(3.0, -7.0)):
        a, b = direct.apply_point(pt), composed.apply_point(pt)
        tol = 1e-9 * max(1.0, abs(a.x), abs(a.y))
        assert close_pt(a, b, tol)


@given(transforms(), coord, coord)
def test_inverse(t, x, y):
    p = Point2(x, y)
    back = t.inverse().compose(t).apply_point(p)
    assert close_pt(back, p, 1e-9 * max(1.0, abs(x), abs(y)))


@given(segments(), segments())
def test_projection_reversal(cd, ab):
    a = project_onto(cd, ab)
    b = project_onto(cd.reversed(), ab)
    assert (a.t_e, a.t_f) == pytest.approx((b.t_f, b.t_e), rel=1e-12, abs=1e-12)
    assert a.theta == pytest.approx(b.theta, abs=1e-12)
    assert a.d == pytest.approx(b.d, rel=1e-12, abs=1e-12)


@given(segments(), segments(), transforms())
def test_projection_similarity_invariance(cd, ab, t):
    a = project_onto(cd, ab)
    b = project_onto(apply_transform(t, cd), apply_transform(t, ab))
    assert b.theta == pytest.approx(a.theta, abs=1e-6)
    assert b.t_e == pytest.approx(a.t_e, rel=1e-6, abs=1e-6)
    assert b.t_f == pytest.approx(a.t_f, rel=1e-6, abs=1e-6)
    assert b.d / b.ref_length == pytest.approx(a.d / a.ref_length, rel=1e-6, abs=1e-6)
    assert b.d == pytest.approx(a.d * t.scale, rel=1e-6, abs=1e-6)
