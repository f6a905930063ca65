import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rohan.core import (BBox, bbox_from_mask, box_iou_xyxy, boxes_from_mask, iou,
                        mask_components, to_normalized, to_pixel)

from oracles import raster_iou


def pixel_boxes(grid=100):
    corner = st.tuples(st.integers(0, grid - 1), st.integers(0, grid - 1),
                       st.integers(1, grid), st.integers(1, grid))
    return corner.map(lambda t: (t[0], t[1], max(t[0] + 1, min(grid, t[0] + t[2])),
                                 max(t[1] + 1, min(grid, t[1] + t[3]))))


unit_boxes = st.builds(
    lambda cx, cy, w, h: BBox(cx, cy, w, h),
    st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.01, 0.5), st.floats(0.01, 0.5))


def test_bbox_rejects_degenerate():
    with pytest.raises(ValueError):
        BBox(0.5, 0.5, 0.0, 0.1)
    with pytest.raises(ValueError):
        BBox(1.2, 0.5, 0.1, 0.1)
    with pytest.raises(ValueError):
        BBox(0.5, 0.5, 0.1, 0.1, conf=1.5)


def test_clamped_keeps_edges_inside():
    b = BBox(0.02, 0.98, 0.1, 0.1).clamped()
    x1, y1, x2, y2 = b.xyxy()
    assert x1 >= 0 and y2 <= 1 + 1e-12
    assert b.w == pytest.approx(0.07)


def test_iou_identity_and_disjoint():
    a = BBox(0.3, 0.4, 0.2, 0.1)
    assert iou(a, a) == 1.0
    assert iou(BBox(.25, .5, .1, .1), BBox(.75, .5, .1, .1)) == 0.0


def test_iou_half_overlap_pixels():
    assert box_iou_xyxy((0, 0, 10, 10), (5, 0, 15, 10)) == pytest.approx(1 / 3)
    assert raster_iou((0, 0, 10, 10), (5, 0, 15, 10)) == pytest.approx(1 / 3)


def test_touching_boxes_have_zero_iou():
    assert box_iou_xyxy((0, 0, 10, 10), (10, 0, 20, 10)) == 0.0


@given(pixel_boxes(), pixel_boxes())
def test_iou_matches_rasterization(a, b):
    assert box_iou_xyxy(a, b) == raster_iou(a, b)


@given(unit_boxes, unit_boxes)
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0


def test_to_pixel_examples():
    assert to_pixel(BBox(0.5, 0.5, 1.0, 1.0), 640, 480) == (0, 0, 640, 480)
    assert to_pixel(BBox(0.5, 0.5, 0.25, 0.5), 400, 200) == (150, 50, 250, 150)


def test_to_pixel_rejects_zero_size():
    with pytest.raises(ValueError):
        to_pixel(BBox(0.5, 0.5, 0.1, 0.1), 0, 10)
    with pytest.raises(ValueError):
        to_normalized(0, 0, 1, 1, 10, 0)


def test_pixel_round_trip_error():
    rng = np.random.default_rng(3)
    W, H = 1920, 1080
    worst = 0.0
    for _ in range(1000):
        w, h = rng.uniform(0.01, 0.9, 2)
        cx, cy = rng.uniform(w / 2, 1 - w / 2), rng.uniform(h / 2, 1 - h / 2)
        b = BBox(cx, cy, w, h)
        r = to_normalized(*to_pixel(b, W, H), W, H)
        worst = max(worst, abs(r.cx - b.cx), abs(r.cy - b.cy), abs(r.w - b.w), abs(r.h - b.h))
    assert worst <= 1 / 1080


def test_bbox_from_mask_examples():
    m = np.zeros((10, 10), bool)
    assert bbox_from_mask(m) is None
    m[5, 5] = True
    b = bbox_from_mask(m)
    assert to_pixel(b, 10, 10) == (5, 5, 6, 6)

    m = np.zeros((10, 10), bool)
    m[2:8, 3:9] = True
    b = bbox_from_mask(m)
    assert (b.cx, b.cy, b.w, b.h) == pytest.approx((0.6, 0.5, 0.6, 0.6))


@given(st.integers(0, 2**32 - 1), st.integers(4, 40), st.integers(4, 40))
def test_bbox_from_mask_contains_all_foreground(seed, h, w):
    mask = np.random.default_rng(seed).random((h, w)) < 0.05
    b = bbox_from_mask(mask)
    if not mask.any():
        assert b is None
        return
    x1, y1, x2, y2 = to_pixel(b, w, h)
    ys, xs = np.nonzero(mask)
    assert xs.min() >= x1 and xs.max() < x2
    assert ys.min() >= y1 and ys.max() < y2


def test_components_use_8_connectivity():
    m = np.zeros((8, 8), bool)
    m[1, 1] = m[2, 2] = True        # diagonal neighbours: one component
    m[5:7, 5:7] = True
    comps = mask_components(m)
    assert len(comps) == 2
    assert [int(c.sum()) for c in comps] == [2, 4]
    assert len(boxes_from_mask(m, min_area=3)) == 1


def test_component_boxes_are_tight():
    m = np.zeros((20, 30), bool)
    m[2:5, 3:7] = True
    m[10:18, 20:29] = True
    boxes = boxes_from_mask(m)
    assert [to_pixel(b, 30, 20) for b in boxes] == [(3, 2, 7, 5), (20, 10, 29, 18)]
    assert math.isclose(boxes[1].w, 9 / 30)
