import numpy as np
import pytest

from app.domain.models import BBox
from app.tracking_workflow.constants import MIN_BOX_SIZE
from app.tracking_workflow.geometry import (
    center_distance,
    clip_to_frame,
    from_bbox,
    overlap_ratio,
    to_bbox,
    to_corners,
)


def test_bbox_center_conversion():
    box = BBox(x=10, y=20, w=30, h=40)
    assert box.to_center() == (25, 40, 30, 40)
    assert to_bbox(from_bbox(box)) == box
    assert np.allclose(to_corners(from_bbox(box)), [10, 20, 40, 60])


@pytest.mark.parametrize(
    ("box", "expected"),
    [
        ([10, 10, 10, 10], 1.0),
        ([15, 10, 10, 10], 1.0 / 3.0),
        ([40, 40, 10, 10], 0.0),
    ],
)
def test_overlap_ratio(box, expected):
    assert overlap_ratio(np.array(box, dtype=float), np.array([10, 10, 10, 10.0]))[0] == pytest.approx(expected)


def test_center_distance():
    assert center_distance(np.array([[0, 0, 5, 5.0]]), np.array([3, 4, 1, 1.0]))[0] == pytest.approx(5.0)


def test_clip_to_frame_keeps_boxes_inside():
    boxes = np.array([[-10, 5, 20, 1.0], [100, 100, 500, 20]])
    out = clip_to_frame(boxes, (48, 64))
    corners = to_corners(out)
    assert np.all(corners[:, 0] >= 0) and np.all(corners[:, 2] <= 64)
    assert np.all(corners[:, 1] >= 0) and np.all(corners[:, 3] <= 48)
    assert np.all(out[:, 2:] >= MIN_BOX_SIZE)


def test_bbox_frame_intersection():
    assert BBox(x=-5, y=-5, w=10, h=10).intersects(64, 48)
    assert not BBox(x=70, y=0, w=10, h=10).intersects(64, 48)
