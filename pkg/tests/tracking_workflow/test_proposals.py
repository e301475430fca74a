import cv2
import numpy as np
import pytest

from app.core.exception import ProposalError
from app.domain.enums import Provenance
from app.tracking_workflow.constants import NEGATIVE_IOU, POSITIVE_IOU
from app.tracking_workflow.geometry import overlap_ratio, to_corners
from app.tracking_workflow.proposals import (
    attention_to_frame,
    crop_patches,
    draw_labeled_samples,
    gaussian_sample,
    global_proposals,
    merge_candidate_pools,
    region_boxes,
    threshold_regions,
)

FRAME = (48, 64)
BOX = np.array([30.0, 20.0, 12.0, 10.0])


def _attention_with_blobs() -> np.ndarray:
    attention = np.zeros(FRAME)
    attention[5:9, 5:9] = 0.9
    attention[30:40, 40:60] = 0.8
    attention[20, 20] = 0.95
    return attention


def test_threshold_regions_finds_components_above_min_area():
    regions = threshold_regions(_attention_with_blobs(), tau=0.5, min_area=4)
    assert sorted(region.area for region in regions) == [16, 200]
    small = min(regions, key=lambda region: region.area)
    assert small.center == pytest.approx((7.0, 7.0))


def test_threshold_regions_use_eight_connectivity():
    attention = np.zeros((6, 6))
    attention[1, 1] = attention[2, 2] = attention[3, 3] = attention[4, 4] = 1.0
    assert len(threshold_regions(attention, 0.5, min_area=4)) == 1


def test_threshold_rejects_tau_outside_unit_interval():
    with pytest.raises(ProposalError):
        threshold_regions(np.zeros(FRAME), tau=1.0)


def test_region_boxes_cover_region_or_use_reference_size():
    regions = sorted(threshold_regions(_attention_with_blobs()), key=lambda region: region.area)
    boxes = region_boxes(regions, (10.0, 10.0))
    assert np.allclose(boxes[0], [7.0, 7.0, 10.0, 10.0])
    assert np.allclose(boxes[1], [50.0, 35.0, 20.0, 10.0])


def test_gaussian_sample_is_deterministic_and_clipped():
    a = gaussian_sample(BOX, 50, np.random.default_rng(0), frame_size=FRAME)
    b = gaussian_sample(BOX, 50, np.random.default_rng(0), frame_size=FRAME)
    assert np.array_equal(a, b)
    corners = to_corners(a)
    assert np.all(corners[:, :2] >= 0)
    assert np.all(corners[:, 2] <= FRAME[1]) and np.all(corners[:, 3] <= FRAME[0])
    assert abs(a[:, 0].mean() - BOX[0]) < 2.0


@pytest.mark.parametrize("box", [[10, 10, 0, 5], [10, 10, 5, -1], [np.nan, 1, 2, 2]])
def test_gaussian_sample_rejects_degenerate_boxes(rng, box):
    with pytest.raises(ProposalError):
        gaussian_sample(np.array(box, dtype=float), 5, rng)


def test_labeled_samples_respect_iou_rules(rng):
    pos, neg = draw_labeled_samples(BOX, 20, 60, rng, FRAME)
    assert pos.shape == (20, 4) and neg.shape == (60, 4)
    assert np.all(overlap_ratio(pos, BOX) >= POSITIVE_IOU - 1e-9)
    assert np.all(overlap_ratio(neg, BOX) <= NEGATIVE_IOU + 1e-9)


def test_merge_prefers_global_candidates():
    local = np.tile(BOX, (10, 1))
    global_ = np.tile(BOX + 1.0, (6, 1))
    pool = merge_candidate_pools(local, global_, n=8, max_global=4)
    assert len(pool) == 8
    assert pool.count(Provenance.GLOBAL) == 4
    assert pool.count(Provenance.LOCAL) == 4
    records = pool.debug_records(3)
    assert records[0]["provenance"] == Provenance.GLOBAL.value
    assert records[0]["frame"] == 3 and records[0]["score"] is None


def test_merge_with_only_local_candidates():
    pool = merge_candidate_pools(np.tile(BOX, (5, 1)), np.zeros((0, 4)), n=8)
    assert len(pool) == 5 and pool.count(Provenance.GLOBAL) == 0
    with pytest.raises(ProposalError):
        merge_candidate_pools(np.zeros((0, 4)), np.zeros((0, 4)))


def test_global_proposals_sample_around_regions(rng):
    boxes = global_proposals(_attention_with_blobs(), (10.0, 10.0), rng, FRAME, n_per_region=5)
    assert boxes.shape == (10, 4)
    assert global_proposals(np.zeros(FRAME), (10.0, 10.0), rng, FRAME).shape == (0, 4)


def test_attention_is_resized_to_frame():
    attention = np.zeros((3, 4))
    attention[1, 1] = 1.0
    out = attention_to_frame(attention, FRAME)
    assert out.shape == FRAME
    assert 0.0 <= out.min() and out.max() <= 1.0


def test_crop_patches_shape_and_range(plain_sequence):
    boxes = np.array([[20.0, 20.0, 10.0, 10.0], [-5.0, -5.0, 10.0, 10.0]])
    patches = crop_patches(plain_sequence.frames[0], boxes, 16)
    assert patches.shape == (2, 3, 16, 16)
    assert patches.min() >= -0.5 and patches.max() <= 0.5
    assert np.all(patches[1, :, 0, 0] == 0.0)


def _flood_fill(binary: np.ndarray) -> list[set[tuple[int, int]]]:
    seen = np.zeros_like(binary, dtype=bool)
    components = []
    for start in zip(*np.nonzero(binary), strict=True):
        if seen[start]:
            continue
        stack, component = [start], set()
        seen[start] = True
        while stack:
            r, c = stack.pop()
            component.add((int(r), int(c)))
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    nr, nc = r + dr, c + dc
                    if 0 <= nr < binary.shape[0] and 0 <= nc < binary.shape[1] and binary[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        stack.append((nr, nc))
        components.append(component)
    return components


def test_regions_and_boxes_match_flood_fill_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        attention = rng.uniform(size=(12, 16)) * (rng.uniform(size=(12, 16)) < 0.4)
        regions = threshold_regions(attention, tau=0.5, min_area=1)
        expected = _flood_fill(attention >= 0.5)
        assert sorted(map(sorted, (r.pixels for r in regions))) == sorted(map(sorted, expected))
        boxes = region_boxes(regions, (0.0, 0.0))
        for region, box in zip(regions, boxes, strict=True):
            rows, cols = zip(*region.pixels, strict=True)
            assert box[2] == max(cols) - min(cols) + 1 and box[3] == max(rows) - min(rows) + 1
            assert box[0] == (min(cols) + max(cols) + 1) / 2.0


def test_gaussian_sample_without_spread_reproduces_box(rng):
    samples = gaussian_sample(BOX, 6, rng, sigma_xy=0.0, sigma_scale=0.0)
    assert np.array_equal(samples, np.tile(BOX, (6, 1)))


def test_regions_shrink_as_threshold_rises(rng):
    attention = cv2.GaussianBlur(rng.uniform(0.0, 1.0, FRAME), (7, 7), 2.0)
    attention = (attention - attention.min()) / (attention.max() - attention.min())
    loose = threshold_regions(attention, tau=0.4, min_area=1)
    strict = threshold_regions(attention, tau=0.6, min_area=1)
    assert strict
    for region in strict:
        assert any(region.pixels <= other.pixels for other in loose)


def test_gaussian_center_mean_converges():
    n = 10_000
    samples = gaussian_sample(BOX, n, np.random.default_rng(0))
    sigma = 0.3 * (BOX[2] + BOX[3]) / 2.0
    bound = 3.0 * sigma / np.sqrt(n)
    assert abs(samples[:, 0].mean() - BOX[0]) < bound
    assert abs(samples[:, 1].mean() - BOX[1]) < bound
