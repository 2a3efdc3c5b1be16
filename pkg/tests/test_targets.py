import numpy as np
import pytest

from quadkit.errors import NonConvexError, ParseError
from quadkit.geometry import GroundTruth, canonicalize, iou_quad
from quadkit.targets import (
    DEFAULT_LEVELS,
    IGNORE,
    NEGATIVE,
    POSITIVE,
    LevelSpec,
    assign_levels,
    bin_center,
    bin_center_grids,
    build_initial_targets,
    build_refine_targets,
    decode_initial,
    decode_initial_map,
    decode_refined,
    deserialize_target_maps,
    format_target_summary,
    ideal_outputs,
    ideal_refined_outputs,
    level_map_shape,
    serialize_target_maps,
)

L2 = LevelSpec(2, 0.0, 32.0)


def gt_square(cx, cy, half, ignore=False):
    q = canonicalize([(cx - half, cy - half), (cx + half, cy - half),
                      (cx + half, cy + half), (cx - half, cy + half)])
    return GroundTruth(q, ignore)


def test_bin_center_examples():
    assert bin_center((0, 0), 4) == (2.0, 2.0)
    assert bin_center((3, 1), 4) == (14.0, 6.0)
    assert bin_center((0, 0), 8) == (4.0, 4.0)
    assert bin_center((2, 5), 1) == (2.0, 5.0)
    with pytest.raises(ValueError):
        bin_center((0, 0), 0)


def test_bin_center_grids_agree_with_scalar():
    xs, ys = bin_center_grids(3, 5, 8)
    for y in range(3):
        for x in range(5):
            assert (xs[y, x], ys[y, x]) == bin_center((x, y), 8)


def test_level_map_shape_rounds_up():
    assert level_map_shape(64, 64, 4) == (16, 16)
    assert level_map_shape(65, 63, 4) == (17, 16)
    assert level_map_shape(1, 1, 32) == (1, 1)


def test_level_assignment_table():
    cases = [
        (10.0, [2]),
        (16.0, [2]),
        (20.0, [2, 3]),
        (32.0, [2, 3]),
        (33.0, [3, 4]),
        (64.0, [3, 4]),
        (100.0, [4, 5]),
        (200.0, [5, 6]),
        (300.0, [6]),
        (10000.0, [6]),
    ]
    for scale, levels in cases:
        got = [spec.level for spec in DEFAULT_LEVELS if spec.holds(scale)]
        assert got == levels, scale


def test_every_scale_hits_one_or_two_levels():
    rng = np.random.default_rng(0)
    for s in np.exp(rng.uniform(np.log(1.0), np.log(5000.0), size=500)):
        n = sum(spec.holds(s) for spec in DEFAULT_LEVELS)
        assert n in (1, 2)


def test_assign_levels_groups_instances():
    gts = [gt_square(100, 100, 10), gt_square(300, 300, 40)]  # scales 20 and 80
    grouped = assign_levels(gts)
    assert grouped[2] == [gts[0]]
    assert grouped[3] == [gts[0]]
    assert grouped[4] == [gts[1]]
    assert grouped[5] == [gts[1]]
    assert grouped[6] == []


def test_initial_targets_frozen_offset_example():
    # 32-wide square spanning (-12,-12)..(20,20); bin (0,0) at stride 4 has
    # center (2,2), giving corner offsets in units of the stride.
    gt = gt_square(4, 4, 16)
    maps = build_initial_targets([gt], L2, 4, 4, shrink_r=0.3)
    assert maps.cls[0, 0] == POSITIVE
    assert tuple(maps.reg[0, 0]) == (-3.5, -3.5, 4.5, -3.5, 4.5, 4.5, -3.5, 4.5)


def test_initial_targets_cls_partition():
    gts = [gt_square(10, 10, 8), gt_square(40, 40, 6, ignore=True)]
    maps = build_initial_targets(gts, L2, 16, 16, shrink_r=0.3)
    assert maps.cls.dtype == np.int8
    assert set(np.unique(maps.cls)) <= {POSITIVE, NEGATIVE, IGNORE}
    assert (maps.cls == POSITIVE).any()
    assert (maps.cls == IGNORE).any()
    assert np.all(maps.reg[maps.cls != POSITIVE] == 0.0)
    assert np.all(maps.matched_gt[maps.cls != POSITIVE] == -1)


def test_initial_targets_annulus_is_ignore():
    # Side-24 square: full extent [4,28], shrunk core [11.2,20.8] at r=0.3.
    gt = gt_square(16, 16, 12)
    maps = build_initial_targets([gt], L2, 8, 8, shrink_r=0.3)
    assert maps.cls[4, 4] == POSITIVE  # center (18,18), inside the core
    assert maps.cls[1, 4] == IGNORE  # center (18,6): inside full, outside core
    assert maps.cls[7, 7] == NEGATIVE  # center (30,30): outside entirely


def test_initial_targets_ignore_instance_never_positive():
    gt = gt_square(16, 16, 12, ignore=True)
    maps = build_initial_targets([gt], L2, 8, 8, shrink_r=0.3)
    assert not (maps.cls == POSITIVE).any()
    assert maps.cls[4, 4] == IGNORE


def test_initial_targets_smallest_area_wins_overlap():
    big = gt_square(16, 16, 14)
    small = gt_square(18, 18, 3)
    maps = build_initial_targets([big, small], L2, 8, 8, shrink_r=0.3)
    assert maps.cls[4, 4] == POSITIVE  # bin center (18,18) lies in both cores
    assert maps.matched_gt[4, 4] == 1
    maps_r = build_initial_targets([small, big], L2, 8, 8, shrink_r=0.3)
    assert maps_r.matched_gt[4, 4] == 0
    assert np.array_equal(maps.reg[4, 4], maps_r.reg[4, 4])


def test_decode_initial_round_trip():
    gt = gt_square(6, 6, 4)
    maps = build_initial_targets([gt], L2, 4, 4, shrink_r=0.3)
    assert maps.cls[1, 1] == POSITIVE
    assert decode_initial((1, 1), maps.reg[1, 1], 4) == gt.quad


def test_decode_initial_rejects_bad_corners():
    bowtie = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0])
    with pytest.raises(NonConvexError):
        decode_initial((0, 0), bowtie, 4)
    dart = np.array([0.0, 0.0, 2.0, 0.0, 0.4, 0.4, 0.0, 2.0])
    with pytest.raises(NonConvexError):
        decode_initial((0, 0), dart, 4)


def test_decode_initial_map_thresholds_and_skips_invalid():
    gt = gt_square(6, 6, 4)
    maps = build_initial_targets([gt], L2, 4, 4, shrink_r=0.3)
    scores = np.zeros((4, 4))
    scores[1, 1] = 0.9
    scores[0, 0] = 0.2  # below threshold
    scores[3, 3] = 0.8  # above threshold but offsets decode to a point
    preds = decode_initial_map(scores, maps.reg, 4, score_thresh=0.5)
    assert preds[1, 1] == gt.quad
    assert preds[0, 0] is None
    assert preds[3, 3] is None
    assert sum(p is not None for p in preds.flat) == 1


def test_refine_targets_below_threshold_is_negative():
    # Box IoU between these squares is exactly 16/112 = 1/7 < 0.5.
    pred = canonicalize([(0, 0), (8, 0), (8, 8), (0, 8)])
    gt = gt_square(8, 8, 4)
    assert iou_quad(pred, gt.quad) == pytest.approx(1.0 / 7.0, abs=1e-12)
    preds = np.full((4, 4), None, dtype=object)
    preds[1, 1] = pred
    rt = build_refine_targets(preds, [gt], L2)
    assert rt.cls[1, 1] == NEGATIVE
    assert np.all(rt.reg[1, 1] == 0.0)


def test_refine_targets_perfect_prediction_zero_residual():
    gt = gt_square(8, 8, 6)
    preds = np.full((4, 4), None, dtype=object)
    preds[2, 2] = gt.quad
    rt = build_refine_targets(preds, [gt], L2)
    assert rt.cls[2, 2] == POSITIVE
    assert rt.matched_gt[2, 2] == 0
    assert np.all(rt.reg[2, 2] == 0.0)


def test_refine_residual_plus_initial_reaches_ground_truth():
    gt = gt_square(8, 8, 6)
    pred = canonicalize([(3, 3), (13, 3), (13, 13), (3, 13)])
    p = (2, 2)
    center = bin_center(p, 4)
    o_i = ((pred.xy() - np.array(center)) / 4).reshape(8)
    assert decode_initial(p, o_i, 4) == pred
    preds = np.full((4, 4), None, dtype=object)
    preds[2, 2] = pred
    rt = build_refine_targets(preds, [gt], L2)
    assert rt.cls[2, 2] == POSITIVE
    det = decode_refined(p, o_i, rt.reg[2, 2], 4, 0.75)
    assert det.score == 0.75
    assert np.allclose(det.quad.xy(), gt.quad.xy(), atol=1e-9)


def test_refine_threshold_is_strict():
    gt = gt_square(6, 4, 4)
    pred = canonicalize([(0, 0), (8, 0), (8, 8), (0, 8)])
    v = iou_quad(pred, gt.quad)  # axis-aligned, so box IoU equals quad IoU
    preds = np.array([[pred]], dtype=object)
    at = build_refine_targets(preds, [gt], L2, iou_thresh=v)
    assert at.cls[0, 0] == NEGATIVE
    below = build_refine_targets(preds, [gt], L2, iou_thresh=v - 1e-9)
    assert below.cls[0, 0] == POSITIVE


def test_refine_ignore_overlap_and_empty_bins():
    ig = gt_square(8, 8, 6, ignore=True)
    pred = canonicalize([(2, 2), (14, 2), (14, 14), (2, 14)])
    preds = np.full((2, 2), None, dtype=object)
    preds[1, 1] = pred
    rt = build_refine_targets(preds, [ig], L2)
    assert rt.cls[1, 1] == IGNORE
    assert rt.cls[0, 0] == NEGATIVE
    assert np.all(rt.reg == 0.0)


def test_refine_picks_best_overlap():
    a = gt_square(8, 8, 6)
    b = gt_square(20, 8, 6)
    pred = canonicalize([(3, 3), (13, 3), (13, 13), (3, 13)])
    preds = np.array([[pred]], dtype=object)
    rt = build_refine_targets(preds, [b, a], L2)
    assert rt.cls[0, 0] == POSITIVE
    assert rt.matched_gt[0, 0] == 1


def test_ideal_outputs_decode_back_to_instances():
    gts = [gt_square(10, 10, 8), gt_square(40, 12, 10)]
    maps = build_initial_targets(gts, L2, 16, 16, shrink_r=0.3)
    scores, reg = ideal_outputs(maps)
    assert np.all(scores[maps.cls == POSITIVE] == 1.0)
    assert np.all(scores[maps.cls != POSITIVE] == 0.0)
    assert np.array_equal(reg, maps.reg)
    preds = decode_initial_map(scores, reg, 4)
    for y, x in zip(*np.nonzero(maps.cls == POSITIVE)):
        assert preds[y, x] == gts[maps.matched_gt[y, x]].quad


def test_serialize_layout_and_round_trip():
    gts = [gt_square(10, 10, 8)]
    per_level = [
        build_initial_targets(gts, spec, *level_map_shape(64, 64, spec.stride), shrink_r=0.3)
        for spec in DEFAULT_LEVELS[:2]
    ]
    blob = serialize_target_maps(per_level)

    # u32 level count, then per level u32 (level, H, W) + f32 cls + f32 reg.
    assert blob[:4] == (2).to_bytes(4, "little")
    assert blob[4:8] == (2).to_bytes(4, "little")
    h0, w0 = per_level[0].cls.shape
    assert blob[8:12] == h0.to_bytes(4, "little")
    assert blob[12:16] == w0.to_bytes(4, "little")
    cls0 = np.frombuffer(blob, dtype="<f4", count=h0 * w0, offset=16).reshape(h0, w0)
    assert np.array_equal(cls0, per_level[0].cls.astype("<f4"))
    expected = 4 + sum(12 + 4 * m.cls.size + 4 * m.reg.size for m in per_level)
    assert len(blob) == expected

    back = deserialize_target_maps(blob)
    assert [m.level.level for m in back] == [2, 3]
    for got, want in zip(back, per_level):
        assert np.array_equal(got.cls, want.cls)
        assert np.array_equal(got.reg, want.reg.astype(np.float32).astype(np.float64))


def test_deserialize_rejects_truncated_blob():
    gts = [gt_square(10, 10, 8)]
    blob = serialize_target_maps([build_initial_targets(gts, L2, 4, 4)])
    with pytest.raises(ParseError):
        deserialize_target_maps(blob[: len(blob) // 2])


def test_target_summary_lines():
    gts = [gt_square(10, 10, 8)]
    maps = build_initial_targets(gts, L2, 16, 16, shrink_r=0.3)
    n_pos = int((maps.cls == POSITIVE).sum())
    n_ign = int((maps.cls == IGNORE).sum())
    n_neg = int((maps.cls == NEGATIVE).sum())
    text = format_target_summary([maps])
    assert text == f"level 2 stride 4 bins 16x16 positive {n_pos} ignore {n_ign} negative {n_neg}\n"


def test_two_stage_round_trip_recovers_instances():
    gts = [gt_square(14, 14, 10), gt_square(44, 40, 12)]
    maps = build_initial_targets(gts, L2, 16, 16, shrink_r=0.3)
    scores, reg = ideal_outputs(maps)
    preds = decode_initial_map(scores, reg, 4)
    rt = build_refine_targets(preds, gts, L2)
    r_scores, r_reg = ideal_refined_outputs(rt)
    recovered = set()
    for y, x in zip(*np.nonzero(rt.cls == POSITIVE)):
        det = decode_refined((int(x), int(y)), reg[y, x], r_reg[y, x], 4, r_scores[y, x])
        for i, gt in enumerate(gts):
            if iou_quad(det.quad, gt.quad) > 0.99:
                recovered.add(i)
    assert recovered == {0, 1}
