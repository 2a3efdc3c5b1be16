import math

import numpy as np
import pytest

from quadkit.errors import ShapeMismatchError
from quadkit.losses import (
    LossConfig,
    classification_loss_map,
    focal_loss,
    regression_loss,
    regression_loss_map,
    smooth_l1,
    total_loss,
)
from quadkit.targets import IGNORE, NEGATIVE, POSITIVE


def test_focal_loss_frozen_values():
    # p = 0.5, y = 1, defaults: 0.25 * 0.25 * ln 2.
    loss, _ = focal_loss(0.5, 1)
    assert loss == pytest.approx(0.25 * 0.25 * math.log(2.0), abs=1e-12)
    # Symmetric case: same value for the confident-wrong negative.
    loss_n, _ = focal_loss(0.5, 0)
    assert loss_n == pytest.approx(loss, abs=1e-15)
    loss9, _ = focal_loss(0.9, 1)
    assert loss9 == pytest.approx(-0.25 * 0.01 * math.log(0.9), abs=1e-12)


def test_focal_loss_gamma_zero_is_weighted_cross_entropy():
    cfg = LossConfig(gamma=0.0)
    rng = np.random.default_rng(1)
    for p in rng.uniform(0.01, 0.99, size=50):
        for y in (0, 1):
            loss, _ = focal_loss(p, y, cfg)
            pt = p if y == 1 else 1.0 - p
            assert loss == pytest.approx(-0.25 * math.log(pt), abs=1e-12)


def test_focal_loss_clamps_extreme_probabilities():
    for y in (0, 1):
        for p in (0.0, 1.0, -3.0, 7.0):
            loss, grad = focal_loss(p, y)
            assert math.isfinite(loss) and math.isfinite(grad)
    worst, _ = focal_loss(0.0, 1)
    assert worst == pytest.approx(-0.25 * (1.0 - 1e-7) ** 2 * math.log(1e-7), rel=1e-12)


def test_focal_loss_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-6
    for cfg in (LossConfig(), LossConfig(alpha_t=0.5, gamma=1.0), LossConfig(gamma=3.0)):
        for p in rng.uniform(0.05, 0.95, size=40):
            for y in (0, 1):
                _, grad = focal_loss(p, y, cfg)
                lo, _ = focal_loss(p - h, y, cfg)
                hi, _ = focal_loss(p + h, y, cfg)
                assert grad == pytest.approx((hi - lo) / (2 * h), rel=1e-5, abs=1e-8)


def test_focal_loss_rejects_bad_labels():
    with pytest.raises(ValueError):
        focal_loss(0.5, 2)
    with pytest.raises(ValueError):
        focal_loss(0.5, -1)


def test_smooth_l1_frozen_values():
    assert smooth_l1(0.5) == (0.125, 0.5)
    assert smooth_l1(2.0) == (1.5, 1.0)
    assert smooth_l1(-2.0) == (1.5, -1.0)
    assert smooth_l1(0.0) == (0.0, 0.0)
    loss, grad = smooth_l1(0.25, beta=0.5)
    assert loss == pytest.approx(0.0625, abs=1e-15)
    assert grad == pytest.approx(0.5, abs=1e-15)


def test_smooth_l1_continuous_at_the_knee():
    for beta in (0.5, 1.0, 2.0):
        inner, _ = smooth_l1(beta - 1e-9, beta)
        outer, _ = smooth_l1(beta + 1e-9, beta)
        assert outer - inner == pytest.approx(0.0, abs=1e-8)
        gi = smooth_l1(beta - 1e-9, beta)[1]
        go = smooth_l1(beta + 1e-9, beta)[1]
        assert go - gi == pytest.approx(0.0, abs=1e-8)


def test_smooth_l1_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    h = 1e-6
    for d in rng.uniform(-4.0, 4.0, size=60):
        if abs(abs(d) - 1.0) < 1e-3:
            continue  # kink of the derivative
        _, grad = smooth_l1(d)
        lo, _ = smooth_l1(d - h)
        hi, _ = smooth_l1(d + h)
        assert grad == pytest.approx((hi - lo) / (2 * h), rel=1e-5, abs=1e-8)


def test_regression_loss_frozen_values():
    pred = [0.5] + [0.0] * 7
    target = [0.0] * 8
    assert regression_loss(pred, target) == pytest.approx(0.125 / 8.0, abs=1e-15)
    pred2 = [1.0] * 8
    target2 = [0.0] * 8
    assert regression_loss(pred2, target2) == pytest.approx(0.5, abs=1e-15)
    mixed = regression_loss([2.0, 0.5] + [0.0] * 6, [0.0] * 8)
    assert mixed == pytest.approx((1.5 + 0.125) / 8.0, abs=1e-15)


def test_regression_loss_requires_eight_coords():
    with pytest.raises(ShapeMismatchError):
        regression_loss([0.0] * 7, [0.0] * 8)
    with pytest.raises(ShapeMismatchError):
        regression_loss([0.0] * 8, [0.0] * 9)


def test_total_loss_weighting():
    assert total_loss(0.3, 0.2, 0.4, 0.2) == pytest.approx(1.1, abs=1e-15)
    cfg = LossConfig(lambda1=2.0, lambda2=0.5, lambda3=3.0)
    assert total_loss(1.0, 1.0, 1.0, 1.0, cfg) == pytest.approx(1.0 + 2.0 + 3.0 * 1.5, abs=1e-15)


def test_loss_config_validation():
    with pytest.raises(ValueError):
        LossConfig(alpha_t=0.0)
    with pytest.raises(ValueError):
        LossConfig(gamma=-1.0)
    with pytest.raises(ValueError):
        LossConfig(lambda2=0.0)
    with pytest.raises(ValueError):
        LossConfig(smooth_l1_beta=0.0)


def test_classification_map_matches_scalar_loop():
    rng = np.random.default_rng(7)
    scores = rng.uniform(0, 1, size=(6, 5))
    labels = rng.choice([POSITIVE, NEGATIVE, IGNORE], size=(6, 5)).astype(np.int8)
    labels[0, 0] = POSITIVE  # at least one non-ignore bin
    got = classification_loss_map(scores, labels)
    vals = [
        focal_loss(scores[y, x], int(labels[y, x]))[0]
        for y in range(6)
        for x in range(5)
        if labels[y, x] != IGNORE
    ]
    assert got == pytest.approx(sum(vals) / len(vals), abs=1e-12)


def test_classification_map_ignores_are_excluded():
    scores = np.array([[0.5, 0.999]])
    labels = np.array([[POSITIVE, IGNORE]], dtype=np.int8)
    assert classification_loss_map(scores, labels) == pytest.approx(
        0.25 * 0.25 * math.log(2.0), abs=1e-12
    )
    all_ignore = np.full((3, 3), IGNORE, dtype=np.int8)
    assert classification_loss_map(np.zeros((3, 3)), all_ignore) == 0.0


def test_regression_map_matches_scalar_loop():
    rng = np.random.default_rng(9)
    pred = rng.normal(size=(4, 4, 8))
    target = rng.normal(size=(4, 4, 8))
    labels = rng.choice([POSITIVE, NEGATIVE], size=(4, 4)).astype(np.int8)
    labels[1, 1] = POSITIVE
    got = regression_loss_map(pred, target, labels)
    vals = [
        regression_loss(pred[y, x], target[y, x])
        for y in range(4)
        for x in range(4)
        if labels[y, x] == POSITIVE
    ]
    assert got == pytest.approx(sum(vals) / len(vals), abs=1e-12)


def test_regression_map_no_positives_is_zero():
    labels = np.full((4, 4), NEGATIVE, dtype=np.int8)
    assert regression_loss_map(np.ones((4, 4, 8)), np.zeros((4, 4, 8)), labels) == 0.0


def test_map_shape_mismatches():
    with pytest.raises(ShapeMismatchError):
        classification_loss_map(np.zeros((3, 3)), np.zeros((3, 4), dtype=np.int8))
    with pytest.raises(ShapeMismatchError):
        regression_loss_map(np.zeros((3, 3, 8)), np.zeros((3, 3, 8)), np.zeros((3, 4), dtype=np.int8))
    with pytest.raises(ShapeMismatchError):
        regression_loss_map(np.zeros((3, 3, 4)), np.zeros((3, 3, 4)), np.zeros((3, 3), dtype=np.int8))
