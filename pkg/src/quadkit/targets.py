"""Dense training targets over a feature pyramid and their decoders.

Ground-truth quads are assigned to pyramid levels by their scale measure,
rasterised into per-bin classification/regression maps for the initial
heads, and matched again after decoding for the refinement heads.  Labels
use int8 codes: 1 positive, 0 negative, -1 ignore.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonConvexError, NotSimpleError, ParseError
from .geometry import GroundTruth, Point, Quad, aabb, area, canonicalize, contains_points, iou_aabb, scale_measure
from .postprocess import Detection

POSITIVE = 1
NEGATIVE = 0
IGNORE = -1


@dataclass(frozen=True)
class LevelSpec:
    """One pyramid level: id l, stride 2^l, and its (lo, hi] scale range."""

    level: int
    lo: float
    hi: float

    @property
    def stride(self) -> int:
        return 2 ** self.level

    def holds(self, scale: float) -> bool:
        return self.lo < scale <= self.hi


DEFAULT_LEVELS = (
    LevelSpec(2, 0.0, 32.0),
    LevelSpec(3, 16.0, 64.0),
    LevelSpec(4, 32.0, 128.0),
    LevelSpec(5, 64.0, 256.0),
    LevelSpec(6, 128.0, float("inf")),
)


@dataclass(eq=False)
class TargetMaps:
    """Initial-stage targets for one level.

    reg holds stride-normalised corner offsets (x1, y1, ..., x4, y4) and is
    meaningful only where cls == POSITIVE; matched_gt indexes the per-level
    ground-truth list (-1 elsewhere).
    """

    level: LevelSpec
    cls: np.ndarray
    reg: np.ndarray
    matched_gt: np.ndarray


@dataclass(eq=False)
class RefineTargets:
    """Refinement-stage targets for one level; reg is the residual that the
    initial offsets still need to reach the matched ground truth."""

    level: LevelSpec
    cls: np.ndarray
    reg: np.ndarray
    matched_gt: np.ndarray


def bin_center(p, s: int) -> Point:
    """Image-space center of feature bin p = (p_x, p_y) at stride s."""
    if s < 1:
        raise ValueError(f"stride must be >= 1, got {s}")
    half = s // 2
    return Point(half + p[0] * s, half + p[1] * s)


def bin_center_grids(H: int, W: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    """(xs, ys) image-space center coordinate grids, each H×W."""
    half = s // 2
    xs = half + np.arange(W, dtype=np.float64) * s
    ys = half + np.arange(H, dtype=np.float64) * s
    return np.broadcast_to(xs[None, :], (H, W)), np.broadcast_to(ys[:, None], (H, W))


def level_map_shape(image_height: int, image_width: int, s: int) -> tuple[int, int]:
    """Feature-map bins covering the image: ceil division per axis."""
    return (image_height + s - 1) // s, (image_width + s - 1) // s


def assign_levels(
    gts: Sequence[GroundTruth], levels: Sequence[LevelSpec] = DEFAULT_LEVELS
) -> dict[int, list[GroundTruth]]:
    """Distribute instances to every level whose scale range holds them.

    Ranges overlap by design, so an instance may land on two levels.
    """
    out: dict[int, list[GroundTruth]] = {spec.level: [] for spec in levels}
    for gt in gts:
        s = scale_measure(gt.quad)
        for spec in levels:
            if spec.holds(s):
                out[spec.level].append(gt)
    return out


def build_initial_targets(
    gts: Sequence[GroundTruth], level: LevelSpec, H: int, W: int, shrink_r: float = 0.25
) -> TargetMaps:
    """Rasterise one level's instances into initial-stage target maps.

    A bin is positive when its center falls inside the shrunk quad of a
    non-ignore instance (the smallest-area instance wins collisions),
    ignore when it falls inside a do-not-care quad or inside an unshrunk
    instance without being positive, and negative otherwise.  Positive bins
    carry the stride-normalised offsets from bin center to the 4 corners.
    """
    from .geometry import shrink  # local import keeps module top uncluttered

    cls = np.zeros((H, W), dtype=np.int8)
    reg = np.zeros((H, W, 8), dtype=np.float64)
    matched = np.full((H, W), -1, dtype=np.int32)
    xs, ys = bin_center_grids(H, W, level.stride)

    # Ignore-like first: do-not-care quads plus the annulus between each
    # instance and its shrunk core; positives overwrite afterwards.
    for gt in gts:
        cls[contains_points(gt.quad, xs, ys)] = IGNORE

    order = sorted(
        (i for i, gt in enumerate(gts) if not gt.ignore),
        key=lambda i: -area(gts[i].quad),
    )
    for i in order:  # descending area, so smaller instances overwrite
        quad = gts[i].quad
        mask = contains_points(shrink(quad, shrink_r), xs, ys)
        if not mask.any():
            continue
        cls[mask] = POSITIVE
        matched[mask] = i
        cx = xs[mask]
        cy = ys[mask]
        offsets = np.empty((int(mask.sum()), 8), dtype=np.float64)
        for k, corner in enumerate(quad.corners):
            offsets[:, 2 * k] = (corner.x - cx) / level.stride
            offsets[:, 2 * k + 1] = (corner.y - cy) / level.stride
        reg[mask] = offsets
    return TargetMaps(level, cls, reg, matched)


def decode_initial(p, o_i: Sequence[float], s: int) -> Quad:
    """Corner offsets back to an image-space quad: center + o_i·s per pair.

    Raises NonConvexError when the decoded corners do not form a convex
    simple quadrilateral (such predictions are discarded upstream).
    """
    c = bin_center(p, s)
    corners = [(c.x + float(o_i[2 * k]) * s, c.y + float(o_i[2 * k + 1]) * s) for k in range(4)]
    try:
        return canonicalize(corners)
    except NotSimpleError as exc:
        raise NonConvexError(str(exc)) from exc


def decode_initial_map(
    scores: np.ndarray, offsets: np.ndarray, s: int, score_thresh: float = 0.5
) -> np.ndarray:
    """Decode every bin scoring at or above the threshold.

    Returns an (H, W) object array of Quad or None; bins below threshold or
    with invalid decoded corners stay None.
    """
    H, W = scores.shape
    preds = np.empty((H, W), dtype=object)
    preds[:] = None
    for y, x in zip(*np.nonzero(scores >= score_thresh)):
        try:
            preds[y, x] = decode_initial((int(x), int(y)), offsets[y, x], s)
        except NonConvexError:
            pass
    return preds


def build_refine_targets(
    initial_preds: np.ndarray,
    gts: Sequence[GroundTruth],
    level: LevelSpec,
    iou_thresh: float = 0.5,
) -> RefineTargets:
    """Match decoded initial predictions to instances by bounding-box IoU.

    A bin is positive when the best axis-aligned IoU against a non-ignore
    instance exceeds the threshold (matched to the argmax), ignore when
    only a do-not-care region exceeds it, negative otherwise (including
    bins with no valid prediction).  reg holds the residual offsets that
    carry the prediction's corners onto the matched instance, normalised
    by the stride.
    """
    H, W = initial_preds.shape
    cls = np.zeros((H, W), dtype=np.int8)
    reg = np.zeros((H, W, 8), dtype=np.float64)
    matched = np.full((H, W), -1, dtype=np.int32)

    boxes = [aabb(gt.quad) for gt in gts]
    care = [i for i, gt in enumerate(gts) if not gt.ignore]
    dontcare = [i for i, gt in enumerate(gts) if gt.ignore]

    has_pred = np.frompyfunc(lambda q: q is not None, 1, 1)(initial_preds).astype(bool)
    for y, x in zip(*(idx.tolist() for idx in np.nonzero(has_pred))):
        pred = initial_preds[y, x]
        pbox = aabb(pred)
        best_i, best_iou = -1, 0.0
        for i in care:
            v = iou_aabb(pbox, boxes[i])
            if v > best_iou:
                best_i, best_iou = i, v
        if best_iou > iou_thresh:
            cls[y, x] = POSITIVE
            matched[y, x] = best_i
            gxy = gts[best_i].quad.xy()
            pxy = pred.xy()
            reg[y, x] = ((gxy - pxy) / level.stride).reshape(8)
            continue
        for i in dontcare:
            if iou_aabb(pbox, boxes[i]) > iou_thresh:
                cls[y, x] = IGNORE
                break
    return RefineTargets(level, cls, reg, matched)


def decode_refined(p, o_i: Sequence[float], o_r: Sequence[float], s: int, s_r: float) -> Detection:
    """Combine initial and residual offsets into a scored detection.

    Residuals are defined against the canonical corners of the decoded
    initial prediction (the order refine targets are built in), so they are
    applied after that decode rather than added channel-wise: the two only
    differ when canonicalisation rotated the decoded corner order.
    """
    if not 0.0 <= s_r <= 1.0:
        raise ValueError(f"score must be in [0, 1], got {s_r}")
    base = decode_initial(p, o_i, s)
    corners = [
        (c.x + float(o_r[2 * k]) * s, c.y + float(o_r[2 * k + 1]) * s)
        for k, c in enumerate(base.corners)
    ]
    try:
        return Detection(canonicalize(corners), s_r)
    except NotSimpleError as exc:
        raise NonConvexError(str(exc)) from exc


def ideal_outputs(tm: TargetMaps) -> tuple[np.ndarray, np.ndarray]:
    """Head outputs a perfect network would emit for these targets."""
    return (tm.cls == POSITIVE).astype(np.float64), tm.reg.copy()


def ideal_refined_outputs(rt: RefineTargets) -> tuple[np.ndarray, np.ndarray]:
    return (rt.cls == POSITIVE).astype(np.float64), rt.reg.copy()


# ---------------------------------------------------------------------------
# Serialization: little-endian binary blob plus human-readable summary.

_HEADER = struct.Struct("<I")
_LEVEL_HEADER = struct.Struct("<III")


def serialize_target_maps(maps: Sequence[TargetMaps]) -> bytes:
    """Pack per-level targets as little-endian 32-bit values.

    Layout: u32 level count, then per level u32 (level, H, W) followed by
    H·W float32 class labels and H·W·8 float32 offsets.
    """
    parts = [_HEADER.pack(len(maps))]
    for tm in maps:
        H, W = tm.cls.shape
        parts.append(_LEVEL_HEADER.pack(tm.level.level, H, W))
        parts.append(tm.cls.astype("<f4").tobytes())
        parts.append(tm.reg.astype("<f4").tobytes())
    return b"".join(parts)


def deserialize_target_maps(blob: bytes, levels: Sequence[LevelSpec] = DEFAULT_LEVELS) -> list[TargetMaps]:
    """Inverse of :func:`serialize_target_maps` (matched indices are not stored)."""
    by_id = {spec.level: spec for spec in levels}
    off = 0
    try:
        (n,) = _HEADER.unpack_from(blob, off)
        off += _HEADER.size
        out = []
        for _ in range(n):
            level, H, W = _LEVEL_HEADER.unpack_from(blob, off)
            off += _LEVEL_HEADER.size
            cls = np.frombuffer(blob, dtype="<f4", count=H * W, offset=off).reshape(H, W)
            off += 4 * H * W
            reg = np.frombuffer(blob, dtype="<f4", count=H * W * 8, offset=off).reshape(H, W, 8)
            off += 4 * H * W * 8
            if level not in by_id:
                raise ParseError(f"unknown pyramid level {level} in blob")
            out.append(
                TargetMaps(
                    by_id[level],
                    cls.astype(np.int8),
                    reg.astype(np.float64),
                    np.full((H, W), -1, dtype=np.int32),
                )
            )
        return out
    except (struct.error, ValueError) as exc:
        raise ParseError(f"truncated target blob: {exc}") from exc


def format_target_summary(maps: Sequence[TargetMaps]) -> str:
    """One line per level with bin counts; ends with a newline."""
    lines = []
    for tm in maps:
        H, W = tm.cls.shape
        lines.append(
            "level {} stride {} bins {}x{} positive {} ignore {} negative {}".format(
                tm.level.level,
                tm.level.stride,
                H,
                W,
                int((tm.cls == POSITIVE).sum()),
                int((tm.cls == IGNORE).sum()),
                int((tm.cls == NEGATIVE).sum()),
            )
        )
    return "\n".join(lines) + "\n"
