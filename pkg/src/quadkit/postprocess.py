"""Score filtering and greedy polygonal non-maximum suppression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Quad, _iou_corner_lists, aabb, area


@dataclass(frozen=True)
class Detection:
    quad: Quad
    score: float

    def __post_init__(self):
        # Plain float keeps repr-based file writers lossless for any input.
        object.__setattr__(self, "score", float(self.score))
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


def score_filter(dets: list[Detection], min_score: float) -> list[Detection]:
    """Keep detections scoring at least min_score, preserving order."""
    return [d for d in dets if d.score >= min_score]


def pnms(dets: list[Detection], iou_thresh: float, prefilter: bool = True) -> list[Detection]:
    """Greedy suppression by exact polygon IoU.

    Candidates are visited in descending score (ties keep the earlier input
    entry first); each kept detection removes every remaining one whose quad
    IoU with it reaches the threshold.  The result is score-descending.

    With prefilter enabled, candidates whose axis-aligned boxes do not even
    overlap the kept detection skip the exact polygon test; an intersection
    requires overlapping boxes, so the kept set is identical either way.
    """
    if not 0.0 < iou_thresh < 1.0:
        raise ValueError(f"iou threshold must be in (0, 1), got {iou_thresh}")
    n = len(dets)
    if n == 0:
        return []
    order = sorted(range(n), key=lambda i: (-dets[i].score, i))
    corners = [list(dets[i].quad.corners) for i in order]
    areas = [area(dets[i].quad) for i in order]
    boxes = np.array([aabb(dets[i].quad) for i in order], dtype=np.float64)
    alive = np.ones(n, dtype=bool)

    kept: list[int] = []
    for i in range(n):
        if not alive[i]:
            continue
        kept.append(order[i])
        alive[i] = False
        rest = np.nonzero(alive)[0]
        if rest.size == 0:
            break
        if prefilter:
            b = boxes[i]
            overlap = (
                (boxes[rest, 0] < b[2])
                & (boxes[rest, 2] > b[0])
                & (boxes[rest, 1] < b[3])
                & (boxes[rest, 3] > b[1])
            )
            rest = rest[overlap]
        ca, aa = corners[i], areas[i]
        for j in rest:
            if _iou_corner_lists(ca, aa, corners[j], areas[j]) >= iou_thresh:
                alive[j] = False
    return [dets[i] for i in kept]
