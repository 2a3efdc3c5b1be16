"""Convex quadrilateral primitives.

All coordinates are image-space pixels with y growing downward.  A canonical
quadrilateral stores its corners clockwise (positive shoelace area under the
y-down convention), starting from the corner that minimises ``x + y`` (ties
broken by smaller y, then smaller x), which matches the usual "top-left
first" reading for text regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateError, NonConvexError, NotSimpleError

# Degeneracy floors: polygons under these thresholds are rejected so the
# clipping and half-plane code never runs on numerically flat geometry.
AREA_FLOOR = 1e-9
CROSS_FLOOR = 1e-9
# Boundary containment tolerance, in pixels of signed distance.
BOUNDARY_TOL = 1e-9


class Point(NamedTuple):
    x: float
    y: float


class Box(NamedTuple):
    """Axis-aligned box, min corner first."""

    min_x: float
    min_y: float
    max_x: float
    max_y: float


@dataclass(frozen=True)
class Quad:
    """Canonical convex quadrilateral.

    Instances should be produced through :func:`canonicalize` (or helpers
    that call it); the constructor itself does not re-check the invariants.
    """

    corners: tuple[Point, Point, Point, Point]

    @classmethod
    def from_flat(cls, values: Sequence[float]) -> "Quad":
        """Canonicalize an ``(x1, y1, ..., x4, y4)`` sequence."""
        if len(values) != 8:
            raise ValueError(f"expected 8 coordinates, got {len(values)}")
        pts = [(float(values[i]), float(values[i + 1])) for i in range(0, 8, 2)]
        return canonicalize(pts)

    @property
    def flat(self) -> tuple[float, ...]:
        return tuple(v for p in self.corners for v in p)

    def xy(self) -> np.ndarray:
        """Corners as a (4, 2) float array."""
        return np.array(self.corners, dtype=np.float64)


@dataclass(frozen=True)
class GroundTruth:
    quad: Quad
    ignore: bool = False


def _signed_area(points: Sequence[tuple[float, float]]) -> float:
    """Shoelace signed area; positive for clockwise order under y-down."""
    total = 0.0
    n = len(points)
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return 0.5 * total


def canonicalize(points: Iterable[tuple[float, float]]) -> Quad:
    """Reorder four raw corners into a canonical :class:`Quad`.

    Raises:
        NotSimpleError: the corner sequence self-intersects.
        NonConvexError: the corners are non-convex, collinear, or not finite.
    """
    pts = [Point(float(x), float(y)) for x, y in points]
    if len(pts) != 4:
        raise ValueError(f"expected 4 points, got {len(pts)}")
    if not all(math.isfinite(p.x) and math.isfinite(p.y) for p in pts):
        raise NonConvexError("corner coordinates must be finite")

    crosses = []
    for i in range(4):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % 4]
        cx, cy = pts[(i + 2) % 4]
        crosses.append((bx - ax) * (cy - by) - (by - ay) * (cx - bx))
    if any(abs(c) < CROSS_FLOOR for c in crosses):
        raise NonConvexError("degenerate quadrilateral (collinear corners)")

    negatives = sum(1 for c in crosses if c < 0)
    if negatives in (1, 3):
        raise NonConvexError("corners form a non-convex quadrilateral")
    if negatives == 2:
        raise NotSimpleError("corner sequence self-intersects")

    if abs(_signed_area(pts)) < AREA_FLOOR:
        raise NonConvexError("degenerate quadrilateral (zero area)")
    if negatives == 4:  # counter-clockwise; reverse while keeping the start
        pts = [pts[0], pts[3], pts[2], pts[1]]

    start = min(range(4), key=lambda i: (pts[i].x + pts[i].y, pts[i].y, pts[i].x))
    ordered = tuple(pts[(start + i) % 4] for i in range(4))
    return Quad(ordered)


def area(q: Quad) -> float:
    """Positive area in px^2."""
    return _signed_area(q.corners)


def scale_measure(q: Quad) -> float:
    """Length of the shorter midline (midpoints of opposing edge pairs)."""
    c = q.corners
    mids = [Point((c[i].x + c[(i + 1) % 4].x) / 2.0, (c[i].y + c[(i + 1) % 4].y) / 2.0) for i in range(4)]
    d02 = math.hypot(mids[0].x - mids[2].x, mids[0].y - mids[2].y)
    d13 = math.hypot(mids[1].x - mids[3].x, mids[1].y - mids[3].y)
    return min(d02, d13)


def shrink(q: Quad, r: float) -> Quad:
    """Contract every corner along both adjacent edges by proportion ``r``."""
    if not 0.0 <= r < 0.5:
        raise ValueError(f"shrink ratio must be in [0, 0.5), got {r}")
    c = q.corners
    moved = []
    for i in range(4):
        p, nxt, prv = c[i], c[(i + 1) % 4], c[(i - 1) % 4]
        moved.append(
            (
                p.x + r * (nxt.x - p.x) + r * (prv.x - p.x),
                p.y + r * (nxt.y - p.y) + r * (prv.y - p.y),
            )
        )
    try:
        return canonicalize(moved)
    except (NonConvexError, NotSimpleError) as exc:
        raise DegenerateError(f"shrink({r}) collapsed the quadrilateral") from exc


def _clip_by_halfplane(
    polygon: list[tuple[float, float]], c1: tuple[float, float], c2: tuple[float, float]
) -> list[tuple[float, float]]:
    """One Sutherland-Hodgman pass: keep the side to the left of c1->c2."""
    if not polygon:
        return []
    ex = c2[0] - c1[0]
    ey = c2[1] - c1[1]

    def side(px: float, py: float) -> float:
        # The cross product cancels catastrophically for vertices close to
        # the clip line (near-duplicate quads from decoded predictions), so
        # values within the rounding noise snap onto the line.
        t1 = ex * (py - c1[1])
        t2 = ey * (px - c1[0])
        v = t1 - t2
        return 0.0 if abs(v) <= 4e-16 * (abs(t1) + abs(t2)) else v

    out: list[tuple[float, float]] = []
    sx, sy = polygon[-1]
    ss = side(sx, sy)
    for px, py in polygon:
        sp = side(px, py)
        if (sp >= 0.0) != (ss >= 0.0):
            # Crossing parameterised along the segment: with ss and sp of
            # opposite sign, t is in [0, 1] and the point stays on (s, p)
            # even when the segment runs nearly parallel to the clip line.
            t = ss / (ss - sp)
            out.append((sx + t * (px - sx), sy + t * (py - sy)))
        if sp >= 0.0:
            out.append((px, py))
        sx, sy, ss = px, py, sp
    return out


def intersect_convex(a: Quad, b: Quad) -> list[Point]:
    """Intersection polygon of two quads (<= 8 vertices, possibly empty)."""
    poly = _intersect_corner_lists(list(a.corners), list(b.corners))
    return [Point(x, y) for x, y in poly]


def _intersect_corner_lists(
    subject: list[tuple[float, float]], clip: list[tuple[float, float]]
) -> list[tuple[float, float]]:
    poly = subject
    for k in range(4):
        poly = _clip_by_halfplane(poly, clip[k], clip[(k + 1) % 4])
        if not poly:
            return []
    return poly


def polygon_area(points: Sequence[tuple[float, float]]) -> float:
    if len(points) < 3:
        return 0.0
    return abs(_signed_area(points))


def iou_quad(a: Quad, b: Quad) -> float:
    """Exact polygon intersection-over-union of two quads."""
    return _iou_corner_lists(list(a.corners), area(a), list(b.corners), area(b))


def _iou_corner_lists(
    ca: list[tuple[float, float]], area_a: float, cb: list[tuple[float, float]], area_b: float
) -> float:
    inter = polygon_area(_intersect_corner_lists(ca, cb))
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    iou = inter / union
    if iou < 0.0:
        return 0.0
    return 1.0 if iou > 1.0 else iou


def aabb(q: Quad) -> Box:
    xs = [p.x for p in q.corners]
    ys = [p.y for p in q.corners]
    return Box(min(xs), min(ys), max(xs), max(ys))


def iou_aabb(a: Box, b: Box) -> float:
    iw = min(a.max_x, b.max_x) - max(a.min_x, b.min_x)
    ih = min(a.max_y, b.max_y) - max(a.min_y, b.min_y)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = (a.max_x - a.min_x) * (a.max_y - a.min_y) + (b.max_x - b.min_x) * (b.max_y - b.min_y) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def contains_point(q: Quad, p: tuple[float, float]) -> bool:
    """True when ``p`` is inside ``q`` or on its boundary."""
    px, py = float(p[0]), float(p[1])
    c = q.corners
    for i in range(4):
        ax, ay = c[i]
        bx, by = c[(i + 1) % 4]
        ex, ey = bx - ax, by - ay
        cross = ex * (py - ay) - ey * (px - ax)
        if cross / math.hypot(ex, ey) < -BOUNDARY_TOL:
            return False
    return True


def contains_points(q: Quad, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorised :func:`contains_point` over coordinate arrays."""
    inside = np.ones(np.broadcast(xs, ys).shape, dtype=bool)
    c = q.corners
    for i in range(4):
        ax, ay = c[i]
        bx, by = c[(i + 1) % 4]
        ex, ey = bx - ax, by - ay
        norm = math.hypot(ex, ey)
        inside &= (ex * (ys - ay) - ey * (xs - ax)) / norm >= -BOUNDARY_TOL
    return inside
