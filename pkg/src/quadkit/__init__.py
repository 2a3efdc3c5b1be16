"""Quadrilateral detection toolkit.

Geometry, quadrilateral-guided sampling grids, dense training targets,
detection losses, polygonal NMS, and IoU-based evaluation, plus an HTTP
service and a thin CLI on top.
"""

from .errors import (
    ConfigError,
    DegenerateError,
    InvalidKernelError,
    MissingFileError,
    NonConvexError,
    NotSimpleError,
    ParseError,
    QuadkitError,
    ShapeMismatchError,
)
from .geometry import (
    Box,
    GroundTruth,
    Point,
    Quad,
    aabb,
    area,
    canonicalize,
    contains_point,
    intersect_convex,
    iou_aabb,
    iou_quad,
    scale_measure,
    shrink,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "ConfigError",
    "DegenerateError",
    "GroundTruth",
    "InvalidKernelError",
    "MissingFileError",
    "NonConvexError",
    "NotSimpleError",
    "ParseError",
    "Point",
    "Quad",
    "QuadkitError",
    "ShapeMismatchError",
    "aabb",
    "area",
    "canonicalize",
    "contains_point",
    "intersect_convex",
    "iou_aabb",
    "iou_quad",
    "scale_measure",
    "shrink",
    "__version__",
]
