"""Quadrilateral-guided sampling grids and reference convolutions.

A detection head can replace the regular receptive field of a convolution
with taps sampled uniformly from a predicted quadrilateral.  This module
builds those sampling grids, converts them to per-tap offsets from the
regular grid, and provides two deliberately simple forward passes: a plain
direct-summation convolution and the quadrilateral-sampled variant.  Both
use one fixed per-cell summation order (row-major taps, then input
channels) so their outputs can be compared exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidKernelError, NonConvexError, NotSimpleError, ShapeMismatchError
from .geometry import Point, Quad, canonicalize


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """H×W×C map of finite values with a pixel stride per cell."""

    data: np.ndarray
    stride: int = 1

    def __post_init__(self):
        if self.data.ndim != 3 or min(self.data.shape) < 1:
            raise ShapeMismatchError(f"feature map must be H×W×C, got shape {self.data.shape}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature map values must be finite")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True, eq=False)
class Kernel:
    """h×w×C_in×C_out weights; h and w must be odd so taps center on p."""

    weights: np.ndarray
    dilation: int = 1

    def __post_init__(self):
        if self.weights.ndim != 4:
            raise ShapeMismatchError(f"kernel weights must be h×w×C_in×C_out, got shape {self.weights.shape}")
        h, w = self.weights.shape[:2]
        if h < 1 or w < 1 or h % 2 == 0 or w % 2 == 0:
            raise InvalidKernelError(f"kernel size must be odd positive, got {h}×{w}")
        if self.dilation < 1:
            raise ValueError(f"dilation must be >= 1, got {self.dilation}")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("kernel weights must be finite")

    @property
    def h(self) -> int:
        return self.weights.shape[0]

    @property
    def w(self) -> int:
        return self.weights.shape[1]


def project_quad(q: Quad, stride: int) -> Quad:
    """Divide corners by the stride; corner order is preserved exactly."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    # Scaling by a positive factor cannot change orientation or the
    # canonical start corner, so no re-canonicalization is needed.
    return Quad(tuple(Point(p.x / stride, p.y / stride) for p in q.corners))


def linear_kernel(a: int, b: int, m, n):
    """Affine interpolation ((b−1−a)·m + a·n)/(b−1) between m and n.

    Accepts points or arrays; a=0 returns m and a=b−1 returns n exactly.
    """
    if b < 2:
        raise InvalidKernelError(f"interpolation needs size >= 2, got {b}")
    if not 0 <= a <= b - 1:
        raise InvalidKernelError(f"index {a} outside [0, {b - 1}]")
    t0 = (b - 1 - a) / (b - 1)
    t1 = a / (b - 1)
    if isinstance(m, tuple) and isinstance(n, tuple):
        return Point(t0 * m[0] + t1 * n[0], t0 * m[1] + t1 * n[1])
    return t0 * np.asarray(m, dtype=np.float64) + t1 * np.asarray(n, dtype=np.float64)


def sample_grid(corners, h: int, w: int) -> np.ndarray:
    """Uniform h×w point grid over a quad given its 4 projected corners.

    Column j interpolates the top edge (corner 1 → 2) and the bottom edge
    (corner 4 → 3); row i then interpolates between those two edge points,
    so the grid corners coincide with the quad corners and a 3×3 grid hits
    the corners, edge midpoints, and center.

    Args:
        corners: Quad or 4×2 array-like, canonical corner order.
        h, w: grid size, both >= 2.

    Returns:
        (h, w, 2) float array of (x, y) points.
    """
    if h < 2 or w < 2:
        raise InvalidKernelError(f"grid size must be >= 2 in both axes, got {h}×{w}")
    c = corners.xy() if isinstance(corners, Quad) else np.asarray(corners, dtype=np.float64)
    if c.shape != (4, 2):
        raise ShapeMismatchError(f"expected 4 corners, got shape {c.shape}")
    return _grids_from_corners(c[None], h, w)[0]


def sample_grids(corners: np.ndarray, h: int, w: int) -> np.ndarray:
    """Batched :func:`sample_grid`: (N, 4, 2) corners to (N, h, w, 2) grids."""
    if h < 2 or w < 2:
        raise InvalidKernelError(f"grid size must be >= 2 in both axes, got {h}×{w}")
    c = np.asarray(corners, dtype=np.float64)
    if c.ndim != 3 or c.shape[1:] != (4, 2):
        raise ShapeMismatchError(f"expected N×4×2 corners, got shape {c.shape}")
    return _grids_from_corners(c, h, w)


def _grids_from_corners(c: np.ndarray, h: int, w: int) -> np.ndarray:
    q1, q2, q3, q4 = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
    out = np.empty((c.shape[0], h, w, 2), dtype=np.float64)
    for j in range(w):
        top = linear_kernel(j, w, q1, q2)
        bottom = linear_kernel(j, w, q4, q3)
        for i in range(h):
            out[:, i, j] = linear_kernel(i, h, top, bottom)
    return out


def regular_taps(h: int, w: int, dilation: int = 1) -> np.ndarray:
    """(h, w, 2) regular receptive-field offsets (x, y), row-major taps."""
    if h % 2 == 0 or w % 2 == 0:
        raise InvalidKernelError(f"regular taps need odd sizes, got {h}×{w}")
    dx = (np.arange(w) - w // 2) * dilation
    dy = (np.arange(h) - h // 2) * dilation
    taps = np.empty((h, w, 2), dtype=np.float64)
    taps[..., 0] = dx[None, :]
    taps[..., 1] = dy[:, None]
    return taps


def grid_to_offsets(p, grid: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Per-tap deltas from the regular grid: Δ(i,j) = g(i,j) − p − r(i,j).

    Returns (h, w, 2) deltas as (x, y) displacements; adding p + r(i,j)
    back recovers the grid exactly.
    """
    g = np.asarray(grid, dtype=np.float64)
    if g.shape != (kernel.h, kernel.w, 2):
        raise ShapeMismatchError(f"grid shape {g.shape} does not match {kernel.h}×{kernel.w} kernel")
    px, py = float(p[0]), float(p[1])
    return g - np.array([px, py]) - regular_taps(kernel.h, kernel.w, kernel.dilation)


def bilinear_sample(f: FeatureMap, p, channel: int) -> float:
    """Bilinear interpolation at a fractional point, zero outside the map.

    Cell centers sit at integer coordinates; sampling exactly on a center
    returns that cell's value.
    """
    x, y = float(p[0]), float(p[1])
    x0 = math.floor(x)
    y0 = math.floor(y)
    fx = x - x0
    fy = y - y0
    data = f.data
    H, W = data.shape[:2]

    def cell(yy: int, xx: int) -> float:
        if 0 <= yy < H and 0 <= xx < W:
            return float(data[yy, xx, channel])
        return 0.0

    w00 = (1.0 - fx) * (1.0 - fy)
    w01 = fx * (1.0 - fy)
    w10 = (1.0 - fx) * fy
    w11 = fx * fy
    return w00 * cell(y0, x0) + w01 * cell(y0, x0 + 1) + w10 * cell(y0 + 1, x0) + w11 * cell(y0 + 1, x0 + 1)


def bilinear_sample_many(data: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorised bilinear sampling of an H×W×C array at N points.

    Matches :func:`bilinear_sample` bit-for-bit (same weight expressions
    and term order).  Returns an (N, C) array.
    """
    H, W = data.shape[:2]
    x0 = np.floor(xs)
    y0 = np.floor(ys)
    fx = xs - x0
    fy = ys - y0
    x0i = x0.astype(np.int64)
    y0i = y0.astype(np.int64)

    def cells(yi: np.ndarray, xi: np.ndarray) -> np.ndarray:
        ok = (yi >= 0) & (yi < H) & (xi >= 0) & (xi < W)
        vals = data[np.clip(yi, 0, H - 1), np.clip(xi, 0, W - 1)]
        return np.where(ok[:, None], vals, 0.0)

    w00 = (1.0 - fx) * (1.0 - fy)
    w01 = fx * (1.0 - fy)
    w10 = (1.0 - fx) * fy
    w11 = fx * fy
    return (
        w00[:, None] * cells(y0i, x0i)
        + w01[:, None] * cells(y0i, x0i + 1)
        + w10[:, None] * cells(y0i + 1, x0i)
        + w11[:, None] * cells(y0i + 1, x0i + 1)
    )


def conv2d_reference(f: FeatureMap, k: Kernel) -> FeatureMap:
    """Direct-summation convolution (correlation, zero same-padding).

    Per output cell the accumulation order is fixed: taps row-major, then
    input channels, with one independent accumulator per output channel.
    """
    if k.weights.shape[2] != f.channels:
        raise ShapeMismatchError(
            f"kernel expects {k.weights.shape[2]} input channels, feature map has {f.channels}"
        )
    H, W = f.height, f.width
    c_out = k.weights.shape[3]
    out = np.zeros((H, W, c_out), dtype=np.float64)
    for i in range(k.h):
        for j in range(k.w):
            dy = (i - k.h // 2) * k.dilation
            dx = (j - k.w // 2) * k.dilation
            shifted = np.zeros((H, W, f.channels), dtype=np.float64)
            ys = slice(max(0, -dy), min(H, H - dy))
            xs = slice(max(0, -dx), min(W, W - dx))
            if ys.start < ys.stop and xs.start < xs.stop:
                shifted[ys, xs] = f.data[ys.start + dy : ys.stop + dy, xs.start + dx : xs.stop + dx]
            for cin in range(f.channels):
                out += shifted[:, :, cin : cin + 1] * k.weights[i, j, cin]
    return FeatureMap(out, stride=f.stride)


def quad_conv_forward(f: FeatureMap, k: Kernel, quads: np.ndarray) -> tuple[FeatureMap, np.ndarray]:
    """Convolution whose taps are sampled from per-location quads.

    Each output location p carries an image-space quad prediction (raw
    corners, 8 floats); its projection onto the feature map defines an
    h×w sampling grid, evaluated bilinearly and weight-summed exactly like
    :func:`conv2d_reference` (same per-cell term order, so regular grids
    reproduce it bit-for-bit).

    Args:
        f: input feature map (its stride projects the quads).
        k: kernel; grid size is the kernel size.
        quads: (H, W, 8) raw corner array, one quad per output location.

    Returns:
        (output FeatureMap, valid mask): locations whose corners do not
        form a convex simple quad produce zeros and a False mask entry.
    """
    H, W = f.height, f.width
    corners = np.asarray(quads, dtype=np.float64)
    if corners.shape != (H, W, 8):
        raise ShapeMismatchError(f"expected quads of shape {(H, W, 8)}, got {corners.shape}")
    if k.weights.shape[2] != f.channels:
        raise ShapeMismatchError(
            f"kernel expects {k.weights.shape[2]} input channels, feature map has {f.channels}"
        )

    valid = np.zeros((H, W), dtype=bool)
    proj = np.empty((H * W, 4, 2), dtype=np.float64)
    n_valid = 0
    flat_index = np.empty(H * W, dtype=np.int64)
    for idx in range(H * W):
        row = corners[idx // W, idx % W]
        try:
            q = canonicalize([(row[t], row[t + 1]) for t in range(0, 8, 2)])
        except (NonConvexError, NotSimpleError):
            continue
        proj[n_valid] = project_quad(q, f.stride).xy()
        flat_index[n_valid] = idx
        n_valid += 1
    proj = proj[:n_valid]
    flat_index = flat_index[:n_valid]
    valid.ravel()[flat_index] = True

    c_out = k.weights.shape[3]
    out = np.zeros((H, W, c_out), dtype=np.float64)
    if n_valid:
        grids = _grids_from_corners(proj, k.h, k.w)
        acc = np.zeros((n_valid, c_out), dtype=np.float64)
        for i in range(k.h):
            for j in range(k.w):
                vals = bilinear_sample_many(f.data, grids[:, i, j, 0], grids[:, i, j, 1])
                for cin in range(f.channels):
                    acc += vals[:, cin : cin + 1] * k.weights[i, j, cin]
        out.reshape(H * W, c_out)[flat_index] = acc
    return FeatureMap(out, stride=f.stride), valid


def offset_field(quads: np.ndarray, k: Kernel, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Packed per-location offsets for deformable-style consumers.

    For every location p = (x, y) in feature coordinates, the deltas of its
    quad's sampling grid from the regular grid are packed row-major per tap
    as (Δy, Δx), giving an (H, W, 2·h·w) field.  Invalid quads yield zeros
    and a False entry in the returned mask.
    """
    corners = np.asarray(quads, dtype=np.float64)
    if corners.ndim != 3 or corners.shape[2] != 8:
        raise ShapeMismatchError(f"expected H×W×8 quads, got shape {corners.shape}")
    H, W = corners.shape[:2]
    taps = regular_taps(k.h, k.w, k.dilation)
    field = np.zeros((H, W, 2 * k.h * k.w), dtype=np.float64)
    valid = np.zeros((H, W), dtype=bool)
    for y in range(H):
        for x in range(W):
            row = corners[y, x]
            try:
                q = canonicalize([(row[t], row[t + 1]) for t in range(0, 8, 2)])
            except (NonConvexError, NotSimpleError):
                continue
            grid = sample_grid(project_quad(q, stride), k.h, k.w)
            delta = grid - np.array([float(x), float(y)]) - taps
            # Points are (x, y); the packed layout is (Δy, Δx) per tap.
            field[y, x, 0::2] = delta[..., 1].ravel()
            field[y, x, 1::2] = delta[..., 0].ravel()
            valid[y, x] = True
    return field, valid
