"""Deterministic synthetic datasets: random text-like quads plus detections.

Instances mimic the regime the detector targets: scales log-uniform over
8-512 px, orientations uniform over the full circle, aspect ratios up to
20.  Everything is driven by a seeded generator, so a given seed always
produces byte-identical files.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import NonConvexError, NotSimpleError
from .geometry import GroundTruth, Quad, aabb, canonicalize, contains_points, scale_measure, shrink
from .targets import DEFAULT_LEVELS, LevelSpec, bin_center_grids, level_map_shape

MIN_SCALE = 8.0
MAX_SCALE = 512.0
MAX_ASPECT = 20.0


def random_quad(rng: np.random.Generator, canvas: float = 1024.0) -> Quad:
    """One random convex quad that fits the canvas.

    Built as a rotated rectangle with mild corner jitter; draws are repeated
    until the jittered corners stay convex and inside the canvas, so the
    consumed random stream (and thus determinism) depends only on the seed.
    """
    while True:
        scale = math.exp(rng.uniform(math.log(MIN_SCALE), math.log(min(MAX_SCALE, canvas / 3.0))))
        aspect = rng.uniform(1.0, MAX_ASPECT)
        long_side = scale * aspect
        if long_side > 0.9 * canvas:
            continue
        theta = rng.uniform(0.0, 2.0 * math.pi)
        cos, sin = math.cos(theta), math.sin(theta)
        hw, hh = long_side / 2.0, scale / 2.0
        local = np.array([(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)])
        jitter = rng.uniform(-0.08, 0.08, size=(4, 2)) * scale
        local = local + jitter
        rot = np.array([(cos, -sin), (sin, cos)])
        corners = local @ rot.T
        margin = float(np.abs(corners).max()) + 1.0
        if 2.0 * margin >= canvas:
            continue
        cx = rng.uniform(margin, canvas - margin)
        cy = rng.uniform(margin, canvas - margin)
        try:
            return canonicalize(corners + np.array([cx, cy]))
        except (NonConvexError, NotSimpleError):
            continue


def _boxes_disjoint(a, b) -> bool:
    return a.max_x <= b.min_x or b.max_x <= a.min_x or a.max_y <= b.min_y or b.max_y <= a.min_y


def _has_positive_bin(quad: Quad, levels: Sequence[LevelSpec], shrink_r: float, canvas: float) -> bool:
    """True when at least one assigned level has a bin center in the shrunk quad."""
    core = shrink(quad, shrink_r)
    s = scale_measure(quad)
    for spec in levels:
        if not spec.holds(s):
            continue
        H, W = level_map_shape(int(canvas), int(canvas), spec.stride)
        xs, ys = bin_center_grids(H, W, spec.stride)
        if contains_points(core, xs, ys).any():
            return True
    return False


def random_layout(
    rng: np.random.Generator,
    n_instances: int,
    n_ignore: int = 0,
    canvas: float = 1024.0,
    levels: Sequence[LevelSpec] = DEFAULT_LEVELS,
    shrink_r: float = 0.25,
    max_tries: int = 200,
) -> list[GroundTruth]:
    """Non-overlapping instances, each guaranteed at least one positive bin.

    Placement keeps bounding boxes disjoint so labels never collide, and
    non-ignore instances are redrawn until their shrunk region covers a bin
    center on some assigned pyramid level (otherwise an instance could be
    unlearnable by construction).  Raises RuntimeError when the canvas is
    too crowded to place another instance.
    """
    out: list[GroundTruth] = []
    for k in range(n_instances + n_ignore):
        ignore = k >= n_instances
        for _ in range(max_tries):
            q = random_quad(rng, canvas)
            box = aabb(q)
            if any(not _boxes_disjoint(box, aabb(g.quad)) for g in out):
                continue
            if not ignore and not _has_positive_bin(q, levels, shrink_r, canvas):
                continue
            out.append(GroundTruth(q, ignore=ignore))
            break
        else:
            raise RuntimeError(f"could not place instance {k} after {max_tries} tries")
    return out


def _format_corners(quad: Quad) -> str:
    return ",".join(repr(v) for v in quad.flat)


def synth_files(seed: int, n_images: int, noise: float, canvas: float = 1024.0) -> dict[str, str]:
    """Generate a dataset as {relative path: file text}.

    Ground truth goes to ``gt/gt_img_NNNN.txt``, detections (the ground
    truth perturbed per-coordinate by centred Gaussian noise of the given
    sigma) to ``det/img_NNNN.txt``.  With zero noise the detections equal
    the ground truth and evaluation yields F = 1.
    """
    if n_images < 1:
        raise ValueError(f"need at least one image, got {n_images}")
    if noise < 0:
        raise ValueError(f"noise sigma must be >= 0, got {noise}")
    rng = np.random.default_rng(seed)
    files: dict[str, str] = {}
    for idx in range(n_images):
        stem = f"img_{idx:04d}"
        n = int(rng.integers(1, 7))
        n_ignore = int(rng.integers(0, 2))
        layout = random_layout(rng, n, n_ignore, canvas=canvas)
        gt_lines = []
        det_lines = []
        for k, gt in enumerate(layout):
            label = "###" if gt.ignore else f"text{k}"
            gt_lines.append(f"{_format_corners(gt.quad)},{label}")
            pert = gt.quad.xy() + rng.normal(0.0, noise, size=(4, 2)) if noise > 0 else gt.quad.xy()
            score = float(rng.uniform(0.5, 1.0))
            det_lines.append(",".join(repr(float(v)) for v in pert.reshape(8)) + f",{score!r}")
        files[f"gt/gt_{stem}.txt"] = "\n".join(gt_lines) + "\n"
        files[f"det/{stem}.txt"] = "\n".join(det_lines) + "\n"
    return files
