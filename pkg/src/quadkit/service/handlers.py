"""Request handlers: one sync function per endpoint, core library underneath.

Handlers raise QuadkitError subclasses on domain failures; the app maps
those onto HTTP 400 with the error code.  All text/bytes payloads returned
here are the canonical serialisations the CLI writes to disk.
"""

from __future__ import annotations

import base64
import math

from .. import __version__
from ..errors import MissingFileError, ParseError
from ..evaluation import evaluate_parsed, format_det_file, format_report, parse_det_file, parse_gt_file
from ..geometry import Quad, iou_quad
from ..postprocess import pnms
from ..sampling import project_quad, regular_taps, sample_grid
from ..synth import synth_files
from ..targets import (
    DEFAULT_LEVELS,
    IGNORE,
    NEGATIVE,
    POSITIVE,
    LevelSpec,
    assign_levels,
    build_initial_targets,
    format_target_summary,
    level_map_shape,
    serialize_target_maps,
)
from . import schemas


def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


def iou(req: schemas.IouRequest) -> schemas.IouResponse:
    value = iou_quad(Quad.from_flat(req.a), Quad.from_flat(req.b))
    return schemas.IouResponse(iou=value, text=f"{value!r}\n")


def grid(req: schemas.GridRequest) -> schemas.GridResponse:
    quad = Quad.from_flat(req.quad)
    g = sample_grid(project_quad(quad, req.stride), req.kernel_h, req.kernel_w)
    lines = []
    points = []
    for i in range(req.kernel_h):
        for j in range(req.kernel_w):
            x, y = float(g[i, j, 0]), float(g[i, j, 1])
            points.append([x, y])
            lines.append(f"grid,{i},{j},{x!r},{y!r}")
    offsets = None
    if req.kernel_h % 2 == 1 and req.kernel_w % 2 == 1:
        # Offsets are taken relative to the grid's own center sample, so the
        # center tap is always zero and an axis-aligned square of side
        # 2·stride reproduces the regular receptive field exactly.
        center = g[req.kernel_h // 2, req.kernel_w // 2]
        delta = g - center - regular_taps(req.kernel_h, req.kernel_w)
        offsets = []
        for i in range(req.kernel_h):
            for j in range(req.kernel_w):
                dy, dx = float(delta[i, j, 1]), float(delta[i, j, 0])
                offsets.append([dy, dx])
                lines.append(f"offset,{i},{j},{dy!r},{dx!r}")
    return schemas.GridResponse(points=points, offsets=offsets, text="\n".join(lines) + "\n")


def run_pnms(req: schemas.PnmsRequest) -> schemas.PnmsResponse:
    kept = pnms(parse_det_file(req.file_text), req.threshold)
    return schemas.PnmsResponse(
        detections=[schemas.DetectionModel(quad=list(d.quad.flat), score=d.score) for d in kept],
        file_text=format_det_file(kept),
    )


def build_targets(req: schemas.TargetsRequest) -> schemas.TargetsResponse:
    if req.levels is None:
        levels = DEFAULT_LEVELS
    else:
        levels = tuple(
            LevelSpec(m.level, m.lo, math.inf if m.hi is None else m.hi) for m in req.levels
        )
    gts = parse_gt_file(req.gt_text)
    per_level = assign_levels(gts, levels)
    maps = []
    rows = []
    for spec in levels:
        H, W = level_map_shape(req.height, req.width, spec.stride)
        tm = build_initial_targets(per_level[spec.level], spec, H, W, req.shrink_r)
        maps.append(tm)
        rows.append(
            schemas.TargetLevelSummary(
                level=spec.level,
                stride=spec.stride,
                height=H,
                width=W,
                positive=int((tm.cls == POSITIVE).sum()),
                ignore=int((tm.cls == IGNORE).sum()),
                negative=int((tm.cls == NEGATIVE).sum()),
            )
        )
    return schemas.TargetsResponse(
        summary=format_target_summary(maps),
        blob_b64=base64.b64encode(serialize_target_maps(maps)).decode("ascii"),
        levels=rows,
    )


def run_evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    orphans = sorted(set(req.det_files) - set(req.gt_files))
    if orphans:
        raise MissingFileError(f"no ground truth for detection stems: {', '.join(orphans)}", stems=orphans)
    images = []
    for stem in sorted(req.gt_files):
        try:
            gts = parse_gt_file(req.gt_files[stem])
            dets = parse_det_file(req.det_files.get(stem, ""))
        except ParseError as exc:
            raise ParseError(f"{exc.args[0]} (while reading stem '{stem}')") from exc
        images.append((dets, gts))
    results = evaluate_parsed(images, req.taus)
    return schemas.EvaluateResponse(
        results=[schemas.EvalRowModel(**vars(r)) for r in results],
        report=format_report(results),
    )


def run_synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    return schemas.SynthResponse(files=synth_files(req.seed, req.images, req.noise))
