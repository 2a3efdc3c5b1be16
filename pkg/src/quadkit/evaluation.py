"""Detection evaluation: dataset file parsing, matching, and P/R/F reports.

The matcher is the usual greedy one-to-one protocol: detections in
descending score order claim the unmatched ground truth with the highest
polygon IoU at or above the threshold.  Detections whose only qualifying
overlap is a do-not-care region are excluded from the counts entirely.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import MissingFileError, NonConvexError, NotSimpleError, ParseError
from .geometry import GroundTruth, canonicalize, iou_quad
from .postprocess import Detection

log = logging.getLogger(__name__)

IGNORE_TRANSCRIPTION = "###"


@dataclass(frozen=True)
class EvalResult:
    tau: float
    true_positives: int
    false_positives: int
    false_negatives: int
    precision: float
    recall: float
    f_measure: float


def _parse_coords(parts: Sequence[str], lineno: int) -> list[tuple[float, float]]:
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"bad coordinate: {exc}", line=lineno) from exc
    return [(vals[i], vals[i + 1]) for i in range(0, 8, 2)]


def parse_gt_file(text: str) -> list[GroundTruth]:
    """Ground-truth lines ``x1,y1,...,x4,y4,transcription``.

    A transcription of ``###`` marks a do-not-care region.  Blank lines are
    skipped; lines whose corners are not a convex simple quad are skipped
    with a logged warning so one bad region cannot sink a whole image.
    """
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.lstrip("﻿").strip()
        if not line:
            continue
        parts = line.split(",", 8)
        if len(parts) != 9:
            raise ParseError(f"expected 8 coordinates and a transcription, got {len(parts)} fields", line=lineno)
        corners = _parse_coords(parts[:8], lineno)
        try:
            quad = canonicalize(corners)
        except (NonConvexError, NotSimpleError) as exc:
            log.warning("line %d: skipped invalid region (%s)", lineno, exc)
            continue
        out.append(GroundTruth(quad, ignore=parts[8].strip() == IGNORE_TRANSCRIPTION))
    return out


def parse_det_file(text: str) -> list[Detection]:
    """Detection lines ``x1,y1,...,x4,y4,score`` with score in [0, 1]."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.lstrip("﻿").strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 9:
            raise ParseError(f"expected 8 coordinates and a score, got {len(parts)} fields", line=lineno)
        corners = _parse_coords(parts[:8], lineno)
        try:
            score = float(parts[8])
        except ValueError as exc:
            raise ParseError(f"bad score: {exc}", line=lineno) from exc
        if not 0.0 <= score <= 1.0:
            raise ParseError(f"score out of [0, 1]: {parts[8].strip()}", line=lineno)
        try:
            quad = canonicalize(corners)
        except (NonConvexError, NotSimpleError) as exc:
            log.warning("line %d: skipped invalid detection (%s)", lineno, exc)
            continue
        out.append(Detection(quad, score))
    return out


def format_det_file(dets: Sequence[Detection]) -> str:
    """Canonical detection-file text; ``parse_det_file`` reads it back exactly."""
    lines = [",".join(repr(v) for v in d.quad.flat) + f",{d.score!r}" for d in dets]
    return "\n".join(lines) + "\n" if lines else ""


def match_and_score(dets: Sequence[Detection], gts: Sequence[GroundTruth], tau: float) -> tuple[int, int, int]:
    """Greedy one-to-one matching; returns (TP, FP, FN) for one image."""
    care = [i for i, gt in enumerate(gts) if not gt.ignore]
    dontcare = [i for i, gt in enumerate(gts) if gt.ignore]
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    matched: set[int] = set()
    tp = fp = 0
    for d in order:
        quad = dets[d].quad
        best_i, best = -1, 0.0
        for i in care:
            if i in matched:
                continue
            v = iou_quad(quad, gts[i].quad)
            if v > best:
                best_i, best = i, v
        if best >= tau and best_i >= 0:
            matched.add(best_i)
            tp += 1
            continue
        if any(iou_quad(quad, gts[i].quad) >= tau for i in dontcare):
            continue  # detection on a do-not-care region: not counted
        fp += 1
    return tp, fp, len(care) - tp


def compute_metrics(tau: float, tp: int, fp: int, fn: int) -> EvalResult:
    """P/R/F with the degenerate-denominator conventions (P=1, R=1, F=0)."""
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 1.0 if tp + fn == 0 else tp / (tp + fn)
    f = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return EvalResult(tau, tp, fp, fn, precision, recall, f)


def collect_stems(gt_dir: Path, det_dir: Path) -> list[str]:
    """Stems shared by the dataset: every gt file, each optionally detected.

    Ground-truth files are named ``gt_<stem>.txt``, detections ``<stem>.txt``.
    A stem without a detection file simply has zero detections; a detection
    file without ground truth is an error.
    """
    if not gt_dir.is_dir():
        raise MissingFileError(f"ground-truth directory not found: {gt_dir}")
    if not det_dir.is_dir():
        raise MissingFileError(f"detection directory not found: {det_dir}")
    gt_stems = {p.name[3:-4] for p in gt_dir.glob("gt_*.txt")}
    det_stems = {p.name[:-4] for p in det_dir.glob("*.txt")}
    orphans = sorted(det_stems - gt_stems)
    if orphans:
        raise MissingFileError(
            f"no ground truth for detection stems: {', '.join(orphans)}", stems=orphans
        )
    return sorted(gt_stems)


def evaluate_parsed(
    images: Sequence[tuple[Sequence[Detection], Sequence[GroundTruth]]], taus: Sequence[float]
) -> list[EvalResult]:
    """Aggregate already-parsed per-image (detections, ground truth) pairs."""
    results = []
    for tau in taus:
        tp = fp = fn = 0
        for dets, gts in images:
            a, b, c = match_and_score(dets, gts, tau)
            tp, fp, fn = tp + a, fp + b, fn + c
        results.append(compute_metrics(tau, tp, fp, fn))
    return results


def evaluate(gt_dir, det_dir, taus: Sequence[float]) -> list[EvalResult]:
    """Aggregate per-image counts over a dataset directory pair."""
    gt_dir = Path(gt_dir)
    det_dir = Path(det_dir)
    stems = collect_stems(gt_dir, det_dir)
    images = []
    for stem in stems:
        gt_path = gt_dir / f"gt_{stem}.txt"
        det_path = det_dir / f"{stem}.txt"
        try:
            gts = parse_gt_file(gt_path.read_text(encoding="utf-8"))
            dets = parse_det_file(det_path.read_text(encoding="utf-8")) if det_path.exists() else []
        except ParseError as exc:
            raise ParseError(f"{exc.args[0]} (while reading stem '{stem}')") from exc
        images.append((dets, gts))
    return evaluate_parsed(images, taus)


def format_report(results: Sequence[EvalResult]) -> str:
    """One ``tau, TP, FP, FN, P, R, F`` row per threshold, 6 decimals."""
    lines = [
        "%.6f, %d, %d, %d, %.6f, %.6f, %.6f"
        % (r.tau, r.true_positives, r.false_positives, r.false_negatives, r.precision, r.recall, r.f_measure)
        for r in results
    ]
    return "\n".join(lines) + "\n"
