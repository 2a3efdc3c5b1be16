"""Detection losses as deterministic scalar functions with gradients.

Keeping focal and smooth-L1 as plain (loss, dloss/dx) pairs makes them easy
to verify against central finite differences; the map-level helpers apply
the same formulas over whole label maps with fixed reduction order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeMismatchError
from .targets import IGNORE, POSITIVE

PROB_EPS = 1e-7  # clamp for log(p); well below every test tolerance


@dataclass(frozen=True)
class LossConfig:
    alpha_t: float = 0.25
    gamma: float = 2.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    smooth_l1_beta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha_t < 1.0:
            raise ValueError(f"alpha_t must be in (0, 1), got {self.alpha_t}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if min(self.lambda1, self.lambda2, self.lambda3) <= 0.0:
            raise ValueError("lambda weights must be positive")
        if self.smooth_l1_beta <= 0.0:
            raise ValueError(f"smooth_l1_beta must be positive, got {self.smooth_l1_beta}")


def focal_loss(p: float, y: int, cfg: LossConfig = LossConfig()) -> tuple[float, float]:
    """Focal loss −α_t·(1−p_t)^γ·log(p_t) and its derivative w.r.t. p.

    p_t is p for a positive label and 1−p otherwise; p is clamped away from
    {0, 1} so the logarithm stays finite.
    """
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y}")
    pc = min(max(float(p), PROB_EPS), 1.0 - PROB_EPS)
    pt = pc if y == 1 else 1.0 - pc
    one = 1.0 - pt
    loss = -cfg.alpha_t * one**cfg.gamma * math.log(pt)
    dpt = cfg.alpha_t * (cfg.gamma * one ** (cfg.gamma - 1.0) * math.log(pt) - one**cfg.gamma / pt)
    return loss, dpt if y == 1 else -dpt


def smooth_l1(d: float, beta: float = 1.0) -> tuple[float, float]:
    """Smooth L1: quadratic inside |d| < beta, linear outside; with gradient."""
    d = float(d)
    ad = abs(d)
    if ad < beta:
        return 0.5 * d * d / beta, d / beta
    return ad - 0.5 * beta, math.copysign(1.0, d)


def regression_loss(pred: Sequence[float], target: Sequence[float], beta: float = 1.0) -> float:
    """Mean smooth-L1 over the 8 corner coordinates."""
    if len(pred) != 8 or len(target) != 8:
        raise ShapeMismatchError(f"expected 8 offsets, got {len(pred)} and {len(target)}")
    return sum(smooth_l1(float(a) - float(b), beta)[0] for a, b in zip(pred, target)) / 8.0


def total_loss(cls_i: float, reg_i: float, cls_r: float, reg_r: float, cfg: LossConfig = LossConfig()) -> float:
    """Combined objective: cls_i + λ1·reg_i + λ3·(cls_r + λ2·reg_r)."""
    return cls_i + cfg.lambda1 * reg_i + cfg.lambda3 * (cls_r + cfg.lambda2 * reg_r)


def classification_loss_map(scores: np.ndarray, labels: np.ndarray, cfg: LossConfig = LossConfig()) -> float:
    """Mean focal loss over non-ignore bins (0 when there are none)."""
    if scores.shape != labels.shape:
        raise ShapeMismatchError(f"scores {scores.shape} vs labels {labels.shape}")
    mask = labels != IGNORE
    if not mask.any():
        return 0.0
    pc = np.clip(scores[mask].astype(np.float64), PROB_EPS, 1.0 - PROB_EPS)
    pt = np.where(labels[mask] == POSITIVE, pc, 1.0 - pc)
    return float(np.mean(-cfg.alpha_t * (1.0 - pt) ** cfg.gamma * np.log(pt)))


def regression_loss_map(pred: np.ndarray, target: np.ndarray, labels: np.ndarray, beta: float = 1.0) -> float:
    """Mean per-bin regression loss over positive bins (0 when none)."""
    if pred.shape != target.shape or pred.shape[:-1] != labels.shape or pred.shape[-1] != 8:
        raise ShapeMismatchError(f"pred {pred.shape}, target {target.shape}, labels {labels.shape}")
    mask = labels == POSITIVE
    if not mask.any():
        return 0.0
    d = pred[mask].astype(np.float64) - target[mask].astype(np.float64)
    ad = np.abs(d)
    per_coord = np.where(ad < beta, 0.5 * d * d / beta, ad - 0.5 * beta)
    return float(np.mean(np.mean(per_coord, axis=1)))
