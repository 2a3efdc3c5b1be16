"""Flat key=value configuration shared by the CLI subcommands.

The file format is deliberately dumb: one ``key=value`` per line, ``#``
comments, blank lines allowed.  Unknown keys are rejected so a typo cannot
silently fall back to a default.  ``save_config(load_config(text))`` parses
back to an identical Config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Sequence

from .errors import ConfigError
from .targets import DEFAULT_LEVELS, LevelSpec


@dataclass(frozen=True)
class Config:
    shrink_r: float = 0.25
    iou_refine: float = 0.5
    pnms_thresh: float = 0.3
    score_thresh: float = 0.5
    eval_taus: tuple[float, ...] = (0.5, 0.75)
    kernel_h: int = 3
    kernel_w: int = 3
    levels: tuple[LevelSpec, ...] = DEFAULT_LEVELS


def _parse_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {value!r}") from exc


def _parse_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {value!r}") from exc


def _parse_levels(value: str) -> tuple[LevelSpec, ...]:
    specs = []
    for item in value.split(","):
        parts = item.split(":")
        if len(parts) != 3:
            raise ConfigError(f"levels: expected level:lo:hi, got {item!r}")
        level = _parse_int("levels", parts[0])
        lo = _parse_float("levels", parts[1])
        hi = _parse_float("levels", parts[2])
        if lo < 0 or hi <= lo:
            raise ConfigError(f"levels: need 0 <= lo < hi, got {item!r}")
        specs.append(LevelSpec(level, lo, hi))
    return tuple(specs)


def _validate(cfg: Config) -> Config:
    if not 0.0 <= cfg.shrink_r < 0.5:
        raise ConfigError(f"shrink_r must be in [0, 0.5), got {cfg.shrink_r}")
    for key in ("iou_refine", "pnms_thresh", "score_thresh"):
        v = getattr(cfg, key)
        if not 0.0 < v < 1.0:
            raise ConfigError(f"{key} must be in (0, 1), got {v}")
    if not cfg.eval_taus or any(not 0.0 < t <= 1.0 for t in cfg.eval_taus):
        raise ConfigError(f"eval_taus must be in (0, 1], got {cfg.eval_taus}")
    if cfg.kernel_h < 2 or cfg.kernel_w < 2:
        raise ConfigError(f"kernel size must be >= 2, got {cfg.kernel_h}x{cfg.kernel_w}")
    if not cfg.levels:
        raise ConfigError("levels must not be empty")
    return cfg


def load_config(text: str) -> Config:
    """Parse configuration text; unknown keys raise ConfigError."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in ("shrink_r", "iou_refine", "pnms_thresh", "score_thresh"):
            values[key] = _parse_float(key, value)
        elif key == "eval_taus":
            values[key] = tuple(_parse_float(key, v) for v in value.split(","))
        elif key in ("kernel_h", "kernel_w"):
            values[key] = _parse_int(key, value)
        elif key == "levels":
            values[key] = _parse_levels(value)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    return _validate(Config(**values))


def save_config(cfg: Config) -> str:
    """Canonical text form; floats keep full precision for exact round trips."""
    levels = ",".join(
        f"{spec.level}:{spec.lo!r}:{'inf' if math.isinf(spec.hi) else repr(spec.hi)}" for spec in cfg.levels
    )
    lines = [
        f"shrink_r={cfg.shrink_r!r}",
        f"iou_refine={cfg.iou_refine!r}",
        f"pnms_thresh={cfg.pnms_thresh!r}",
        f"score_thresh={cfg.score_thresh!r}",
        "eval_taus=" + ",".join(repr(t) for t in cfg.eval_taus),
        f"kernel_h={cfg.kernel_h}",
        f"kernel_w={cfg.kernel_w}",
        f"levels={levels}",
    ]
    return "\n".join(lines) + "\n"


def override(cfg: Config, **updates) -> Config:
    """Config with non-None updates applied (command-line flags win)."""
    changes = {k: v for k, v in updates.items() if v is not None}
    bad = set(changes) - {f.name for f in fields(Config)}
    if bad:
        raise ConfigError(f"unknown config fields: {sorted(bad)}")
    return _validate(replace(cfg, **changes))
