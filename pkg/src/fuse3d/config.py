"""Run configuration and its flat key = value file format.

The defaults are the pipeline's standard operating constants: crop
window, input point budget, per-layer sample counts, the oversample
factor, NMS and proposal caps, RoI enlargement and point budget, focal
constants, and the bin layout. ``parse_config(render_config(cfg))``
round-trips exactly.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError
from .losses import BinConfig, BinSpec, FocalConfig


@dataclass(frozen=True)
class RunConfig:
    crop_x_min: float = 0.0
    crop_x_max: float = 70.4
    crop_y_min: float = -40.0
    crop_y_max: float = 40.0
    crop_z_min: float = -3.0
    crop_z_max: float = 1.0
    num_points: int = 16384
    sa_samples: tuple[int, ...] = (4096, 1024, 256, 64)
    sampler_lambda: float = 1.4
    nms_threshold: float = 0.8
    pre_nms_top: int = 8000
    proposals_keep: int = 64
    enlarge: float = 0.2
    roi_points: int = 512
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    bin_half_range: float = 3.0
    bin_count_xz: int = 12
    bin_count_yaw: int = 12
    seed: int = 0

    def focal_config(self) -> FocalConfig:
        return FocalConfig(alpha=self.focal_alpha, gamma=self.focal_gamma)

    def bin_config(self) -> BinConfig:
        return BinConfig(
            x=BinSpec(self.bin_half_range, self.bin_count_xz),
            z=BinSpec(self.bin_half_range, self.bin_count_xz),
            yaw=BinSpec(math.pi, self.bin_count_yaw, wrap=True),
        )

    def crop_ranges(self):
        return (
            (self.crop_x_min, self.crop_x_max),
            (self.crop_y_min, self.crop_y_max),
            (self.crop_z_min, self.crop_z_max),
        )


def validate_config(cfg: RunConfig) -> None:
    """Raise ValueError on an inconsistent configuration."""
    for lo, hi, name in (
        (cfg.crop_x_min, cfg.crop_x_max, "x"),
        (cfg.crop_y_min, cfg.crop_y_max, "y"),
        (cfg.crop_z_min, cfg.crop_z_max, "z"),
    ):
        if not lo < hi:
            raise ValueError(f"crop {name} range ({lo}, {hi}) is empty")
    if cfg.num_points < 1 or cfg.roi_points < 1:
        raise ValueError("point budgets must be positive")
    if any(s < 1 for s in cfg.sa_samples):
        raise ValueError("sa_samples must be positive")
    if cfg.sampler_lambda < 1.0:
        raise ValueError(f"sampler_lambda must be >= 1, got {cfg.sampler_lambda}")
    if not 0.0 <= cfg.nms_threshold <= 1.0:
        raise ValueError(f"nms_threshold must be in [0, 1], got {cfg.nms_threshold}")
    if cfg.pre_nms_top < 1 or cfg.proposals_keep < 1:
        raise ValueError("proposal caps must be positive")
    if cfg.enlarge < 0:
        raise ValueError(f"enlarge must be >= 0, got {cfg.enlarge}")
    cfg.focal_config()
    cfg.bin_config()


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_field_value(field: dataclasses.Field, raw: str):
    default = field.default
    try:
        if isinstance(default, tuple):
            return tuple(int(v.strip()) for v in raw.split(","))
        if isinstance(default, float):
            return float(raw)
        return int(raw)
    except ValueError as exc:
        raise ParseError(f"bad value for {field.name}: {raw!r} ({exc})") from None


def render_config(cfg: RunConfig) -> str:
    """One ``key = value`` line per field; floats rendered round-trip."""
    lines = [
        f"{f.name} = {_format_value(getattr(cfg, f.name))}"
        for f in dataclasses.fields(cfg)
    ]
    return "\n".join(lines) + "\n"


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; '#' starts a comment, blanks skipped.

    Unknown keys and malformed values raise ParseError. Missing keys
    keep their defaults.
    """
    field_map = {f.name: f for f in dataclasses.fields(RunConfig)}
    values = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in field_map:
            raise ParseError(f"line {line_no}: unknown key {key!r}")
        values[key] = parse_field_value(field_map[key], value.strip())
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(render_config(cfg))


# Subsystems draw independent seeds from the global one, so a component
# stays reproducible regardless of what ran before it.
_SUBSYSTEM_INDEX = {"scene": 0, "roi": 1, "params": 2, "proposals": 3}


def subsystem_seed(global_seed: int, subsystem: str) -> int:
    """Derive the seed for one subsystem from the global seed.

    Uses a seed sequence over (global_seed, subsystem index) with the
    fixed table scene=0, roi=1, params=2, proposals=3.
    """
    index = _SUBSYSTEM_INDEX[subsystem]
    return int(np.random.SeedSequence([global_seed, index]).generate_state(1)[0])
