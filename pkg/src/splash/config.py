"""Configuration objects for the simulator and the learning pipeline."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field as dc_field, asdict

from .errors import ConfigError


@dataclass(frozen=True)
class FieldConfig:
    """Playing field geometry, kinematic limits and game rules."""

    width_m: float = 160.0
    height_m: float = 80.0
    tag_radius_m: float = 10.0
    grab_radius_m: float = 10.0
    max_speed_mps: float = 1.5
    tag_cooldown_s: float = 30.0
    tick_hz: float = 10.0
    max_time_s: float = 750.0
    max_captures: int = 10
    team_size: int = 2

    def __post_init__(self):
        numeric = (
            self.width_m, self.height_m, self.tag_radius_m, self.grab_radius_m,
            self.max_speed_mps, self.tag_cooldown_s, self.tick_hz,
            self.max_time_s, self.max_captures, self.team_size,
        )
        for v in numeric:
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"all field/config values must be strictly positive, got {v!r}")
        if self.tag_radius_m > min(self.width_m, self.height_m) / 2:
            raise ConfigError("tag_radius_m must be at most half the shorter field dimension")
        if self.team_size < 1:
            raise ConfigError("team_size must be >= 1")

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_hz

    @property
    def diag(self) -> float:
        return math.hypot(self.width_m, self.height_m)


@dataclass
class TrainConfig:
    """Hyperparameters for rollout generation, pairing and reward training."""

    noise_levels: tuple = (0.5, 0.67, 0.83, 1.0)
    rollouts_per_level: int = 100
    lambda_1: float = 10.0
    lambda_2: float = 20.0
    lambda_if: float = 4.0
    lr: float = 1e-5
    batch_size: int = 32
    epochs: int = 10
    downsample_rate: int = 40
    train_fraction: float = 0.8
    mode: str = "splash"            # "splash" | "drex"
    no_prune: bool = False
    no_if: bool = False
    no_dr: bool = False
    score_discard_above: int = 2
    rollout_max_time_s: float = 750.0
    rollout_max_captures: int = 10
    # behavioral cloning
    bc_lr: float = 1e-3
    bc_epochs: int = 10
    bc_batch_size: int = 32
    # demonstrations
    demo_count: int = 50
    demo_skill: float = 0.9
    demo_max_time_s: float = 720.0
    demo_max_captures: int = 2
    # D-REX baseline
    drex_pairs: int = 256_000
    drex_snippet_len: int = 100
    # optional cap on SPLASH pair count (0 = keep all)
    pair_subsample: int = 0

    def __post_init__(self):
        levels = tuple(float(e) for e in self.noise_levels)
        if any(not (0.0 <= e <= 1.0) for e in levels):
            raise ConfigError("noise levels must lie in [0, 1]")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ConfigError("noise levels must be strictly increasing")
        object.__setattr__(self, "noise_levels", levels)
        for name in ("lambda_1", "lambda_2", "lambda_if"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.mode not in ("splash", "drex"):
            raise ConfigError(f"unknown mode {self.mode!r}")


_FIELD_KEYS = set(FieldConfig.__dataclass_fields__)
_TRAIN_KEYS = set(TrainConfig.__dataclass_fields__)
_PATH_KEYS = {"demos", "rollouts", "pairs", "checkpoints", "reports"}
_MISC_KEYS = {"seed", "port", "real_time_factor", "out_dir"}


@dataclass
class PipelineConfig:
    """Flat key-value configuration driving the CLI pipeline."""

    field: FieldConfig = dc_field(default_factory=FieldConfig)
    train: TrainConfig = dc_field(default_factory=TrainConfig)
    paths: dict = dc_field(default_factory=dict)
    seed: int = 0
    port: int = 8765
    real_time_factor: float = 1.0 / 3.0
    out_dir: str = "artifacts"

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        with open(path) as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        unknown = set(raw) - _FIELD_KEYS - _TRAIN_KEYS - {f"path_{k}" for k in _PATH_KEYS} - _MISC_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        fc = {k: raw[k] for k in _FIELD_KEYS if k in raw}
        tc = {k: raw[k] for k in _TRAIN_KEYS if k in raw}
        paths = {k: raw[f"path_{k}"] for k in _PATH_KEYS if f"path_{k}" in raw}
        cfg = cls(field=FieldConfig(**fc), train=TrainConfig(**tc), paths=paths)
        for k in ("seed", "port", "real_time_factor", "out_dir"):
            if k in raw:
                setattr(cfg, k, raw[k])
        return cfg

    def resolve_out_dir(self) -> str:
        return os.environ.get("SPLASH_DATA_DIR", self.out_dir)

    def to_flat_dict(self) -> dict:
        flat = dict(asdict(self.field))
        flat.update(asdict(self.train))
        flat["noise_levels"] = list(self.train.noise_levels)
        for k, v in self.paths.items():
            flat[f"path_{k}"] = v
        flat.update(seed=self.seed, port=self.port,
                    real_time_factor=self.real_time_factor, out_dir=self.out_dir)
        return flat

    def config_hash(self) -> str:
        flat = self.to_flat_dict()
        # variant selectors are part of artifact names, and output locations
        # are environment concerns; neither affects data identity
        for key in ("mode", "no_prune", "no_if", "no_dr",
                    "out_dir", "port", "real_time_factor"):
            flat.pop(key, None)
        for key in [k for k in flat if k.startswith("path_")]:
            flat.pop(key)
        blob = json.dumps(flat, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
