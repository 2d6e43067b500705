"""Experiment configuration: a versioned JSON document parsed into dataclasses.

Validation errors carry the dotted path of the offending field.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .losses import NOISY_STRATEGIES, AugmentationSpec
from .net import ACTIVATIONS, OptimizerSpec

SCHEMA_VERSION = 1
CRITERIA = ("tripartition", "small_loss", "gmm", "none")
NOISE_TYPES = ("none", "symmetric", "pairflip", "realistic")
GENERATORS = ("blobs", "moons", "csv")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class DatasetConfig:
    generator: str = "blobs"
    n_classes: int = 4
    samples_per_class: int = 500
    n_features: int = 2
    std: float = 1.0
    radius: float = 3.0
    overlap_pairs: list = field(default_factory=lambda: [[0, 1, 0.6]])
    n_samples: int = 2000
    moons_noise: float = 0.1
    path: str | None = None
    test_fraction: float = 0.2


@dataclass
class NoiseConfig:
    type: str = "none"
    r: float = 0.0
    K: int = 3
    level_weights: list = field(default_factory=lambda: [0.9, 0.6, 0.3])
    pair_map: list | None = None
    prototype_epochs: int = 30
    matrix_path: str | None = None


@dataclass
class ModelConfig:
    hidden: list = field(default_factory=lambda: [32])
    activation: str = "relu"


@dataclass
class ScheduleConfig:
    warmup_epochs: int = 6
    max_epochs: int = 60
    batch_size: int = 64


@dataclass
class StrategyConfig:
    lambda_h: float = 0.6
    lambda_n: float = 1.0
    noisy_strategy: str = "self"
    augment_labeled: bool = False
    augmentations: list = field(default_factory=lambda: [AugmentationSpec("jitter", sigma=0.15)])
    allow_ablation: bool = False


@dataclass
class CriterionConfig:
    kind: str = "tripartition"
    keep_fraction: float | None = None
    tau: float = 0.5


@dataclass
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    seed: int = 0
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    criterion: CriterionConfig = field(default_factory=CriterionConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["optimizer"]["lr_schedule"] = [list(x) for x in self.optimizer.lr_schedule]
        d["strategy"]["augmentations"] = [a.to_dict() for a in self.strategy.augmentations]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return parse_config(d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
        return parse_config(d)

    @property
    def keep_fraction(self) -> float:
        kf = self.criterion.keep_fraction
        return 1.0 - self.noise.r if kf is None else kf


REQUIRED = {"strategy": ("lambda_h", "lambda_n")}


def _section(cls, raw: Any, path: str, required: tuple = ()):
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected an object")
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{path}.{key}", "unknown field")
    for key in required:
        if key not in raw:
            raise ConfigError(f"{path}.{key}", "required field missing")
    out = cls()
    for key, value in raw.items():
        default = getattr(out, key)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{path}.{key}", "expected a boolean")
        elif isinstance(default, int) and not isinstance(default, bool):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{path}.{key}", "expected an integer")
        elif isinstance(default, float):
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{path}.{key}", "expected a number")
            value = float(value)
        setattr(out, key, value)
    return out


def parse_config(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("<root>", "expected an object")
    for key in d:
        if key not in {f.name for f in fields(ExperimentConfig)}:
            raise ConfigError(key, "unknown field")
    if "schema_version" not in d:
        raise ConfigError("schema_version", "required field missing")
    if d["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {d['schema_version']!r}")
    for key, value in d.items():
        if key in ("seed", "schema_version") and (not isinstance(value, int) or isinstance(value, bool)):
            raise ConfigError(key, "expected an integer")
    if "strategy" not in d:
        raise ConfigError("strategy.lambda_h", "required field missing")
    cfg = ExperimentConfig(seed=d.get("seed", 0))
    cfg.dataset = _section(DatasetConfig, d.get("dataset", {}), "dataset")
    cfg.noise = _section(NoiseConfig, d.get("noise", {}), "noise")
    cfg.model = _section(ModelConfig, d.get("model", {}), "model")
    cfg.schedule = _section(ScheduleConfig, d.get("schedule", {}), "schedule")
    cfg.strategy = _section(StrategyConfig, d["strategy"], "strategy", REQUIRED["strategy"])
    cfg.criterion = _section(CriterionConfig, d.get("criterion", {}), "criterion")

    opt_raw = d.get("optimizer", {})
    if not isinstance(opt_raw, dict):
        raise ConfigError("optimizer", "expected an object")
    for key in opt_raw:
        if key not in {f.name for f in fields(OptimizerSpec)}:
            raise ConfigError(f"optimizer.{key}", "unknown field")
    try:
        cfg.optimizer = OptimizerSpec(**opt_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError("optimizer", str(exc)) from None

    augs = []
    for i, a in enumerate(cfg.strategy.augmentations):
        try:
            augs.append(a if isinstance(a, AugmentationSpec) else AugmentationSpec.from_dict(a))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"strategy.augmentations[{i}]", str(exc)) from None
    cfg.strategy.augmentations = augs
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    ds, nz, st, sc, cr = cfg.dataset, cfg.noise, cfg.strategy, cfg.schedule, cfg.criterion
    if ds.generator not in GENERATORS:
        raise ConfigError("dataset.generator", f"must be one of {GENERATORS}")
    if ds.generator == "csv" and not ds.path:
        raise ConfigError("dataset.path", "required when generator is csv")
    if ds.generator == "moons" and ds.n_classes != 2:
        raise ConfigError("dataset.n_classes", "two-moons data has exactly 2 classes")
    if ds.n_classes < 2:
        raise ConfigError("dataset.n_classes", "need at least 2 classes")
    if not 0 < ds.test_fraction < 1:
        raise ConfigError("dataset.test_fraction", "must lie in (0, 1)")
    if ds.std <= 0:
        raise ConfigError("dataset.std", "must be positive")
    for i, pair in enumerate(ds.overlap_pairs):
        if (
            len(pair) != 3
            or not all(0 <= int(c) < ds.n_classes for c in pair[:2])
            or not 0 <= pair[2] <= 1
        ):
            raise ConfigError(f"dataset.overlap_pairs[{i}]", "expected [i, j, overlap in [0,1]] with valid classes")

    if nz.type not in NOISE_TYPES:
        raise ConfigError("noise.type", f"must be one of {NOISE_TYPES}")
    if not 0 <= nz.r < 1:
        raise ConfigError("noise.r", "must lie in [0, 1)")
    if nz.type == "pairflip" and nz.r >= 0.5:
        raise ConfigError("noise.r", "pair-flip noise requires r < 0.5")
    if nz.type == "pairflip" and nz.pair_map is not None and len(nz.pair_map) != ds.n_classes:
        raise ConfigError("noise.pair_map", f"must have {ds.n_classes} entries")
    if nz.type == "realistic":
        n_pairs = ds.n_classes * (ds.n_classes - 1) // 2
        if not 1 <= nz.K <= n_pairs:
            raise ConfigError("noise.K", f"must lie in [1, {n_pairs}]")
        w = nz.level_weights
        if len(w) != 3 or any(not 0 < x <= 1 for x in w) or not w[0] >= w[1] >= w[2]:
            raise ConfigError("noise.level_weights", "three descending values in (0, 1]")

    if cfg.model.activation not in ACTIVATIONS:
        raise ConfigError("model.activation", f"must be one of {ACTIVATIONS}")
    if any(not isinstance(h, int) or h <= 0 for h in cfg.model.hidden):
        raise ConfigError("model.hidden", "layer widths must be positive integers")

    if not 0 <= sc.warmup_epochs < sc.max_epochs:
        raise ConfigError("schedule.warmup_epochs", "need 0 <= warmup_epochs < max_epochs")
    if sc.batch_size < 1:
        raise ConfigError("schedule.batch_size", "must be at least 1")

    if st.allow_ablation:
        if not st.lambda_h > 0:
            raise ConfigError("strategy.lambda_h", "must be positive")
    elif not 0 < st.lambda_h < 1:
        raise ConfigError("strategy.lambda_h", "must lie in (0, 1) (set allow_ablation to test other values)")
    if st.lambda_n < 0:
        raise ConfigError("strategy.lambda_n", "must be nonnegative")
    if st.noisy_strategy not in NOISY_STRATEGIES:
        raise ConfigError("strategy.noisy_strategy", f"must be one of {NOISY_STRATEGIES}")

    if cr.kind not in CRITERIA:
        raise ConfigError("criterion.kind", f"must be one of {CRITERIA}")
    if cr.keep_fraction is not None and not 0 < cr.keep_fraction <= 1:
        raise ConfigError("criterion.keep_fraction", "must lie in (0, 1]")
    if not 0 < cr.tau < 1:
        raise ConfigError("criterion.tau", "must lie in (0, 1)")
