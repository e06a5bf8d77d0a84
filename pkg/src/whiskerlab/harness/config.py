"""Experiment configuration: one JSON document covering every stage.

The config nests each stage's dataclass; serialization round-trips
losslessly, and a canonical content hash identifies the experiment.  The
output directory is deliberately not part of the config, so the same
experiment run in two places produces the same digests.
"""

import hashlib
import json
from dataclasses import dataclass, asdict, field, fields, is_dataclass
from pathlib import Path

from ..analysis import DirectionConfig, DurationConfig
from ..errors import ConfigError, DataFileError
from ..events import DetectorConfig
from ..features import FeatureConfig
from ..learn.boosting import BoostParams
from ..learn.dataset import CollectionPlan
from ..learn.forest import ForestParams
from ..learn.linear import LinearParams
from ..sim import SlideConfig, WhiskerArraySpec
from ..taxel_grid import TaxelGridConfig


@dataclass(frozen=True)
class ModelParamsConfig:
    linear_margin: LinearParams = LinearParams()
    bagged_trees: ForestParams = ForestParams()
    boosted_trees: BoostParams = BoostParams()


@dataclass(frozen=True)
class ExperimentConfig:
    grid: TaxelGridConfig = TaxelGridConfig()
    features: FeatureConfig = FeatureConfig()
    detector: DetectorConfig = DetectorConfig()
    array: WhiskerArraySpec = WhiskerArraySpec()
    slide: SlideConfig = SlideConfig(speed_mm_s=150.0)
    duration: DurationConfig = DurationConfig()
    direction: DirectionConfig = DirectionConfig()
    collection: CollectionPlan = CollectionPlan()
    models: ModelParamsConfig = ModelParamsConfig()
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        return _from_dict(cls, obj)

    def validate(self) -> None:
        self.grid.validate()
        self.features.validate()
        self.detector.validate()
        self.array.validate()
        self.slide.validate()
        self.duration.validate()
        self.direction.validate()
        self.collection.validate()


def _from_dict(cls, obj):
    """Rebuild nested (frozen) dataclasses from plain dicts/lists."""
    if not is_dataclass(cls):
        return obj
    kwargs = {}
    for f in fields(cls):
        if f.name not in obj:
            continue
        value = obj[f.name]
        if isinstance(f.type, type) and is_dataclass(f.type):
            kwargs[f.name] = _from_dict(f.type, value)
        elif isinstance(value, list) and f.name == "speed_range":
            kwargs[f.name] = tuple(value)
        else:
            kwargs[f.name] = value
    return cls(**kwargs)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_digest(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(cfg.to_dict()).encode()).hexdigest()


def save_config(path, cfg: ExperimentConfig) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")


def load_config(path) -> ExperimentConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFileError(f"{path}: cannot read config ({exc})") from exc
    try:
        return ExperimentConfig.from_dict(obj)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"{path}: bad config structure ({exc})") from exc
