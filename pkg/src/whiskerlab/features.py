"""Ten-channel feature reduction of a taxel matrix.

The 25 taxel signals collapse to 10: the log of each row sum (channels 1-5)
and the log of each column sum (channels 6-10).  Row/column sums preserve
the sliding-direction information while cutting the channel count from
rows*cols to rows+cols.  Sums are floored at a small epsilon before the log
so dark frames stay finite.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .taxel_grid import TaxelMatrix

NUM_CHANNELS = 10


@dataclass(frozen=True)
class FeatureConfig:
    """epsilon: positive floor applied to each sum before the logarithm."""

    epsilon: float = 1e-6

    def validate(self) -> None:
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class FeatureVector:
    """One frame's 10 feature values; channels 1-5 rows, 6-10 columns."""

    values: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (NUM_CHANNELS,):
            raise ConfigError(f"feature vector must have {NUM_CHANNELS} values")


def features_from_taxels(
    taxels: TaxelMatrix, cfg: FeatureConfig = FeatureConfig()
) -> FeatureVector:
    """Compute the 10-channel feature vector from one taxel matrix."""
    cfg.validate()
    row_sums = taxels.values.sum(axis=1)
    col_sums = taxels.values.sum(axis=0)
    sums = np.concatenate([row_sums, col_sums])
    values = np.log(np.maximum(sums, cfg.epsilon))
    return FeatureVector(values, taxels.frame_index)


def features_stream(
    frames: Iterable[TaxelMatrix], cfg: FeatureConfig = FeatureConfig()
) -> list[FeatureVector]:
    """Elementwise feature extraction, preserving frame order."""
    return [features_from_taxels(frame, cfg) for frame in frames]


def stream_to_array(stream: Sequence[FeatureVector]) -> np.ndarray:
    """Stack a feature stream into a (frames, 10) array."""
    if len(stream) == 0:
        return np.empty((0, NUM_CHANNELS), dtype=np.float64)
    return np.stack([fv.values for fv in stream])


def save_feature_csv(path, stream: Sequence[FeatureVector]) -> None:
    """Write a feature stream as CSV with columns frame_index, f1..f10."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame_index"] + [f"f{k}" for k in range(1, NUM_CHANNELS + 1)])
        for fv in stream:
            writer.writerow([fv.frame_index] + [repr(v) for v in fv.values.tolist()])


def load_feature_csv(path) -> list[FeatureVector]:
    """Read a feature stream written by :func:`save_feature_csv`."""
    stream = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:1] != ["frame_index"] or len(header) != NUM_CHANNELS + 1:
            raise ConfigError(f"{path}: unexpected feature CSV header")
        for row in reader:
            stream.append(FeatureVector(np.array([float(v) for v in row[1:]]), int(row[0])))
    return stream
