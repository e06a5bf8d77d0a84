"""Slide analysis: event duration, speed regression, direction identification.

Duration counts frames whose total taxel sum clears a validity threshold
(last valid minus first valid).  Sliding speed relates to duration through
an ordinary least-squares fit of duration against log10(speed); base 10 is
deliberate - with the natural log the reference coefficients would predict
negative durations at in-range speeds.  Direction falls out of activation
order: channel activation times, rank-correlated against channel position
separately for rows and columns, pick the axis and the sign.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DegenerateFitError, DirectionIndeterminateError
from .events import TactileSample
from .features import FeatureVector, stream_to_array
from .taxel_grid import TaxelMatrix


@dataclass(frozen=True)
class DurationConfig:
    """valid_threshold: per-frame total taxel sum a frame must exceed."""

    valid_threshold: float = 0.0475
    basis: str = "taxel_sum"

    def validate(self) -> None:
        if not self.valid_threshold > 0:
            raise ConfigError(f"valid_threshold must be positive, got {self.valid_threshold}")
        if self.basis != "taxel_sum":
            raise ConfigError(f"unsupported duration basis {self.basis!r}")


@dataclass(frozen=True)
class RegressionFit:
    """duration = intercept + slope * log10(speed); slope is per decade."""

    intercept: float
    slope: float
    r2: Optional[float]
    n: int

    def predict(self, speed: float) -> float:
        return self.intercept + self.slope * math.log10(speed)


def event_duration(
    stream: Sequence[TaxelMatrix], cfg: DurationConfig = DurationConfig()
) -> Optional[int]:
    """Frames between the first and last valid frame, or None if none are valid.

    A frame is valid iff its total taxel sum is nonzero and exceeds the
    threshold.  A single valid frame gives duration 0.
    """
    cfg.validate()
    if len(stream) == 0:
        raise ConfigError("event_duration needs a nonempty stream")
    totals = np.array([m.total for m in stream])
    valid = np.nonzero((totals > cfg.valid_threshold) & (totals != 0.0))[0]
    if valid.size == 0:
        return None
    return int(valid[-1] - valid[0])


def fit_log_regression(points: Sequence[tuple[float, float]]) -> RegressionFit:
    """Ordinary least squares of duration on log10(speed).

    r2 is 1 - SS_res/SS_tot, reported as None when the durations have zero
    variance (SS_tot = 0).
    """
    if len(points) < 2:
        raise DegenerateFitError(f"need at least 2 points, got {len(points)}")
    speeds = np.array([p[0] for p in points], dtype=np.float64)
    durations = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(speeds <= 0):
        raise DegenerateFitError("speeds must be positive for a log fit")
    x = np.log10(speeds)
    if np.unique(speeds).size < 2:
        raise DegenerateFitError("all points share one speed; slope is undefined")

    x_mean = x.mean()
    y_mean = durations.mean()
    slope = float(((x - x_mean) * (durations - y_mean)).sum() / ((x - x_mean) ** 2).sum())
    intercept = float(y_mean - slope * x_mean)

    residuals = durations - (intercept + slope * x)
    ss_res = float((residuals**2).sum())
    ss_tot = float(((durations - y_mean) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else None
    return RegressionFit(intercept=intercept, slope=slope, r2=r2, n=len(points))


@dataclass(frozen=True)
class DirectionConfig:
    """method: "argmax" (default) or "first_crossing" activation timing.

    first_crossing marks the first frame a channel reaches crossing_frac of
    the way from its minimum to its maximum.
    """

    method: str = "argmax"
    crossing_frac: float = 0.5

    def validate(self) -> None:
        if self.method not in ("argmax", "first_crossing"):
            raise ConfigError(f"unknown activation method {self.method!r}")
        if not 0 < self.crossing_frac <= 1:
            raise ConfigError(f"crossing_frac must be in (0, 1], got {self.crossing_frac}")


def activation_times(channels: np.ndarray, cfg: DirectionConfig = DirectionConfig()) -> np.ndarray:
    """Activation frame per channel for a (channels, frames) array."""
    cfg.validate()
    if cfg.method == "argmax":
        return channels.argmax(axis=1).astype(np.float64)
    lo = channels.min(axis=1, keepdims=True)
    hi = channels.max(axis=1, keepdims=True)
    level = lo + cfg.crossing_frac * (hi - lo)
    return (channels >= level).argmax(axis=1).astype(np.float64)


def _rank(a: np.ndarray) -> np.ndarray:
    """Average ranks (ties share the mean of their positions)."""
    order = np.argsort(a, kind="stable")
    ranks = np.empty(len(a), dtype=np.float64)
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _rank_correlation(times: np.ndarray) -> float:
    """Spearman correlation of activation times against channel position."""
    idx = np.arange(1.0, len(times) + 1.0)
    rt = _rank(times)
    if np.ptp(rt) == 0:
        return 0.0
    rt = rt - rt.mean()
    ri = idx - idx.mean()
    return float((rt * ri).sum() / math.sqrt((rt**2).sum() * (ri**2).sum()))


def identify_direction(
    source: Union[TactileSample, Sequence[FeatureVector], np.ndarray],
    cfg: DirectionConfig = DirectionConfig(),
) -> int:
    """Classify the slide direction from channel activation order.

    Returns one of 0/90/180/270 degrees: columns activating in ascending
    order mean 0, descending 180; rows descending mean 90, ascending 270.
    The axis whose activation times correlate more strongly with channel
    position decides; if neither axis carries any ordering the result is
    indeterminate and raised as an error.
    """
    if isinstance(source, TactileSample):
        channels = source.values
    elif isinstance(source, np.ndarray):
        channels = source
    else:
        channels = stream_to_array(source).T
    if channels.ndim != 2 or channels.shape[0] != 10:
        raise ConfigError(f"expected a (10, frames) channel array, got {channels.shape}")
    if channels.shape[1] < 1:
        raise ConfigError("direction identification needs at least one frame")

    times = activation_times(channels, cfg)
    row_corr = _rank_correlation(times[:5])
    col_corr = _rank_correlation(times[5:])
    if row_corr == 0.0 and col_corr == 0.0:
        raise DirectionIndeterminateError("no activation ordering on either axis")
    if abs(col_corr) >= abs(row_corr):
        return 0 if col_corr > 0 else 180
    return 90 if row_corr < 0 else 270
