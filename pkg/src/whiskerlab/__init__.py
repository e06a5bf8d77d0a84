"""whiskerlab: whisker-array tactile sensing toolkit.

Pipeline stages: camera frames -> taxel matrices -> 10-channel feature
streams -> event-triggered fixed-length captures -> analysis (speed,
direction) and texture classification.  A deterministic slide simulator
stands in for the physical rig so the whole pipeline is verifiable
end to end.
"""

from . import analysis, events, features, learn, sim, taxel_grid
from .analysis import (
    DirectionConfig,
    DurationConfig,
    RegressionFit,
    event_duration,
    fit_log_regression,
    identify_direction,
)
from .errors import (
    CalibrationUnderrunError,
    ConfigError,
    DataFileError,
    DatasetBuildError,
    DegenerateFitError,
    DegenerateModelError,
    DirectionIndeterminateError,
    WhiskerlabError,
)
from .events import (
    Baseline,
    Detector,
    DetectorConfig,
    SampleLabel,
    TactileSample,
    calibrate,
    capture_samples,
    detect,
)
from .features import FeatureConfig, FeatureVector, features_from_taxels, features_stream
from .sim import (
    SPECIMENS,
    SlideConfig,
    TextureSpec,
    WhiskerArraySpec,
    height_profile,
    simulate_frames,
    simulate_slide,
)
from .taxel_grid import TactileFrame, TaxelGridConfig, TaxelMatrix, extract_taxels, render_frame

__version__ = "0.1.0"
