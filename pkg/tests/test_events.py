import json

import numpy as np
import pytest

from whiskerlab.errors import CalibrationUnderrunError, ConfigError
from whiskerlab.events import (
    Baseline,
    Detector,
    DetectorConfig,
    SampleLabel,
    TactileSample,
    calibrate,
    capture_samples,
    detect,
    load_samples_jsonl,
    sample_to_dict,
    save_samples_jsonl,
)
from whiskerlab.features import FeatureVector

from oracles import capture_reference


def stream_from_array(values: np.ndarray):
    return [FeatureVector(row, frame_index=t) for t, row in enumerate(values)]


def constant_stream(level, frames, channels=10):
    return stream_from_array(np.full((frames, channels), float(level)))


def hand_trace_stream():
    """One active channel: calibration at 1.0, a 2.5 burst, then quiet."""
    values = np.ones((18, 10))
    values[10:14, 0] = 2.5
    return stream_from_array(values)


def test_calibrate_constant_stream():
    cfg = DetectorConfig(window_frames=2, sample_frames=4, backtrack_frames=1)
    baseline = calibrate(constant_stream(1.0, 10), cfg)
    assert np.all(baseline.levels == 2.0)
    assert baseline.calibration_end == 10


def test_calibrate_zero_stream():
    cfg = DetectorConfig(window_frames=5)
    baseline = calibrate(constant_stream(0.0, 25), cfg)
    assert np.all(baseline.levels == 0.0)


def test_calibrate_ramp():
    cfg = DetectorConfig(window_frames=2, sample_frames=4, backtrack_frames=1)
    values = np.tile(np.linspace(0.1, 1.0, 10)[:, None], (1, 10))
    baseline = calibrate(stream_from_array(values), cfg)
    assert np.allclose(baseline.levels, 5.5 / 5, atol=1e-12)


def test_calibration_underrun():
    cfg = DetectorConfig(window_frames=2, sample_frames=4, backtrack_frames=1)
    with pytest.raises(CalibrationUnderrunError):
        calibrate(constant_stream(1.0, 9), cfg)


def test_hand_trace_literal_mode():
    cfg = DetectorConfig(window_frames=2, backtrack_frames=1, trigger_multiplier=2.0,
                         sample_frames=4, mode="literal")
    stream = hand_trace_stream()
    baseline = calibrate(stream, cfg)
    assert np.all(baseline.levels == 2.0)
    samples = detect(stream, baseline, cfg)
    assert len(samples) == 1
    sample = samples[0]
    assert sample.trigger_frame == 10
    assert sample.trigger_channel == 1
    # Capture covers frames 9..12: values 1.0, 2.5, 2.5, 2.5 on the active channel.
    assert np.array_equal(sample.values[0], [1.0, 2.5, 2.5, 2.5])
    assert np.all(sample.values[1:] == 1.0)


def test_hand_trace_shifted_mode_with_unit_floor_matches_literal():
    stream = hand_trace_stream()
    literal = DetectorConfig(window_frames=2, backtrack_frames=1, trigger_multiplier=2.0,
                             sample_frames=4, mode="literal")
    shifted = DetectorConfig(window_frames=2, backtrack_frames=1, trigger_multiplier=2.0,
                             sample_frames=4, mode="shifted", epsilon=1.0)
    got_literal = capture_samples(stream, literal)
    got_shifted = capture_samples(stream, shifted)
    assert len(got_literal) == len(got_shifted) == 1
    assert got_literal[0].trigger_frame == got_shifted[0].trigger_frame
    assert np.array_equal(got_literal[0].values, got_shifted[0].values)


def test_constant_stream_never_triggers_in_shifted_mode():
    cfg = DetectorConfig(mode="shifted")
    samples = capture_samples(constant_stream(-3.0, 400), cfg)
    assert samples == []


def test_literal_mode_negative_baseline_degeneracy():
    # With negative feature levels the verbatim comparison fires immediately
    # for any multiplier > 1; shifted mode is the remedy.
    cfg = DetectorConfig(mode="literal")
    samples = capture_samples(constant_stream(-3.0, 400), cfg)
    assert len(samples) > 0


def test_modes_coincide_on_nonnegative_streams_with_unit_floor():
    # With a floor whose log is zero, the shift vanishes and the two modes
    # are the same comparison on any nonnegative stream.
    rng = np.random.default_rng(55)
    for _ in range(20):
        values = rng.uniform(0.0, 1.0, size=(50, 10))
        values[20:23, int(rng.integers(0, 10))] = rng.uniform(2.0, 5.0)
        stream = stream_from_array(values)
        kwargs = dict(window_frames=2, backtrack_frames=2, trigger_multiplier=1.5,
                      sample_frames=6)
        lit = capture_samples(stream, DetectorConfig(mode="literal", **kwargs))
        shf = capture_samples(stream, DetectorConfig(mode="shifted", epsilon=1.0, **kwargs))
        assert len(lit) == len(shf)
        for a, b in zip(lit, shf):
            assert a.trigger_frame == b.trigger_frame
            assert a.trigger_channel == b.trigger_channel
            assert np.array_equal(a.values, b.values)


def test_burst_separation_controls_sample_count():
    cfg = DetectorConfig(window_frames=2, backtrack_frames=1, trigger_multiplier=2.0,
                         sample_frames=6, mode="literal")

    def run(second_start):
        values = np.ones((60, 10))
        values[20:22, 2] = 5.0
        values[second_start : second_start + 2, 2] = 5.0
        return detect(stream_from_array(values),
                      calibrate(stream_from_array(values), cfg), cfg)

    far = run(second_start=30)  # bursts a full sample length apart
    assert len(far) == 2
    assert far[1].trigger_frame - far[0].trigger_frame >= cfg.sample_frames
    near = run(second_start=24)  # second burst inside the suppression window
    assert len(near) == 1


def test_captures_match_reference_interpreter_on_random_streams():
    rng = np.random.default_rng(42)
    for case in range(50):
        m = int(rng.integers(1, 5))
        l = int(rng.integers(4, 13))
        c = int(rng.integers(0, min(l, 5 * m + 1)))
        b = float(rng.uniform(1.1, 3.0))
        n = 5 * m + int(rng.integers(30, 80))
        values = rng.uniform(0.0, 1.0, size=(n, 10))
        values[: 5 * m] = rng.uniform(0.5, 1.5, size=(5 * m, 10))
        for _ in range(int(rng.integers(1, 4))):
            start = int(rng.integers(5 * m, n - 2))
            width = int(rng.integers(2, 2 * m + 2))
            channel = int(rng.integers(0, 10))
            values[start : start + width, channel] = rng.uniform(2.0, 4.0)

        cfg = DetectorConfig(window_frames=m, backtrack_frames=c, trigger_multiplier=b,
                             sample_frames=l, mode="literal")
        detector = Detector(cfg)
        stream = stream_from_array(values)
        samples = detector.detect(stream, detector.calibrate(stream))
        expected, expected_discards = capture_reference(values, m, c, b, l)

        assert len(samples) == len(expected), f"case {case}"
        for sample, (t, k, matrix) in zip(samples, expected):
            assert sample.trigger_frame == t
            assert sample.trigger_channel == k
            assert np.array_equal(sample.values, matrix)
        assert detector.discarded_partial == expected_discards


def test_capture_is_exact_slice_of_stream():
    cfg = DetectorConfig(window_frames=2, backtrack_frames=3, trigger_multiplier=2.0,
                         sample_frames=8, mode="literal")
    rng = np.random.default_rng(1)
    values = rng.uniform(0.3, 0.5, size=(40, 10))
    values[15:18, 4] = 6.0
    samples = capture_samples(stream_from_array(values), cfg)
    assert len(samples) == 1
    start = samples[0].trigger_frame - cfg.backtrack_frames
    assert np.array_equal(samples[0].values, values[start : start + 8].T)
    assert samples[0].values.shape == (10, 8)


def test_trigger_near_stream_end_is_discarded():
    cfg = DetectorConfig(window_frames=2, backtrack_frames=1, trigger_multiplier=2.0,
                         sample_frames=10, mode="literal")
    values = np.ones((14, 10))
    values[12:14, 0] = 9.0  # fires at t=12 but only 2 frames remain
    detector = Detector(cfg)
    stream = stream_from_array(values)
    samples = detector.detect(stream, detector.calibrate(stream))
    assert samples == []
    assert detector.discarded_partial == 1


def test_ascending_channel_wins_simultaneous_trigger():
    cfg = DetectorConfig(window_frames=2, backtrack_frames=1, trigger_multiplier=2.0,
                         sample_frames=4, mode="literal")
    values = np.ones((20, 10))
    values[10:12, 3] = 9.0
    values[10:12, 7] = 9.0
    samples = capture_samples(stream_from_array(values), cfg)
    assert len(samples) == 1
    assert samples[0].trigger_channel == 4  # 1-based; channel index 3 beats 7


def test_backtrack_must_fit_in_calibration_prefix():
    with pytest.raises(ConfigError):
        DetectorConfig(window_frames=1, backtrack_frames=6, sample_frames=10).validate()


def test_detect_rejects_mismatched_baseline():
    short = calibrate(constant_stream(1.0, 10),
                      DetectorConfig(window_frames=2, backtrack_frames=1, sample_frames=4))
    cfg = DetectorConfig(window_frames=5, backtrack_frames=20, sample_frames=70)
    with pytest.raises(ConfigError):
        detect(constant_stream(1.0, 200), short, cfg)


def test_detection_is_deterministic_and_serializable(tmp_path):
    cfg = DetectorConfig(window_frames=2, backtrack_frames=2, trigger_multiplier=1.8,
                         sample_frames=6, mode="literal")
    rng = np.random.default_rng(8)
    values = rng.uniform(0.2, 1.0, size=(50, 10))
    values[20:23, 5] = 5.0
    runs = []
    for _ in range(2):
        samples = capture_samples(stream_from_array(values), cfg)
        runs.append("\n".join(json.dumps(sample_to_dict(s), sort_keys=True) for s in samples))
    assert runs[0] == runs[1] and runs[0]


def test_jsonl_round_trip(tmp_path):
    cfg = DetectorConfig(window_frames=2, backtrack_frames=1, trigger_multiplier=2.0,
                         sample_frames=4, mode="literal")
    samples = capture_samples(hand_trace_stream(), cfg)
    samples[0].label = SampleLabel(3, "sinc", 3.0, 150.0, 90)
    samples[0].seed = 1234
    samples[0].config_digest = "abc"
    path = tmp_path / "samples.jsonl"
    save_samples_jsonl(path, samples)
    again = load_samples_jsonl(path)
    assert len(again) == 1
    assert np.array_equal(again[0].values, samples[0].values)
    assert again[0].label == samples[0].label
    assert again[0].seed == 1234
    assert again[0].trigger_frame == samples[0].trigger_frame
