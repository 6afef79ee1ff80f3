import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emosens.errors import InsufficientData, InsufficientSignal, NoBeatsDetected
from emosens.qrs_detect import (DetectorConfig, RPeakSeries, RrSeries,
                                compute_rr_intervals, detect_r_peaks,
                                five_point_derivative, moving_window_integral)
from emosens.signal_io import EcgRecording, generate_synthetic_ecg

FS = 256.0


def _match(detected_s, truth_s, tol_s):
    """Greedy one-to-one matching; returns (true positives, false positives, misses)."""
    used = np.zeros(truth_s.size, dtype=bool)
    tp = 0
    for t in detected_s:
        j = np.flatnonzero(~used & (np.abs(truth_s - t) <= tol_s))
        if j.size:
            used[j[np.argmin(np.abs(truth_s[j] - t))]] = True
            tp += 1
    return tp, detected_s.size - tp, truth_s.size - tp


def test_noiseless_sixty_beats_exact():
    rec = generate_synthetic_ecg([1000.0] * 60, FS)
    peaks, trace = detect_r_peaks(rec)
    assert len(peaks) == 60
    truth = np.round(rec.ground_truth_beats * FS).astype(int)
    assert np.max(np.abs(peaks.peak_sample_indices - truth)) <= 2


def test_alternating_schedule_rr_error():
    rr = [800.0, 900.0] * 38
    rec = generate_synthetic_ecg(rr, FS)
    peaks, _ = detect_r_peaks(rec)
    assert len(peaks) == len(rr)
    detected = np.diff(peaks.peak_times_s) * 1000.0
    assert np.max(np.abs(detected - np.asarray(rr[:-1]))) <= 8.0


def test_flat_signal_has_no_beats():
    with pytest.raises(NoBeatsDetected):
        detect_r_peaks(EcgRecording(np.zeros(int(10 * FS)), FS))


def test_short_recording():
    rec = generate_synthetic_ecg([1000.0] * 4, FS)
    with pytest.raises(InsufficientSignal):
        detect_r_peaks(rec)


def test_trace_stages_have_input_length():
    rec = generate_synthetic_ecg([750.0] * 20, FS, 0.05, seed=1)
    peaks, trace = detect_r_peaks(rec)
    n = rec.samples.size
    for stage in (trace.filtered, trace.derivative, trace.squared, trace.integrated):
        assert stage.shape == (n,)
    np.testing.assert_allclose(trace.squared, trace.derivative ** 2)
    assert trace.threshold_history
    np.testing.assert_array_equal(peaks.peak_times_s, peaks.peak_sample_indices / FS)


def test_trace_csv(tmp_path):
    rec = generate_synthetic_ecg([750.0] * 10, FS)
    _, trace = detect_r_peaks(rec)
    trace.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "sample,filtered,derivative,squared,integrated"
    assert len(lines) == rec.samples.size + 1
    assert (tmp_path / "t.thresholds.csv").read_text().startswith(
        "sample,signal_threshold,searchback_threshold\n")


def test_derivative_of_ramp_and_integral_of_constant():
    x = np.arange(50, dtype=float)
    d = five_point_derivative(x, FS)
    # -(n-2) - 2(n-1) + 2(n+1) + (n+2) = 8, so a unit-step ramp has slope fs
    np.testing.assert_allclose(d[2:-2], FS)
    np.testing.assert_allclose(moving_window_integral(np.full(100, 3.0), FS, 0.15), 3.0)


def test_missed_beats_found_by_searchback():
    # one weak complex among strong ones is still detected
    rec = generate_synthetic_ecg([900.0] * 30, FS)
    x = rec.samples.copy()
    c = int(round(rec.ground_truth_beats[15] * FS))
    x[c - 60:c + 60] *= 0.35
    peaks, _ = detect_r_peaks(EcgRecording(x, FS))
    assert len(peaks) == 30


@given(st.floats(1e-3, 1e4))
def test_amplitude_invariance(c):
    rec = generate_synthetic_ecg([820.0, 760.0, 900.0] * 12, FS, 0.05, seed=4)
    base, _ = detect_r_peaks(rec)
    scaled, _ = detect_r_peaks(EcgRecording(rec.samples * c, FS))
    np.testing.assert_array_equal(base.peak_sample_indices, scaled.peak_sample_indices)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
def test_refractory_holds_for_any_input(seed, spikes):
    r = np.random.default_rng(seed)
    x = r.normal(size=int(6 * FS))
    x[r.integers(0, x.size, size=40)] += spikes * 10
    try:
        peaks, _ = detect_r_peaks(EcgRecording(x, FS))
    except NoBeatsDetected:
        return
    assert np.all(np.diff(peaks.peak_sample_indices) >= 0.2 * FS)


@given(st.lists(st.floats(400.0, 1500.0), min_size=14, max_size=60))
def test_beat_count_matches_schedule_without_noise(rr):
    rec = generate_synthetic_ecg(rr, FS)
    peaks, _ = detect_r_peaks(rec)
    assert len(peaks) == len(rr)


def test_sensitivity_on_noisy_batch():
    r = np.random.default_rng(5)
    tp = fp = fn = 0
    for i in range(10):
        rr = np.clip(850 + 80 * np.sin(np.arange(70) / 5.0) + r.normal(0, 15, 70), 400, 1500)
        rec = generate_synthetic_ecg(rr, FS, 0.1, seed=i)
        peaks, _ = detect_r_peaks(rec)
        a, b, c = _match(peaks.peak_times_s, rec.ground_truth_beats, 0.05)
        tp, fp, fn = tp + a, fp + b, fn + c
    assert tp / (tp + fn) >= 0.99 and tp / (tp + fp) >= 0.99


def test_config_is_overridable():
    rec = generate_synthetic_ecg([700.0] * 20, FS)
    cfg = DetectorConfig(discard_s=2.0)
    peaks, _ = detect_r_peaks(rec, cfg)
    assert peaks.peak_times_s[0] >= 2.0
    assert len(peaks) < 20


# ---------------------------------------------------------------------------
# RR intervals

def _peaks(times_s, fs=1000.0):
    return RPeakSeries(np.round(np.asarray(times_s) * fs).astype(int), fs)


def test_rr_simple():
    rr = compute_rr_intervals(_peaks([0.0, 1.0, 2.0]))
    np.testing.assert_allclose(rr.intervals_ms, [1000.0, 1000.0])
    assert rr.rejected_count == 0
    np.testing.assert_allclose(rr.onset_times_s, [0.0, 1.0])


def test_rr_short_interval_rejected():
    t = list(np.arange(10.0))
    t.insert(5, 4.25)
    rr = compute_rr_intervals(_peaks(t))
    # the spurious peak splits one interval into 250 + 750; both are dropped
    assert 250.0 not in rr.intervals_ms
    assert rr.rejected_count >= 1
    t2 = [0.0, 1.0, 2.0, 3.0, 3.25, 4.25, 5.25, 6.25, 7.25]
    rr2 = compute_rr_intervals(_peaks(t2))
    assert rr2.rejected_count == 1
    np.testing.assert_allclose(rr2.intervals_ms, 1000.0)


def test_rr_missed_beat_flagged_by_median():
    t = np.delete(np.arange(60.0), 30)
    rr = compute_rr_intervals(_peaks(t))
    assert rr.rejected_count == 1
    np.testing.assert_allclose(rr.intervals_ms, 1000.0)
    assert rr.intervals_ms.size == 57


def test_rr_detected_dropout_from_ecg():
    rec = generate_synthetic_ecg([1000.0] * 60, FS)
    x = rec.samples.copy()
    c = int(round(rec.ground_truth_beats[30] * FS))
    x[c - 80:c + 80] = 0.0
    peaks, _ = detect_r_peaks(EcgRecording(x, FS))
    raw = np.diff(peaks.peak_times_s) * 1000.0
    assert np.sum(np.abs(raw - 2000.0) < 10) == 1
    rr = compute_rr_intervals(peaks)
    assert rr.rejected_count == 1


def test_rr_errors():
    with pytest.raises(InsufficientData):
        compute_rr_intervals(_peaks([0.0, 1.0]))
    with pytest.raises(InsufficientData):
        compute_rr_intervals(_peaks([0.0, 0.1, 0.2, 0.3]))


@given(st.lists(st.floats(100.0, 2600.0), min_size=2, max_size=50))
def test_rr_invariants(intervals):
    times = np.concatenate([[0.0], np.cumsum(intervals) / 1000.0])
    try:
        rr = compute_rr_intervals(_peaks(times, 1e6))
    except InsufficientData:
        return
    assert np.all((rr.intervals_ms >= 300.0) & (rr.intervals_ms <= 2000.0))
    assert np.all(np.diff(rr.onset_times_s) > 0)
    assert rr.rejected_count + len(rr) == len(intervals)


def test_rr_series_from_intervals():
    rr = RrSeries.from_intervals([800, 900, 1000], start_s=2.0)
    np.testing.assert_allclose(rr.onset_times_s, [2.0, 2.8, 3.7])
