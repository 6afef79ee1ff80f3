"""Pan-Tompkins R-peak detection and RR-interval extraction.

The detector runs the classic stage chain on the whole recording:

    band-pass (5-15 Hz) -> 5-point derivative -> square -> 150 ms moving
    window integral -> dual adaptive thresholds with search-back

Filtering is zero-phase (forward-backward), so the integrated-signal
fiducial lines up with the QRS complex. Each fiducial is then moved to the
largest raw-signal sample within +-40 ms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple

import numpy as np
from scipy import signal as ss
from scipy.ndimage import uniform_filter1d

from .errors import (InsufficientData, InsufficientSignal, NoBeatsDetected,
                     UnsupportedRate)
from .signal_io import MIN_RATE_HZ, EcgRecording

RR_MIN_MS = 300.0
RR_MAX_MS = 2000.0


@dataclass(frozen=True)
class DetectorConfig:
    low_hz: float = 5.0
    high_hz: float = 15.0
    filter_order: int = 2
    integration_s: float = 0.150
    refractory_s: float = 0.200
    threshold_fraction: float = 0.25
    searchback_scale: float = 0.5
    missed_beat_factor: float = 1.66
    t_wave_window_s: float = 0.360
    refine_s: float = 0.040
    learning_s: float = 2.0
    # Detections earlier than this are dropped. Zero-phase filtering leaves no
    # start-up transient, so nothing is dropped by default.
    discard_s: float = 0.0
    min_duration_s: float = 5.0


@dataclass(frozen=True)
class RPeakSeries:
    peak_sample_indices: np.ndarray
    sampling_rate_hz: float

    @property
    def peak_times_s(self) -> np.ndarray:
        return self.peak_sample_indices / self.sampling_rate_hz

    def __len__(self):
        return self.peak_sample_indices.size


@dataclass
class DetectionTrace:
    filtered: np.ndarray
    derivative: np.ndarray
    squared: np.ndarray
    integrated: np.ndarray
    # (sample, signal threshold, search-back threshold) after each candidate
    threshold_history: List[Tuple[int, float, float]] = field(default_factory=list)

    def to_csv(self, path) -> None:
        """Write one column per stage; thresholds go to a ``.thresholds.csv`` sibling."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample", "filtered", "derivative", "squared", "integrated"])
            for i, row in enumerate(zip(self.filtered, self.derivative,
                                        self.squared, self.integrated)):
                w.writerow([i] + [repr(float(v)) for v in row])
        thr_path = path.with_name(path.stem + ".thresholds.csv")
        with open(thr_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample", "signal_threshold", "searchback_threshold"])
            for s, t1, t2 in self.threshold_history:
                w.writerow([s, repr(float(t1)), repr(float(t2))])


@dataclass(frozen=True)
class RrSeries:
    """Cleaned RR intervals.

    ``onset_times_s[i]`` is the time of the beat that opens interval ``i``.
    """

    intervals_ms: np.ndarray
    onset_times_s: np.ndarray
    rejected_count: int = 0

    @classmethod
    def from_intervals(cls, intervals_ms, start_s: float = 0.0) -> "RrSeries":
        """Wrap a gap-free interval sequence, onsets accumulated from ``start_s``."""
        rr = np.asarray(intervals_ms, dtype=float)
        onsets = start_s + (np.cumsum(rr) - rr) / 1000.0
        return cls(intervals_ms=rr, onset_times_s=onsets, rejected_count=0)

    def __len__(self):
        return self.intervals_ms.size


def bandpass(x: np.ndarray, fs: float, cfg: DetectorConfig = DetectorConfig()) -> np.ndarray:
    """Cascaded Butterworth low-pass then high-pass, each run forward-backward."""
    low = ss.butter(cfg.filter_order, cfg.high_hz, btype="lowpass", fs=fs, output="sos")
    high = ss.butter(cfg.filter_order, cfg.low_hz, btype="highpass", fs=fs, output="sos")
    y = ss.sosfiltfilt(low, x)
    return ss.sosfiltfilt(high, y)


def five_point_derivative(x: np.ndarray, fs: float) -> np.ndarray:
    # y[n] = fs/8 * (-x[n-2] - 2x[n-1] + 2x[n+1] + x[n+2]), centred
    xp = np.pad(x, 2, mode="edge")
    return fs / 8.0 * (-xp[:-4] - 2 * xp[1:-3] + 2 * xp[3:-1] + xp[4:])


def moving_window_integral(x: np.ndarray, fs: float, window_s: float) -> np.ndarray:
    width = max(1, int(round(window_s * fs)))
    return uniform_filter1d(x, size=width, mode="nearest")


def detect_r_peaks(rec: EcgRecording, config: DetectorConfig = DetectorConfig()
                   ) -> Tuple[RPeakSeries, DetectionTrace]:
    """Locate R waves in a single-lead ECG.

    Returns the peak series and the per-stage trace. Raises
    ``InsufficientSignal`` for recordings shorter than ``min_duration_s`` and
    ``NoBeatsDetected`` when nothing crosses the thresholds.
    """
    cfg = config
    fs = float(rec.sampling_rate_hz)
    if fs < MIN_RATE_HZ:
        raise UnsupportedRate(f"sampling rate must be >= {MIN_RATE_HZ:g} Hz, got {fs:g}")
    raw = np.asarray(rec.samples, dtype=float)
    if raw.size / fs < cfg.min_duration_s:
        raise InsufficientSignal(
            f"recording lasts {raw.size / fs:.2f} s, need {cfg.min_duration_s:g} s")
    if not np.all(np.isfinite(raw)):
        raise InsufficientSignal("recording contains non-finite samples")

    filtered = bandpass(raw - raw.mean(), fs, cfg)
    derivative = five_point_derivative(filtered, fs)
    squared = derivative ** 2
    integrated = moving_window_integral(squared, fs, cfg.integration_s)
    trace = DetectionTrace(filtered, derivative, squared, integrated)

    top = integrated.max()
    if not top > 0:
        raise NoBeatsDetected("flat signal")

    refractory = int(math.ceil(cfg.refractory_s * fs))
    candidates, _ = ss.find_peaks(integrated, distance=refractory)
    fiducials = _adaptive_threshold(candidates, integrated, np.abs(derivative),
                                    fs, cfg, trace.threshold_history)
    if not fiducials:
        raise NoBeatsDetected("no candidate crossed the detection threshold")

    half = int(round(cfg.refine_s * fs))
    peaks = []
    for f in fiducials:
        lo, hi = max(0, f - half), min(raw.size, f + half + 1)
        peaks.append(lo + int(np.argmax(raw[lo:hi])))
    peaks = _enforce_refractory(sorted(set(peaks)), raw, refractory)
    first = int(math.ceil(cfg.discard_s * fs))
    peaks = np.asarray([p for p in peaks if p >= first], dtype=np.intp)
    if peaks.size == 0:
        raise NoBeatsDetected("all detections fell inside the discard window")
    return RPeakSeries(peak_sample_indices=peaks, sampling_rate_hz=fs), trace


def _adaptive_threshold(candidates, integrated, slope, fs, cfg, history):
    """Classify integrated-signal maxima as QRS or noise.

    Signal and noise levels are running means (1/8 update); the detection
    threshold sits a quarter of the way from noise to signal level. If no QRS
    appears for ``missed_beat_factor`` times the recent mean RR, the skipped
    stretch is searched again at half the threshold.
    """
    n = integrated.size
    top = integrated.max()
    # learn initial levels on the first seconds of actual activity
    active = np.flatnonzero(integrated > 0.01 * top)
    start = int(active[0]) if active.size else 0
    learn = integrated[start:start + max(1, int(round(cfg.learning_s * fs)))]
    spk = learn.max() / 3.0
    npk = learn.mean() / 2.0

    def thresholds():
        t1 = npk + cfg.threshold_fraction * (spk - npk)
        return t1, cfg.searchback_scale * t1

    refractory = cfg.refractory_s * fs
    t_window = cfg.t_wave_window_s * fs
    slope_half = max(1, int(round(0.075 * fs)))

    def max_slope(p):
        return slope[max(0, p - slope_half):p + slope_half + 1].max()

    qrs: List[int] = []
    qrs_slope: List[float] = []
    pending: List[int] = []  # noise-classified candidates since the last QRS

    def rr_mean():
        if len(qrs) < 2:
            return None
        recent = np.diff(qrs[-9:])
        return float(recent.mean())

    def accept(p, searchback):
        nonlocal spk
        v = integrated[p]
        spk = (0.25 * v + 0.75 * spk) if searchback else (0.125 * v + 0.875 * spk)
        qrs.append(p)
        qrs_slope.append(max_slope(p))
        pending.clear()

    def search_back(upto):
        rr = rr_mean()
        if rr is None or not qrs or upto - qrs[-1] <= cfg.missed_beat_factor * rr:
            return
        _, t2 = thresholds()
        pool = [p for p in pending
                if p - qrs[-1] >= refractory and upto - p >= refractory
                and integrated[p] > t2]
        if pool:
            best = max(pool, key=lambda p: (integrated[p], -p))
            accept(best, searchback=True)

    for p in candidates:
        p = int(p)
        search_back(p)
        v = integrated[p]
        t1, _ = thresholds()
        is_qrs = v > t1 and (not qrs or p - qrs[-1] >= refractory)
        if is_qrs and qrs and p - qrs[-1] < t_window:
            # likely a T wave if its slope is under half the previous QRS slope
            if max_slope(p) < 0.5 * qrs_slope[-1]:
                is_qrs = False
        if is_qrs:
            accept(p, searchback=False)
        else:
            npk = 0.125 * v + 0.875 * npk
            pending.append(p)
        history.append((p, *thresholds()))
    search_back(n - 1)
    return qrs


def _enforce_refractory(peaks, raw, refractory):
    kept: List[int] = []
    for p in peaks:
        if kept and p - kept[-1] < refractory:
            if raw[p] > raw[kept[-1]]:
                kept[-1] = p
            continue
        kept.append(p)
    # replacing a peak can pull it closer to its predecessor; resolve that too
    out: List[int] = []
    for p in kept:
        if out and p - out[-1] < refractory:
            continue
        out.append(p)
    return out


def compute_rr_intervals(peaks: RPeakSeries, rr_min_ms: float = RR_MIN_MS,
                         rr_max_ms: float = RR_MAX_MS,
                         max_deviation: float = 0.30, median_window: int = 5) -> RrSeries:
    """Turn R peaks into cleaned RR intervals.

    An interval is rejected when it falls outside ``[rr_min_ms, rr_max_ms]``
    or differs from the median of the ``median_window`` intervals centred on
    it by more than ``max_deviation`` (fractional).
    """
    if len(peaks) < 3:
        raise InsufficientData(f"need at least 3 peaks, got {len(peaks)}")
    times = peaks.peak_times_s
    rr = np.diff(times) * 1000.0
    half = median_window // 2
    keep = np.ones(rr.size, dtype=bool)
    for i in range(rr.size):
        local = np.median(rr[max(0, i - half):i + half + 1])
        if not rr_min_ms <= rr[i] <= rr_max_ms:
            keep[i] = False
        elif abs(rr[i] - local) > max_deviation * local:
            keep[i] = False
    if keep.sum() < 2:
        raise InsufficientData(f"only {int(keep.sum())} RR intervals survived cleaning")
    return RrSeries(intervals_ms=rr[keep], onset_times_s=times[:-1][keep],
                    rejected_count=int((~keep).sum()))
