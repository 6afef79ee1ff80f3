"""Heart-rate-variability features, baseline normalisation and min-max scaling.

All interval quantities are in milliseconds, heart rates in beats per
minute, spectral powers in ms^2 and peak locations in Hz. Standard
deviations are population (``ddof=0``) throughout.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Union

import numpy as np
from scipy import signal as ss

from .dataset import (FEATURE_NAMES, FREQUENCY_FEATURES, GEOMETRIC_FEATURES,
                      POINCARE_FEATURES, TIME_DOMAIN_FEATURES, LabeledDataset)
from .errors import (EmosensError, EmptyFit, InsufficientData,
                     InsufficientSpan, ShapeError)
from .qrs_detect import (DetectorConfig, RrSeries, compute_rr_intervals,
                         detect_r_peaks)
from .signal_io import EcgRecording

HIST_BIN_MS = 7.8125  # 1/128 s
RESAMPLE_HZ = 4.0
WELCH_SEGMENT_S = 64.0
MIN_SPECTRAL_SPAN_S = 60.0
VLF_BAND = (0.0033, 0.04)
LF_BAND = (0.04, 0.15)
HF_BAND = (0.15, 0.40)

RrLike = Union[RrSeries, np.ndarray, list]


class HrvFeatureVector(Mapping):
    """Read-only mapping of the 34 canonical features, in canonical order."""

    __slots__ = ("_values",)

    def __init__(self, values: Mapping):
        missing = [k for k in FEATURE_NAMES if k not in values]
        extra = [k for k in values if k not in FEATURE_NAMES]
        if missing or extra:
            raise ShapeError(f"incomplete feature vector (missing={missing}, extra={extra})")
        self._values = np.array([float(values[k]) for k in FEATURE_NAMES])

    @classmethod
    def from_array(cls, arr) -> "HrvFeatureVector":
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (len(FEATURE_NAMES),):
            raise ShapeError(f"expected {len(FEATURE_NAMES)} values, got shape {arr.shape}")
        return cls(dict(zip(FEATURE_NAMES, arr)))

    def __getitem__(self, key):
        try:
            return float(self._values[FEATURE_NAMES.index(key)])
        except ValueError:
            raise KeyError(key) from None

    def __iter__(self) -> Iterator[str]:
        return iter(FEATURE_NAMES)

    def __len__(self):
        return len(FEATURE_NAMES)

    def as_array(self) -> np.ndarray:
        return self._values.copy()

    def __repr__(self):
        body = ", ".join(f"{k}={v:.6g}" for k, v in self.items())
        return f"HrvFeatureVector({body})"


def _intervals(rr: RrLike) -> np.ndarray:
    if isinstance(rr, RrSeries):
        return np.asarray(rr.intervals_ms, dtype=float)
    return np.asarray(rr, dtype=float)


def _ratio(num, den):
    return num / den if den > 0 else 0.0


# ---------------------------------------------------------------------------
# time domain + geometric

def time_domain_features(rr: RrLike, geometric: bool = True) -> Dict[str, float]:
    """Summary statistics of the RR series.

    Returns the 16 time-domain entries, plus ``hti`` and ``tinn`` when
    ``geometric`` is true (these need at least 10 intervals).
    """
    x = _intervals(rr)
    if x.size < 2:
        raise InsufficientData(f"need at least 2 intervals, got {x.size}")
    if geometric and x.size < 10:
        raise InsufficientData(f"geometric features need 10 intervals, got {x.size}")
    d = np.diff(x)
    hr = 60000.0 / x
    mean_rr = x.mean()
    sdnn = x.std()
    rmssd = math.sqrt(np.mean(d ** 2))
    out = {
        "mean_rr": mean_rr,
        "median_rr": float(np.median(x)),
        "min_rr": x.min(),
        "max_rr": x.max(),
        "range_rr": x.max() - x.min(),
        "sdnn": sdnn,
        "rmssd": rmssd,
        "sdsd": d.std(),
        "cvnn": sdnn / mean_rr,
        "cvsd": rmssd / mean_rr,
        "pnn20": 100.0 * np.count_nonzero(np.abs(d) > 20.0) / d.size,
        "pnn50": 100.0 * np.count_nonzero(np.abs(d) > 50.0) / d.size,
        "mean_hr": hr.mean(),
        "std_hr": hr.std(),
        "min_hr": hr.min(),
        "max_hr": hr.max(),
    }
    if geometric:
        out.update(geometric_features(x))
    return {k: float(v) for k, v in out.items()}


def rr_histogram(x: np.ndarray, bin_ms: float = HIST_BIN_MS):
    """Histogram on a fixed grid of ``bin_ms``-wide bins anchored at zero.

    Returns ``(counts, first_bin_index)``; bin ``j`` covers
    ``[(first + j) * bin_ms, (first + j + 1) * bin_ms)``.
    """
    idx = np.floor(np.asarray(x, dtype=float) / bin_ms).astype(np.int64)
    first = int(idx.min())
    return np.bincount(idx - first), first


def _first_min(values):
    # lowest index among values tied with the minimum (relative 1e-9)
    values = np.asarray(values, dtype=float)
    best = values.min()
    tol = 1e-9 * max(abs(best), 1.0)
    return int(np.flatnonzero(values <= best + tol)[0])


def geometric_features(rr: RrLike, bin_ms: float = HIST_BIN_MS) -> Dict[str, float]:
    """HRV triangular index and TINN.

    ``hti`` is the interval count over the tallest histogram bin. ``tinn`` is
    the base ``M - N`` of the triangle that peaks on the tallest bin (first one
    on ties), drops to zero at bin edges ``N`` (left of the peak) and ``M``
    (right of it), and minimises the squared error against the histogram at
    bin centres. Ties go to the smallest ``N`` and then the smallest ``M``.
    """
    x = _intervals(rr)
    counts, first = rr_histogram(x, bin_ms)
    counts = counts.astype(float)
    m = int(np.argmax(counts))
    peak = counts[m]
    hti = x.size / peak

    nb = counts.size
    centres = (first + np.arange(nb) + 0.5) * bin_ms
    edges = (first + np.arange(nb + 1)) * bin_ms
    X = centres[m]

    # The error separates into a left part (bins below the mode, depends on N
    # only) and a right part (bins above it, depends on M only).
    left_c, left_d = centres[:m], counts[:m]
    left_err = []
    for N in edges[:m + 1]:
        q = np.where(left_c > N, peak * (left_c - N) / (X - N), 0.0)
        left_err.append(np.sum((left_d - q) ** 2))
    right_c, right_d = centres[m + 1:], counts[m + 1:]
    right_err = []
    for M in edges[m + 1:]:
        q = np.where(right_c < M, peak * (M - right_c) / (M - X), 0.0)
        right_err.append(np.sum((right_d - q) ** 2))
    N = edges[_first_min(left_err)]
    M = edges[m + 1 + _first_min(right_err)]
    return {"hti": float(hti), "tinn": float(M - N)}


# ---------------------------------------------------------------------------
# frequency domain

def resample_rr(rr: RrSeries, fs: float = RESAMPLE_HZ):
    """Linearly interpolate RR values onto a uniform grid.

    Each interval is placed at the time of the beat that closes it. The grid
    starts at the first such time. Returns ``(t, values)``.
    """
    x = _intervals(rr)
    t_beat = np.asarray(rr.onset_times_s, dtype=float) + x / 1000.0
    n = int(math.floor((t_beat[-1] - t_beat[0]) * fs + 1e-9)) + 1
    t = t_beat[0] + np.arange(n) / fs
    return t, np.interp(t, t_beat, x)


def rr_span_s(rr: RrSeries) -> float:
    x = _intervals(rr)
    return float(rr.onset_times_s[-1] + x[-1] / 1000.0 - rr.onset_times_s[0])


def rr_psd(rr: RrSeries, fs: float = RESAMPLE_HZ, segment_s: float = WELCH_SEGMENT_S):
    """Welch PSD of the resampled, mean-removed RR series (ms^2/Hz).

    Periodic Hann window, 50 % overlap, segments of ``segment_s`` seconds or
    the whole series if shorter, no per-segment detrending.
    """
    _, v = resample_rr(rr, fs)
    v = v - v.mean()
    nperseg = min(int(round(segment_s * fs)), v.size)
    return ss.welch(v, fs=fs, window="hann", nperseg=nperseg,
                    noverlap=nperseg // 2, detrend=False, scaling="density")


def _band(freqs, psd, band):
    lo, hi = band
    mask = (freqs >= lo) & (freqs < hi)
    if not mask.any():
        return 0.0, 0.0
    df = freqs[1] - freqs[0]
    power = float(psd[mask].sum() * df)
    peak = float(freqs[mask][np.argmax(psd[mask])])
    return power, peak


def frequency_domain_features(rr: RrSeries) -> Dict[str, float]:
    """Band powers, normalised powers and band peak frequencies.

    Needs an RR series spanning at least 60 s.
    """
    span = rr_span_s(rr)
    if span < MIN_SPECTRAL_SPAN_S:
        raise InsufficientSpan(f"RR series spans {span:.1f} s, need {MIN_SPECTRAL_SPAN_S:g} s")
    freqs, psd = rr_psd(rr)
    vlf, vlf_peak = _band(freqs, psd, VLF_BAND)
    lf, lf_peak = _band(freqs, psd, LF_BAND)
    hf, hf_peak = _band(freqs, psd, HF_BAND)
    return {
        "vlf_power": vlf,
        "lf_power": lf,
        "hf_power": hf,
        "total_power": vlf + lf + hf,
        "lf_norm": 100.0 * _ratio(lf, lf + hf),
        "hf_norm": 100.0 * _ratio(hf, lf + hf),
        "lf_hf_ratio": _ratio(lf, hf),
        "vlf_peak_hz": vlf_peak,
        "lf_peak_hz": lf_peak,
        "hf_peak_hz": hf_peak,
    }


# ---------------------------------------------------------------------------
# Poincare

def poincare_features(rr: RrLike) -> Dict[str, float]:
    x = _intervals(rr)
    if x.size < 3:
        raise InsufficientData(f"need at least 3 intervals, got {x.size}")
    a, b = x[:-1], x[1:]
    # std before scaling keeps a constant series exactly at zero
    sd1 = float(np.std(a - b)) / math.sqrt(2.0)
    sd2 = float(np.std(a + b)) / math.sqrt(2.0)
    product = 16.0 * sd1 * sd2
    return {
        "sd1": sd1,
        "sd2": sd2,
        "sd2_sd1_ratio": _ratio(sd2, sd1),
        "ellipse_area": math.pi * sd1 * sd2,
        "csi": _ratio(sd2, sd1),
        # log of zero is undefined; a degenerate scatter maps to 0
        "cvi": math.log10(product) if product > 0 else 0.0,
    }


# ---------------------------------------------------------------------------
# composition

def rr_feature_vector(rr: RrSeries) -> HrvFeatureVector:
    values = {}
    values.update(time_domain_features(rr))
    values.update(frequency_domain_features(rr))
    values.update(poincare_features(rr))
    return HrvFeatureVector(values)


@contextmanager
def _stage(name):
    try:
        yield
    except EmosensError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def extract_feature_vector(rec: EcgRecording,
                           config: DetectorConfig = DetectorConfig()) -> HrvFeatureVector:
    """ECG recording to the 34-feature vector.

    Errors keep their type and gain a ``stage`` attribute naming the step
    that failed.
    """
    with _stage("detect_r_peaks"):
        peaks, _ = detect_r_peaks(rec, config)
    with _stage("compute_rr_intervals"):
        rr = compute_rr_intervals(peaks)
    values = {}
    with _stage("time_domain_features"):
        values.update(time_domain_features(rr))
    with _stage("frequency_domain_features"):
        values.update(frequency_domain_features(rr))
    with _stage("poincare_features"):
        values.update(poincare_features(rr))
    return HrvFeatureVector(values)


def baseline_normalize(stimulus: HrvFeatureVector,
                       baseline: HrvFeatureVector) -> HrvFeatureVector:
    """Stimulus response minus resting level, feature by feature."""
    return HrvFeatureVector.from_array(
        HrvFeatureVector(stimulus).as_array() - HrvFeatureVector(baseline).as_array())


# ---------------------------------------------------------------------------
# min-max scaling

@dataclass(frozen=True)
class ScalerParams:
    mins: np.ndarray
    maxs: np.ndarray
    fitted_on: Optional[str] = None

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mins.size:
            raise ShapeError(f"expected {self.mins.size} columns, got shape {X.shape}")
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = (X - self.mins) / safe
        out[:, span <= 0] = 0.0
        return np.clip(out, 0.0, 1.0)

    def to_json(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist(),
                "fitted_on": self.fitted_on}


def fit_minmax(train: Union[LabeledDataset, np.ndarray],
               fitted_on: Optional[str] = None) -> ScalerParams:
    X = train.X if isinstance(train, LabeledDataset) else np.asarray(train, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyFit("cannot fit a scaler on zero rows")
    return ScalerParams(mins=X.min(axis=0), maxs=X.max(axis=0), fitted_on=fitted_on)


def apply_minmax(params: ScalerParams, dataset: LabeledDataset) -> LabeledDataset:
    """Scale to [0, 1] with the fitted ranges; unseen values are clamped."""
    return dataset.with_features(params.transform(dataset.X))


__all__ = [
    "FEATURE_NAMES", "TIME_DOMAIN_FEATURES", "GEOMETRIC_FEATURES",
    "FREQUENCY_FEATURES", "POINCARE_FEATURES", "HrvFeatureVector",
    "ScalerParams", "time_domain_features", "geometric_features",
    "frequency_domain_features", "poincare_features", "rr_feature_vector",
    "extract_feature_vector", "baseline_normalize", "fit_minmax",
    "apply_minmax", "resample_rr", "rr_psd",
]
