# # R-peak detection on a synthetic ECG
#
# Build an ECG with a known beat schedule, run the detector and compare the
# peaks it finds with the ground truth.

# %%
import numpy as np

from emosens.qrs_detect import compute_rr_intervals, detect_r_peaks
from emosens.signal_io import generate_synthetic_ecg

# %%
# A slow sinusoidal swing in RR plus some jitter, about 70 s of signal.
rng = np.random.default_rng(0)
rr = 850 + 80 * np.sin(np.arange(80) / 5.0) + rng.normal(0, 15, 80)
rec = generate_synthetic_ecg(rr, sampling_rate_hz=256.0, noise_std_mv=0.1, seed=1)
print(rec.duration_s, "s at", rec.sampling_rate_hz, "Hz")

# %%
peaks, trace = detect_r_peaks(rec)
print(len(peaks), "peaks found,", len(rec.ground_truth_beats), "beats in the schedule")

# Each true beat should have a detection within 50 ms.
err = np.array([np.min(np.abs(peaks.peak_times_s - t)) for t in rec.ground_truth_beats])
print("worst timing error: %.1f ms" % (1000 * err.max()))

# %%
# The trace keeps every intermediate stage: band-passed, derivative, squared,
# integrated, plus the adaptive thresholds at each candidate.
for name in ("filtered", "derivative", "squared", "integrated"):
    print(name, getattr(trace, name).shape)

# %%
# Cleaned RR intervals feed the feature extractor.
rr_series = compute_rr_intervals(peaks)
print("mean RR %.1f ms over %d intervals" % (rr_series.intervals_ms.mean(), len(rr_series.intervals_ms)))
