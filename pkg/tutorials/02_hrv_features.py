# # HRV features
#
# The 34-feature vector from an RR series, and what the spectral features do
# with a known modulation frequency.

# %%
import numpy as np

from emosens.hrv_features import (baseline_normalize, frequency_domain_features,
                                  poincare_features, rr_feature_vector,
                                  time_domain_features)
from emosens.qrs_detect import RrSeries

# %%
t = np.arange(400)
rr = 800 + 40 * np.sin(2 * np.pi * 0.10 * t * 0.8) + 15 * np.sin(2 * np.pi * 0.25 * t * 0.8)
series = RrSeries.from_intervals(rr)

td = time_domain_features(rr)
print("SDNN %.2f ms, RMSSD %.2f ms, pNN50 %.1f %%" % (td["sdnn"], td["rmssd"], td["pnn50"]))

# %%
# Both oscillations show up as spectral peaks, one in each band.
fd = frequency_domain_features(series)
print("LF peak %.3f Hz, HF peak %.3f Hz, LF/HF %.2f"
      % (fd["lf_peak_hz"], fd["hf_peak_hz"], fd["lf_hf_ratio"]))

# %%
pc = poincare_features(rr)
print("SD1 %.2f  SD2 %.2f  CSI %.2f" % (pc["sd1"], pc["sd2"], pc["csi"]))

# %%
# A resting segment with a slower rhythm; the model sees the difference.
rest = rr_feature_vector(RrSeries.from_intervals(900 + 10 * np.sin(t / 3.0)))
stim = rr_feature_vector(series)
delta = baseline_normalize(stim, rest)
print("mean_hr change: %+.2f bpm" % delta["mean_hr"])
print(len(delta), "features")
