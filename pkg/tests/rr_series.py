"""Random RR series shared by the feature tests and the acceptance suite."""

import math

import numpy as np


def random_rr(r: np.random.Generator) -> np.ndarray:
    """60-120 s of RR intervals: LF + HF modulation, white jitter, sometimes
    quantised to a 256 Hz sample grid (which produces histogram ties)."""
    mean = r.uniform(500, 1100)
    n = int(math.ceil(r.uniform(62, 120) * 1000 / mean))
    t = np.arange(n) * mean / 1000.0
    x = (mean
         + r.uniform(0, 60) * np.sin(2 * np.pi * r.uniform(0.04, 0.15) * t + r.uniform(0, 6))
         + r.uniform(0, 40) * np.sin(2 * np.pi * r.uniform(0.15, 0.40) * t)
         + r.normal(0, r.uniform(1, 30), n))
    if r.random() < 0.3:
        x = np.round(x / 3.90625) * 3.90625
    return np.clip(x, 300, 2000)


def modulated_rr(freq_hz, seconds=300.0, mean_ms=800.0, amp_ms=40.0):
    """RR intervals whose value follows a sinusoid in beat time."""
    out, t = [], 0.0
    while t < seconds:
        v = mean_ms + amp_ms * math.sin(2 * math.pi * freq_hz * t)
        out.append(v)
        t += v / 1000.0
    return np.array(out)
