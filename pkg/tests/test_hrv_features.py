import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emosens.dataset import FEATURE_NAMES, LabeledDataset
from emosens.errors import (EmptyFit, InsufficientData, InsufficientSignal,
                            InsufficientSpan)
from emosens.hrv_features import (HrvFeatureVector, apply_minmax,
                                  baseline_normalize, extract_feature_vector,
                                  fit_minmax, frequency_domain_features,
                                  geometric_features, poincare_features,
                                  resample_rr, rr_feature_vector, rr_psd,
                                  time_domain_features)
from emosens.qrs_detect import RrSeries
from emosens.signal_io import EcgRecording, generate_synthetic_ecg

from oracles import naive_features, naive_geometric
from rr_series import modulated_rr, random_rr


def rel_close(a, b, rel=1e-9):
    return a == b or abs(a - b) <= rel * max(abs(a), abs(b))


# ---------------------------------------------------------------------------
# time domain

def test_constant_rr():
    f = time_domain_features([800.0] * 50)
    assert f["sdnn"] == 0 and f["rmssd"] == 0 and f["pnn50"] == 0
    assert f["mean_hr"] == pytest.approx(75.0)
    assert f["hti"] == 1.0 and f["tinn"] > 0


def test_three_interval_hand_values():
    f = time_domain_features([800.0, 850.0, 800.0], geometric=False)
    assert f["rmssd"] == pytest.approx(50.0, abs=1e-12)
    assert f["sdsd"] == pytest.approx(50.0, abs=1e-12)
    assert f["pnn20"] == 100.0 and f["pnn50"] == 0.0  # |d| must exceed 50
    assert f["median_rr"] == 800.0 and f["range_rr"] == 50.0


def test_time_domain_minimum_lengths():
    with pytest.raises(InsufficientData):
        time_domain_features([800.0])
    with pytest.raises(InsufficientData):
        time_domain_features([800.0] * 9)
    assert "hti" not in time_domain_features([800.0] * 9, geometric=False)


def test_tinn_for_a_triangle():
    # histogram 1,2,3,4,3,2,1 on 7.8125 ms bins: the best base with edges on the
    # bin grid runs from the left edge of the first bin to the right edge of the last
    bins = [1, 2, 3, 4, 3, 2, 1]
    x = np.concatenate([np.full(c, (100 + j + 0.5) * 7.8125) for j, c in enumerate(bins)])
    g = geometric_features(x)
    assert g["hti"] == pytest.approx(16 / 4)
    assert g["tinn"] == pytest.approx(7 * 7.8125)
    assert g == pytest.approx(naive_geometric(x))


@given(st.lists(st.integers(600, 900), min_size=10, max_size=60))
def test_geometric_matches_joint_search(xs):
    x = np.asarray(xs, dtype=float)
    got = geometric_features(x)
    exp = naive_geometric(x)
    assert rel_close(got["hti"], exp["hti"]) and rel_close(got["tinn"], exp["tinn"])


# ---------------------------------------------------------------------------
# frequency domain

def test_lf_modulation_peak():
    f = frequency_domain_features(RrSeries.from_intervals(modulated_rr(0.10)))
    assert f["lf_peak_hz"] == pytest.approx(0.10, abs=0.01)
    assert f["lf_hf_ratio"] > 2


def test_hf_modulation_peak():
    f = frequency_domain_features(RrSeries.from_intervals(modulated_rr(0.25)))
    assert f["hf_peak_hz"] == pytest.approx(0.25, abs=0.01)
    assert f["lf_hf_ratio"] < 0.5


def test_constant_rr_has_no_band_power():
    mod = frequency_domain_features(RrSeries.from_intervals(modulated_rr(0.10)))
    flat = frequency_domain_features(RrSeries.from_intervals([800.0] * 100))
    assert flat["lf_power"] < 1e-6 * mod["lf_power"]
    assert flat["hf_power"] < 1e-6 * mod["lf_power"]


def test_short_span():
    with pytest.raises(InsufficientSpan):
        frequency_domain_features(RrSeries.from_intervals([800.0] * 70))


def test_spectral_power_matches_variance():
    # Parseval: summed density times bin width recovers the window-weighted
    # mean square of the resampled series
    rr = RrSeries.from_intervals(modulated_rr(0.2, seconds=64.0, amp_ms=30.0))
    freqs, psd = rr_psd(rr)
    _, v = resample_rr(rr)
    v = v - v.mean()
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(v.size) / v.size)
    assert v.size <= 256  # a single Welch segment
    expected = np.sum((v * w) ** 2) / np.sum(w ** 2)
    assert psd.sum() * (freqs[1] - freqs[0]) == pytest.approx(expected, rel=1e-9)
    f = frequency_domain_features(rr)
    assert f["hf_power"] > 0.99 * f["total_power"]


@given(st.integers(0, 2**32 - 1))
def test_spectral_invariants(seed):
    x = random_rr(np.random.default_rng(seed))
    f = frequency_domain_features(RrSeries.from_intervals(x))
    for k in ("vlf_power", "lf_power", "hf_power", "total_power"):
        assert f[k] >= 0
    if f["lf_power"] + f["hf_power"] > 0:
        assert abs(f["lf_norm"] + f["hf_norm"] - 100.0) <= 1e-9
    assert 0.04 <= f["lf_peak_hz"] < 0.15 and 0.15 <= f["hf_peak_hz"] < 0.40


# ---------------------------------------------------------------------------
# Poincare

def test_poincare_constant():
    p = poincare_features([800.0] * 20)
    assert p["sd1"] == 0 and p["sd2"] == 0 and p["ellipse_area"] == 0
    assert p["csi"] == 0 and p["cvi"] == 0


def test_poincare_hand_value():
    p = poincare_features([800.0, 850.0, 800.0])
    assert p["sd1"] == pytest.approx(50 / math.sqrt(2), abs=1e-12)
    assert p["ellipse_area"] == pytest.approx(math.pi * p["sd1"] * p["sd2"])
    with pytest.raises(InsufficientData):
        poincare_features([800.0, 850.0])


@given(st.lists(st.floats(300.0, 2000.0), min_size=3, max_size=200))
def test_poincare_variance_identity(xs):
    x = np.asarray(xs)
    p = poincare_features(x)
    a, b = x[:-1], x[1:]
    expected = np.var(a) + np.var(b)
    assert abs(p["sd1"] ** 2 + p["sd2"] ** 2 - expected) <= 1e-9 * max(expected, 1.0)
    assert p["sd1"] >= 0 and p["sd2"] >= 0


# ---------------------------------------------------------------------------
# full vector

def test_features_match_naive_oracle():
    r = np.random.default_rng(77)
    for _ in range(100):
        x = random_rr(r)
        rr = RrSeries.from_intervals(x, start_s=r.uniform(0, 5))
        got = rr_feature_vector(rr)
        exp = naive_features(x, rr.onset_times_s)
        bad = [k for k in FEATURE_NAMES if not rel_close(got[k], exp[k])]
        assert not bad, bad


def test_vector_order_and_round_trip():
    v = rr_feature_vector(RrSeries.from_intervals(random_rr(np.random.default_rng(1))))
    assert list(v) == list(FEATURE_NAMES) and len(v) == 34
    assert HrvFeatureVector.from_array(v.as_array()) == v


def test_extract_75_bpm():
    rec = generate_synthetic_ecg([800.0] * 113, 256.0)
    assert rec.duration_s >= 90
    v = extract_feature_vector(rec)
    assert v["mean_hr"] == pytest.approx(75.0, abs=0.5)


def test_extract_short_recording_has_stage():
    rec = generate_synthetic_ecg([1000.0] * 4, 256.0)
    with pytest.raises(InsufficientSignal) as info:
        extract_feature_vector(rec)
    assert info.value.stage == "detect_r_peaks"


def test_extract_deterministic():
    rr = modulated_rr(0.1, seconds=70)
    a = extract_feature_vector(generate_synthetic_ecg(rr, 256.0, 0.05, seed=2))
    b = extract_feature_vector(generate_synthetic_ecg(rr, 256.0, 0.05, seed=2))
    np.testing.assert_array_equal(a.as_array(), b.as_array())


def test_time_shift_invariance():
    rr = modulated_rr(0.12, seconds=75)
    rec = generate_synthetic_ecg(rr, 256.0, 0.0)
    base = extract_feature_vector(rec).as_array()
    for pad_s in (0.5, 3.0, 7.25):
        x = np.concatenate([np.zeros(int(pad_s * 256)), rec.samples])
        shifted = extract_feature_vector(EcgRecording(x, 256.0)).as_array()
        np.testing.assert_allclose(shifted, base, rtol=1e-6, atol=1e-9)


# ---------------------------------------------------------------------------
# normalisation + scaling

def _vec(**over):
    values = dict.fromkeys(FEATURE_NAMES, 1.0)
    values.update(over)
    return HrvFeatureVector(values)


def test_baseline_normalize():
    v = _vec(rmssd=40.0)
    assert np.all(baseline_normalize(v, v).as_array() == 0)
    assert baseline_normalize(_vec(rmssd=40.0), _vec(rmssd=30.0))["rmssd"] == 10.0


def _ds(X):
    X = np.asarray(X, dtype=float)
    return LabeledDataset.from_arrays(X, np.zeros(len(X), dtype=int))


def test_minmax_on_train():
    r = np.random.default_rng(0)
    X = r.normal(size=(20, 34))
    X[:, 3] = 7.0
    train = _ds(X)
    params = fit_minmax(train, fitted_on="fold-0")
    out = apply_minmax(params, train).X
    np.testing.assert_allclose(np.delete(out.min(axis=0), 3), 0.0)
    np.testing.assert_allclose(np.delete(out.max(axis=0), 3), 1.0)
    assert np.all(out[:, 3] == 0.0)
    assert params.fitted_on == "fold-0"
    assert np.all(params.maxs >= params.mins)


def test_minmax_clamps_unseen():
    params = fit_minmax(_ds([[0.0] * 34, [1.0] * 34]))
    out = apply_minmax(params, _ds([[2.0] * 34, [-1.0] * 34])).X
    assert np.all(out[0] == 1.0) and np.all(out[1] == 0.0)


def test_minmax_empty():
    with pytest.raises(EmptyFit):
        fit_minmax(_ds(np.zeros((0, 34))))


@given(st.integers(0, 2**32 - 1))
def test_scaler_ignores_test_rows(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(30, 34))
    train_idx = r.permutation(30)[:20]
    before = fit_minmax(_ds(X).subset(train_idx))
    X2 = X.copy()
    test = np.setdiff1d(np.arange(30), train_idx)
    X2[test] = r.normal(scale=100.0, size=(test.size, 34))
    after = fit_minmax(_ds(X2).subset(train_idx))
    assert before.mins.tobytes() == after.mins.tobytes()
    assert before.maxs.tobytes() == after.maxs.tobytes()
