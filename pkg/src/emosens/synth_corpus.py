"""Synthetic emotion-elicitation corpus with the layout of a film-clip ECG study.

Each subject watches 18 clips, two per emotion, and contributes a resting
baseline segment and a stimulus segment per clip. RR dynamics are a
sinusoidal LF (~0.1 Hz) plus HF (~0.25 Hz) modulation around a mean
interval, plus white jitter:

* the subject draws a resting heart rate and resting LF/HF amplitudes;
* the baseline segment uses the resting values;
* the stimulus segment shifts the heart rate and rescales the LF and HF
  amplitudes according to the clip's emotion (a 3 x 3 grid of heart-rate
  shift x autonomic pattern).

Subtracting baseline features from stimulus features therefore removes most
of the per-subject offset and leaves the emotion effect.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .dataset import EMOTIONS, EmotionLabel
from .signal_io import (EcgRecording, Segment, TrialManifest,
                        generate_synthetic_ecg, write_ecg_csv, write_manifest)

N_SUBJECTS = 23
CLIPS_PER_EMOTION = 2
SAMPLING_RATE_HZ = 256.0
DURATION_S = 66.0
NOISE_STD_MV = 0.02
QUANTUM_MV = 0.001  # 1 uV resolution on disk

HR_LOW, HR_MID, HR_HIGH = -6.0, 0.0, 6.0
PARASYMPATHETIC = (0.5, 2.0)  # (LF gain, HF gain)
BALANCED = (1.0, 1.0)
SYMPATHETIC = (2.0, 0.5)

# emotion -> (heart-rate shift in bpm, (LF gain, HF gain))
EMOTION_DYNAMICS = {
    EmotionLabel.CALMNESS: (HR_LOW, PARASYMPATHETIC),
    EmotionLabel.SADNESS: (HR_LOW, BALANCED),
    EmotionLabel.DISGUST: (HR_LOW, SYMPATHETIC),
    EmotionLabel.HAPPINESS: (HR_MID, PARASYMPATHETIC),
    EmotionLabel.AMUSEMENT: (HR_MID, BALANCED),
    EmotionLabel.SURPRISE: (HR_MID, SYMPATHETIC),
    EmotionLabel.EXCITEMENT: (HR_HIGH, PARASYMPATHETIC),
    EmotionLabel.ANGER: (HR_HIGH, BALANCED),
    EmotionLabel.FEAR: (HR_HIGH, SYMPATHETIC),
}

# typical self-assessment scores (valence, arousal) per emotion
EMOTION_SCORES = {
    EmotionLabel.CALMNESS: (4, 1),
    EmotionLabel.SADNESS: (2, 2),
    EmotionLabel.DISGUST: (2, 3),
    EmotionLabel.HAPPINESS: (5, 3),
    EmotionLabel.AMUSEMENT: (4, 3),
    EmotionLabel.SURPRISE: (3, 4),
    EmotionLabel.EXCITEMENT: (4, 5),
    EmotionLabel.ANGER: (1, 4),
    EmotionLabel.FEAR: (2, 5),
}

# one fixed clip order shared by every subject
CLIP_ORDER = (
    EmotionLabel.CALMNESS, EmotionLabel.SURPRISE, EmotionLabel.AMUSEMENT,
    EmotionLabel.FEAR, EmotionLabel.EXCITEMENT, EmotionLabel.DISGUST,
    EmotionLabel.HAPPINESS, EmotionLabel.ANGER, EmotionLabel.SADNESS,
    EmotionLabel.CALMNESS, EmotionLabel.AMUSEMENT, EmotionLabel.HAPPINESS,
    EmotionLabel.FEAR, EmotionLabel.SURPRISE, EmotionLabel.ANGER,
    EmotionLabel.SADNESS, EmotionLabel.DISGUST, EmotionLabel.EXCITEMENT,
)


@dataclass(frozen=True)
class CorpusConfig:
    n_subjects: int = N_SUBJECTS
    seed: int = 42
    duration_s: float = DURATION_S
    sampling_rate_hz: float = SAMPLING_RATE_HZ
    noise_std_mv: float = NOISE_STD_MV
    jitter_ms: float = 6.0
    trial_hr_std_bpm: float = 0.6
    trial_gain_std: float = 0.10


@dataclass(frozen=True)
class SubjectProfile:
    rest_hr_bpm: float
    lf_amp_ms: float
    hf_amp_ms: float
    lf_hz: float
    hf_hz: float


def subject_profile(cfg: CorpusConfig, subject: int) -> SubjectProfile:
    rng = np.random.default_rng([cfg.seed, subject])
    return SubjectProfile(
        rest_hr_bpm=float(rng.uniform(58.0, 88.0)),
        lf_amp_ms=float(rng.uniform(15.0, 35.0)),
        hf_amp_ms=float(rng.uniform(10.0, 30.0)),
        lf_hz=float(rng.uniform(0.08, 0.12)),
        hf_hz=float(rng.uniform(0.22, 0.30)),
    )


def rr_schedule(duration_s: float, mean_rr_ms: float, lf_amp: float, hf_amp: float,
                lf_hz: float, hf_hz: float, jitter_ms: float,
                rng: np.random.Generator) -> np.ndarray:
    """Beat-by-beat RR intervals covering ``duration_s`` seconds."""
    phase_lf, phase_hf = rng.uniform(0.0, 2.0 * np.pi, size=2)
    rr: List[float] = []
    t = 0.0
    while t < duration_s:
        value = (mean_rr_ms
                 + lf_amp * np.sin(2.0 * np.pi * lf_hz * t + phase_lf)
                 + hf_amp * np.sin(2.0 * np.pi * hf_hz * t + phase_hf)
                 + rng.normal(0.0, jitter_ms))
        value = float(np.clip(value, 320.0, 1900.0))
        rr.append(value)
        t += value / 1000.0
    return np.asarray(rr)


def trial_recording(cfg: CorpusConfig, subject: int, clip: int,
                    segment: Segment) -> EcgRecording:
    """Render one segment; seeded by (seed, subject, clip, segment) only."""
    prof = subject_profile(cfg, subject)
    emotion = CLIP_ORDER[clip]
    rng = np.random.default_rng([cfg.seed, subject, clip, 0 if segment is Segment.BASELINE else 1])
    hr = prof.rest_hr_bpm
    lf, hf = prof.lf_amp_ms, prof.hf_amp_ms
    if segment is Segment.STIMULUS:
        shift, (lf_gain, hf_gain) = EMOTION_DYNAMICS[emotion]
        hr += shift + rng.normal(0.0, cfg.trial_hr_std_bpm)
        lf *= lf_gain * (1.0 + rng.normal(0.0, cfg.trial_gain_std))
        hf *= hf_gain * (1.0 + rng.normal(0.0, cfg.trial_gain_std))
    schedule = rr_schedule(cfg.duration_s, 60000.0 / hr, lf, hf, prof.lf_hz, prof.hf_hz,
                           cfg.jitter_ms, rng)
    noise_seed = int(rng.integers(0, 2**31 - 1))
    rec = generate_synthetic_ecg(schedule, cfg.sampling_rate_hz, cfg.noise_std_mv, noise_seed,
                                 subject_id=subject_id(subject), trial_id=trial_id(clip),
                                 segment=segment)
    quantised = np.round(rec.samples / QUANTUM_MV) * QUANTUM_MV
    return EcgRecording(samples=quantised, sampling_rate_hz=rec.sampling_rate_hz,
                        subject_id=rec.subject_id, trial_id=rec.trial_id, segment=segment,
                        ground_truth_beats=rec.ground_truth_beats,
                        info=manifest_entry(cfg, subject, clip, segment))


def subject_id(subject: int) -> str:
    return f"S{subject + 1:02d}"


def trial_id(clip: int) -> str:
    return f"clip{clip + 1:02d}"


def scores_for(cfg: CorpusConfig, subject: int, clip: int) -> Tuple[int, int]:
    rng = np.random.default_rng([cfg.seed, subject, clip, 2])
    v, a = EMOTION_SCORES[CLIP_ORDER[clip]]
    jv, ja = rng.integers(-1, 2, size=2)
    return int(np.clip(v + jv, 1, 5)), int(np.clip(a + ja, 1, 5))


def manifest_entry(cfg: CorpusConfig, subject: int, clip: int, segment: Segment) -> TrialManifest:
    sid, tid = subject_id(subject), trial_id(clip)
    stim = segment is Segment.STIMULUS
    valence, arousal = scores_for(cfg, subject, clip) if stim else (None, None)
    return TrialManifest(
        subject_id=sid, trial_id=tid, segment=segment,
        sampling_rate_hz=cfg.sampling_rate_hz,
        file=f"ecg/{sid}/{tid}_{segment.value}.csv",
        emotion=CLIP_ORDER[clip] if stim else None,
        valence=valence, arousal=arousal,
    )


def iter_corpus(cfg: CorpusConfig = CorpusConfig()) -> Iterator[EcgRecording]:
    """All recordings, subject by subject, baseline before stimulus."""
    for s in range(cfg.n_subjects):
        for c in range(len(CLIP_ORDER)):
            for seg in (Segment.BASELINE, Segment.STIMULUS):
                yield trial_recording(cfg, s, c, seg)


def write_corpus(out_dir, cfg: CorpusConfig = CorpusConfig()) -> Path:
    """Write ECG CSVs plus ``manifest.json`` under ``out_dir``; returns the manifest path."""
    out_dir = Path(out_dir)
    entries = []
    for rec in iter_corpus(cfg):
        write_ecg_csv(out_dir / rec.info.file, rec.samples)
        entries.append(rec.info)
    manifest = out_dir / "manifest.json"
    write_manifest(manifest, entries)
    return manifest


assert sorted(CLIP_ORDER) == sorted(list(EMOTIONS) * CLIPS_PER_EMOTION)


SHIPPED_FEATURES = "synthetic_features_seed42.csv"


def shipped_features_path() -> Path:
    """Feature table of the default corpus (seed 42), shipped with the package."""
    return Path(__file__).with_name("data") / SHIPPED_FEATURES


def load_shipped_features():
    from .signal_io import load_feature_csv
    return load_feature_csv(shipped_features_path())
