"""Recording pairs to a baseline-normalised feature table."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .dataset import FEATURE_NAMES, LabeledDataset
from .errors import EmosensError, FormatError
from .hrv_features import baseline_normalize, extract_feature_vector
from .qrs_detect import DetectorConfig
from .signal_io import EcgRecording, Segment


@dataclass
class TrialFailure:
    subject_id: str
    trial_id: str
    segment: Optional[str]
    stage: Optional[str]
    error: str
    message: str

    def to_json(self) -> dict:
        return dict(self.__dict__)


def pair_segments(recordings: Iterable[EcgRecording]) -> List[Tuple[EcgRecording, EcgRecording]]:
    """Match every stimulus recording with the baseline of the same subject and trial.

    Pairs come out in the order the stimulus recordings appear.
    """
    baselines: Dict[tuple, EcgRecording] = {}
    stimuli: List[EcgRecording] = []
    for rec in recordings:
        key = (rec.subject_id, rec.trial_id)
        if rec.segment is Segment.BASELINE:
            baselines[key] = rec
        else:
            stimuli.append(rec)
    pairs = []
    for stim in stimuli:
        base = baselines.get((stim.subject_id, stim.trial_id))
        if base is None:
            raise FormatError(f"no baseline segment for {stim.subject_id}/{stim.trial_id}")
        pairs.append((stim, base))
    return pairs


def trial_features(stimulus: EcgRecording, baseline: Optional[EcgRecording],
                   config: DetectorConfig = DetectorConfig()) -> np.ndarray:
    """Feature row for one trial; baseline-normalised when a baseline is given."""
    stim_vec = extract_feature_vector(stimulus, config)
    if baseline is None:
        return stim_vec.as_array()
    base_vec = extract_feature_vector(baseline, config)
    return baseline_normalize(stim_vec, base_vec).as_array()


def build_feature_dataset(pairs: Iterable[Tuple[EcgRecording, Optional[EcgRecording]]],
                          config: DetectorConfig = DetectorConfig()
                          ) -> Tuple[LabeledDataset, List[TrialFailure]]:
    """Extract every trial, collecting per-trial failures instead of stopping.

    Recordings must carry manifest ``info`` with the emotion label.
    """
    rows, y, subj, trial, val, aro = [], [], [], [], [], []
    failures: List[TrialFailure] = []
    for stim, base in pairs:
        info = stim.info
        try:
            if info is None or info.emotion is None:
                raise FormatError("stimulus recording has no emotion label")
            rows.append(trial_features(stim, base, config))
        except EmosensError as exc:
            failures.append(TrialFailure(
                stim.subject_id, stim.trial_id, getattr(exc, "segment", None),
                exc.stage, type(exc).__name__, str(exc)))
            continue
        y.append(info.emotion.index)
        subj.append(stim.subject_id)
        trial.append(stim.trial_id)
        val.append(info.valence)
        aro.append(info.arousal)
    subj = np.asarray(subj, dtype=object)
    data = LabeledDataset(
        X=np.asarray(rows, dtype=float).reshape(-1, len(FEATURE_NAMES)),
        y=np.asarray(y, dtype=np.intp), groups=subj, subject_ids=subj,
        trial_ids=np.asarray(trial, dtype=object),
        valence=np.asarray(val, dtype=object), arousal=np.asarray(aro, dtype=object),
    )
    return data, failures
