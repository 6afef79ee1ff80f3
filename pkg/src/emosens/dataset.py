"""Labels, the canonical feature list, and the in-memory labelled dataset."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import LabelError, ShapeError

#: Version of the canonical feature list; bump whenever FEATURE_NAMES changes.
FEATURE_SET_VERSION = "1"

TIME_DOMAIN_FEATURES = (
    "mean_rr", "median_rr", "min_rr", "max_rr", "range_rr",
    "sdnn", "rmssd", "sdsd", "cvnn", "cvsd", "pnn20", "pnn50",
    "mean_hr", "std_hr", "min_hr", "max_hr",
)
GEOMETRIC_FEATURES = ("hti", "tinn")
FREQUENCY_FEATURES = (
    "vlf_power", "lf_power", "hf_power", "total_power",
    "lf_norm", "hf_norm", "lf_hf_ratio",
    "vlf_peak_hz", "lf_peak_hz", "hf_peak_hz",
)
POINCARE_FEATURES = ("sd1", "sd2", "sd2_sd1_ratio", "ellipse_area", "csi", "cvi")

FEATURE_NAMES = (
    TIME_DOMAIN_FEATURES + GEOMETRIC_FEATURES + FREQUENCY_FEATURES + POINCARE_FEATURES
)
N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 34


class EmotionLabel(str, enum.Enum):
    """The nine discrete target emotions. Member order fixes class indices."""

    CALMNESS = "calmness"
    SURPRISE = "surprise"
    AMUSEMENT = "amusement"
    FEAR = "fear"
    EXCITEMENT = "excitement"
    DISGUST = "disgust"
    HAPPINESS = "happiness"
    ANGER = "anger"
    SADNESS = "sadness"

    @classmethod
    def parse(cls, value: str) -> "EmotionLabel":
        try:
            return cls(value.strip().lower())
        except (ValueError, AttributeError):
            raise LabelError(f"unknown emotion label: {value!r}") from None

    @property
    def index(self) -> int:
        return EMOTIONS.index(self)


EMOTIONS = tuple(EmotionLabel)
N_CLASSES = len(EMOTIONS)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with integer class labels and group keys.

    ``y`` holds class indices into ``classes``. ``groups`` holds the key
    used by grouped cross-validation (the subject id by default).
    """

    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray
    feature_names: tuple = FEATURE_NAMES
    classes: tuple = tuple(e.value for e in EMOTIONS)
    subject_ids: Optional[np.ndarray] = None
    trial_ids: Optional[np.ndarray] = None
    valence: Optional[np.ndarray] = None
    arousal: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ShapeError(f"X must be 2-D, got shape {X.shape}")
        y = np.asarray(self.y, dtype=np.intp)
        groups = np.asarray(self.groups)
        if y.shape != (X.shape[0],) or groups.shape != (X.shape[0],):
            raise ShapeError("X, y and groups must have matching lengths")
        if X.shape[1] != len(self.feature_names):
            raise ShapeError(
                f"{X.shape[1]} feature columns but {len(self.feature_names)} names"
            )
        if y.size and (y.min() < 0 or y.max() >= len(self.classes)):
            raise LabelError("class index out of range")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "groups", groups)

    @classmethod
    def from_arrays(cls, X, y, groups=None, n_classes: Optional[int] = None,
                    feature_names: Optional[Sequence[str]] = None) -> "LabeledDataset":
        """Build a dataset from bare arrays (generic, non-ECG use)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=np.intp)
        if groups is None:
            groups = np.arange(len(y))
        if n_classes is None:
            n_classes = int(y.max()) + 1 if y.size else 1
        if feature_names is None:
            feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
        return cls(X=X, y=y, groups=np.asarray(groups),
                   feature_names=tuple(feature_names),
                   classes=tuple(str(i) for i in range(n_classes)))

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)

        def pick(a):
            return None if a is None else np.asarray(a)[idx]

        return replace(
            self, X=self.X[idx], y=self.y[idx], groups=self.groups[idx],
            subject_ids=pick(self.subject_ids), trial_ids=pick(self.trial_ids),
            valence=pick(self.valence), arousal=pick(self.arousal),
        )

    def with_features(self, X) -> "LabeledDataset":
        return replace(self, X=X)

    def with_labels(self, y) -> "LabeledDataset":
        return replace(self, y=y)
