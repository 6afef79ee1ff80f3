"""Synthetic ECG generation and the on-disk formats.

Three formats are handled here:

* ECG CSV: header ``sample_index,value_mv``, one sample per line.
* Manifest JSON: an array of trial objects pointing at ECG CSVs.
* Feature CSV: ``subject_id,trial_id,emotion,valence,arousal`` followed by
  the 34 canonical HRV feature columns (any order).
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .dataset import EMOTIONS, FEATURE_NAMES, EmotionLabel, LabeledDataset
from .errors import (FormatError, InvalidSchedule, IoError, ParseError,
                     SchemaError, UnsupportedRate)

MIN_RR_MS = 250.0
MIN_RATE_HZ = 100.0

META_COLUMNS = ("subject_id", "trial_id", "emotion", "valence", "arousal")
DROPPED_COLUMNS = ("video_name",)


class Segment(str, enum.Enum):
    BASELINE = "baseline"
    STIMULUS = "stimulus"


@dataclass(frozen=True)
class TrialManifest:
    subject_id: str
    trial_id: str
    segment: Segment
    sampling_rate_hz: float
    file: str
    emotion: Optional[EmotionLabel] = None
    valence: Optional[int] = None
    arousal: Optional[int] = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["segment"] = self.segment.value
        d["emotion"] = self.emotion.value if self.emotion is not None else None
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "TrialManifest":
        required = ("subject_id", "trial_id", "segment", "sampling_rate_hz", "file")
        allowed = set(required) | {"emotion", "valence", "arousal"}
        if not isinstance(obj, dict):
            raise FormatError("manifest entries must be objects")
        missing = [k for k in required if k not in obj]
        if missing:
            raise FormatError(f"manifest entry missing fields: {missing}")
        unknown = sorted(set(obj) - allowed)
        if unknown:
            raise FormatError(f"manifest entry has unknown fields: {unknown}")
        try:
            segment = Segment(obj["segment"])
        except ValueError:
            raise FormatError(f"bad segment {obj['segment']!r}") from None
        rate = obj["sampling_rate_hz"]
        if not isinstance(rate, (int, float)) or isinstance(rate, bool) or rate <= 0:
            raise FormatError(f"bad sampling_rate_hz {rate!r}")
        emotion = obj.get("emotion")
        if emotion is not None:
            emotion = EmotionLabel.parse(emotion)
        return cls(
            subject_id=str(obj["subject_id"]),
            trial_id=str(obj["trial_id"]),
            segment=segment,
            sampling_rate_hz=float(rate),
            file=str(obj["file"]),
            emotion=emotion,
            valence=_check_score(obj.get("valence"), "valence", FormatError),
            arousal=_check_score(obj.get("arousal"), "arousal", FormatError),
        )


@dataclass(frozen=True)
class EcgRecording:
    """A single-lead ECG segment in millivolts.

    ``ground_truth_beats`` holds exact R-wave times in seconds and is only
    set by :func:`generate_synthetic_ecg`.
    """

    samples: np.ndarray
    sampling_rate_hz: float
    subject_id: str = ""
    trial_id: str = ""
    segment: Segment = Segment.STIMULUS
    ground_truth_beats: Optional[np.ndarray] = None
    info: Optional[TrialManifest] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.sampling_rate_hz > 0:
            raise UnsupportedRate(f"sampling rate must be positive, got {self.sampling_rate_hz}")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.ground_truth_beats is not None:
            beats = np.asarray(self.ground_truth_beats, dtype=float)
            if beats.size > 1 and np.any(np.diff(beats) <= 0):
                raise InvalidSchedule("ground-truth beats must be strictly increasing")
            object.__setattr__(self, "ground_truth_beats", beats)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sampling_rate_hz


# ---------------------------------------------------------------------------
# synthetic ECG

# (name, offset from R [s], gaussian width [s], amplitude [mV])
PQRST_TEMPLATE = (
    ("P", -0.200, 0.025, 0.15),
    ("Q", -0.030, 0.010, -0.15),
    ("R", 0.000, 0.012, 1.00),
    ("S", 0.030, 0.010, -0.25),
    ("T", 0.280, 0.045, 0.30),
)
R_AMPLITUDE_MV = 1.0
_TEMPLATE_REACH_S = 0.5


def _template_amplitudes():
    # R amplitude is compensated so the summed complex is exactly R_AMPLITUDE_MV
    # at the R instant.
    others = sum(a * math.exp(-0.5 * (o / w) ** 2)
                 for name, o, w, a in PQRST_TEMPLATE if name != "R")
    return [(o, w, (R_AMPLITUDE_MV - others) if name == "R" else a)
            for name, o, w, a in PQRST_TEMPLATE]


def generate_synthetic_ecg(rr_schedule_ms: Sequence[float], sampling_rate_hz: float = 256.0,
                           noise_std_mv: float = 0.0, seed: int = 0,
                           subject_id: str = "synthetic", trial_id: str = "0",
                           segment: Segment = Segment.STIMULUS) -> EcgRecording:
    """Render one PQRST complex per scheduled beat.

    The first R wave sits at half the first interval and beat ``k + 1``
    follows beat ``k`` by ``rr_schedule_ms[k]``. The recording ends half the
    last interval after the last beat, so a constant schedule of 60 beats at
    1000 ms lasts exactly 60 s.

    Parameters
    ----------
    rr_schedule_ms : sequence of float
        Inter-beat intervals, each at least 250 ms.
    sampling_rate_hz : float
        At least 100 Hz.
    noise_std_mv : float
        Standard deviation of additive white Gaussian noise.
    seed : int
        Seed for the noise generator.

    Returns
    -------
    EcgRecording
        With ``ground_truth_beats`` set to the exact R times in seconds.
    """
    rr = np.asarray(rr_schedule_ms, dtype=float)
    if rr.ndim != 1 or rr.size == 0:
        raise InvalidSchedule("schedule must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(rr)) or np.any(rr < MIN_RR_MS):
        raise InvalidSchedule(f"every RR interval must be >= {MIN_RR_MS:g} ms")
    if not sampling_rate_hz >= MIN_RATE_HZ:
        raise UnsupportedRate(f"sampling rate must be >= {MIN_RATE_HZ:g} Hz")
    if noise_std_mv < 0:
        raise ValueError("noise_std_mv must be non-negative")

    fs = float(sampling_rate_hz)
    beats = (np.cumsum(rr) - rr + rr[0] / 2.0) / 1000.0
    n = int(round((beats[-1] + rr[-1] / 2000.0) * fs))
    t = np.arange(n) / fs
    x = np.zeros(n)
    reach = int(math.ceil(_TEMPLATE_REACH_S * fs))
    waves = _template_amplitudes()
    for tb in beats:
        c = int(round(tb * fs))
        lo, hi = max(0, c - reach), min(n, c + reach + 1)
        dt = t[lo:hi] - tb
        for off, width, amp in waves:
            x[lo:hi] += amp * np.exp(-0.5 * ((dt - off) / width) ** 2)
    if noise_std_mv > 0:
        x += np.random.default_rng(seed).normal(0.0, noise_std_mv, n)
    return EcgRecording(samples=x, sampling_rate_hz=fs, subject_id=subject_id,
                        trial_id=trial_id, segment=segment, ground_truth_beats=beats)


# ---------------------------------------------------------------------------
# ECG CSV + manifest

def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_ecg_csv(path, samples: Iterable[float]) -> None:
    lines = ["sample_index,value_mv"]
    lines += [f"{i},{float(v)!r}" for i, v in enumerate(samples)]
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_ecg_csv(path) -> np.ndarray:
    path = Path(path)
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot open ECG file {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["sample_index", "value_mv"]:
            raise FormatError(f"{path}: header must be 'sample_index,value_mv'")
        idx, vals = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                idx.append(int(row[0]))
                vals.append(float(row[1]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric cell") from None
    idx = np.asarray(idx)
    if idx.size > 1 and np.any(np.diff(idx) <= 0):
        raise FormatError(f"{path}: sample_index is not strictly increasing")
    return np.asarray(vals, dtype=float)


def write_manifest(path, entries: Sequence[TrialManifest]) -> None:
    _check_unique(entries)
    text = json.dumps([e.to_json() for e in entries], indent=1)
    atomic_write_text(Path(path), text + "\n")


def read_manifest(manifest_path) -> List[TrialManifest]:
    path = Path(manifest_path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc.strerror}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, list):
        raise FormatError(f"{path}: manifest must be a JSON array")
    entries = [TrialManifest.from_json(obj) for obj in data]
    _check_unique(entries)
    return entries


def _check_unique(entries):
    seen = set()
    for e in entries:
        key = (e.subject_id, e.trial_id, e.segment)
        if key in seen:
            raise FormatError(f"duplicate manifest entry {key}")
        seen.add(key)


def load_ecg_csv(manifest_path) -> List[EcgRecording]:
    """Load every recording referenced by a manifest.

    Paths inside the manifest are resolved relative to the manifest's
    directory.
    """
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    return [load_recording(root, e) for e in read_manifest(manifest_path)]


def load_recording(root, entry: TrialManifest) -> EcgRecording:
    samples = read_ecg_csv(Path(root) / entry.file)
    return EcgRecording(samples=samples, sampling_rate_hz=entry.sampling_rate_hz,
                        subject_id=entry.subject_id, trial_id=entry.trial_id,
                        segment=entry.segment, info=entry)


# ---------------------------------------------------------------------------
# feature CSV

def _check_score(value, name, exc_type):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise exc_type(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if not 1 <= value <= 5:
        raise FormatError(f"{name} must be within [1, 5], got {value}")
    return value


def _parse_score(cell: str, name: str, where: str):
    cell = cell.strip()
    if cell == "":
        return None
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"{where}: {name} is not numeric: {cell!r}") from None
    return _check_score(value, name, ParseError)


def load_feature_csv(path) -> LabeledDataset:
    """Read a feature table into a dataset grouped by subject.

    Feature columns may appear in any order; they are returned in canonical
    order. A ``video_name`` column is dropped without notice.
    """
    path = Path(path)
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot open feature file {path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        header = [h.strip() for h in header]
        missing = [c for c in META_COLUMNS + FEATURE_NAMES if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        known = set(META_COLUMNS) | set(FEATURE_NAMES) | set(DROPPED_COLUMNS)
        unknown = [c for c in header if c not in known]
        if unknown:
            raise SchemaError(f"{path}: unexpected columns {unknown}")
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}: duplicate column names")
        col = {name: i for i, name in enumerate(header)}
        feat_cols = [col[f] for f in FEATURE_NAMES]

        X, y, subj, trial, val, aro = [], [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            where = f"{path}:{lineno}"
            try:
                X.append([float(row[i]) for i in feat_cols])
            except ValueError:
                raise ParseError(f"{where}: non-numeric feature cell") from None
            y.append(EmotionLabel.parse(row[col["emotion"]]).index)
            subj.append(row[col["subject_id"]])
            trial.append(row[col["trial_id"]])
            val.append(_parse_score(row[col["valence"]], "valence", where))
            aro.append(_parse_score(row[col["arousal"]], "arousal", where))

    X = np.asarray(X, dtype=float).reshape(-1, len(FEATURE_NAMES))
    subj = np.asarray(subj, dtype=object)
    return LabeledDataset(
        X=X, y=np.asarray(y, dtype=np.intp), groups=subj,
        subject_ids=subj, trial_ids=np.asarray(trial, dtype=object),
        valence=np.asarray(val, dtype=object), arousal=np.asarray(aro, dtype=object),
    )


def write_feature_csv(path, data: LabeledDataset) -> None:
    """Write a dataset in the feature-CSV layout (canonical column order)."""
    if tuple(data.feature_names) != FEATURE_NAMES:
        raise SchemaError("only datasets with the canonical 34 features can be written")
    n = len(data)

    def column(a, default=""):
        return [default] * n if a is None else list(a)

    subj = column(data.subject_ids)
    trial = column(data.trial_ids)
    val = column(data.valence, None)
    aro = column(data.arousal, None)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(META_COLUMNS + FEATURE_NAMES)
    for i in range(n):
        cells = [
            str(subj[i]), str(trial[i]), EMOTIONS[data.y[i]].value,
            "" if val[i] is None else str(int(val[i])),
            "" if aro[i] is None else str(int(aro[i])),
        ]
        cells += [repr(float(v)) for v in data.X[i]]
        writer.writerow(cells)
    atomic_write_text(Path(path), buf.getvalue())
