"""Grouped cross-validation, metrics, grid search and learning curves.

Each fold follows the same pipeline: fit min-max scaling on the training
rows, transform both sides, train, predict the held-out rows, score.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .classifiers import MODEL_NAMES, resolve_hyperparams, train
from .dataset import LabeledDataset
from .errors import EmptyGrid, InputError, ShapeError, TooManyFolds
from .hrv_features import apply_minmax, fit_minmax

METRIC_NAMES = (
    "accuracy",
    "precision_macro", "recall_macro", "f1_macro",
    "precision_weighted", "recall_weighted", "f1_weighted",
)


# ---------------------------------------------------------------------------
# folds

@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of_group: Dict[Any, int]

    def splits(self, groups):
        """Yield ``(train_idx, test_idx)`` for each fold in order."""
        groups = list(groups)
        fold = np.array([self.fold_of_group[g] for g in groups])
        for f in range(self.k):
            yield np.flatnonzero(fold != f), np.flatnonzero(fold == f)


def group_k_fold(groups: Sequence, k: int) -> FoldAssignment:
    """Deterministic balanced assignment of whole groups to ``k`` folds.

    Groups are taken in order of decreasing size (first appearance breaks
    ties) and each goes to the fold holding the fewest groups so far, then
    the fewest rows, then the lowest index. Fold group counts therefore
    differ by at most one.
    """
    groups = list(groups)
    order: Dict[Any, int] = {}
    size: Dict[Any, int] = {}
    for i, g in enumerate(groups):
        order.setdefault(g, i)
        size[g] = size.get(g, 0) + 1
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise InputError(f"k must be an integer >= 2, got {k!r}")
    if k > len(size):
        raise TooManyFolds(f"k = {k} exceeds {len(size)} distinct groups")
    n_groups = [0] * k
    n_rows = [0] * k
    assignment = {}
    for g in sorted(size, key=lambda g: (-size[g], order[g])):
        f = min(range(k), key=lambda i: (n_groups[i], n_rows[i], i))
        assignment[g] = f
        n_groups[f] += 1
        n_rows[f] += size[g]
    return FoldAssignment(k=int(k), fold_of_group=assignment)


# ---------------------------------------------------------------------------
# metrics

@dataclass
class Metrics:
    accuracy: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    confusion: List[List[int]]
    runtime_s: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


def _safe_div(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.divide(a, b, out=np.zeros_like(a), where=b > 0)


def evaluate_predictions(y_true, y_pred, n_classes: int = 9, runtime_s: float = 0.0) -> Metrics:
    """Accuracy plus macro and support-weighted precision/recall/F1.

    Undefined ratios (0/0) count as 0. Macro averages run over the classes
    present in ``y_true``.
    """
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ShapeError("y_true and y_pred must be 1-D and equally long")
    if y_true.size == 0:
        raise ShapeError("cannot score zero predictions")
    n_classes = max(n_classes, int(y_true.max()) + 1, int(y_pred.max()) + 1)
    cm = confusion_matrix(y_true, y_pred, n_classes)
    tp = np.diag(cm).astype(float)
    support = cm.sum(axis=1).astype(float)
    predicted = cm.sum(axis=0).astype(float)
    precision = _safe_div(tp, predicted)
    recall = _safe_div(tp, support)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    present = support > 0
    weights = support / support.sum()
    return Metrics(
        accuracy=float(tp.sum() / cm.sum()),
        precision_macro=float(precision[present].mean()),
        recall_macro=float(recall[present].mean()),
        f1_macro=float(f1[present].mean()),
        precision_weighted=float((precision * weights).sum()),
        recall_weighted=float((recall * weights).sum()),
        f1_weighted=float((f1 * weights).sum()),
        confusion=cm.tolist(),
        runtime_s=float(runtime_s),
    )


# ---------------------------------------------------------------------------
# cross-validation

@dataclass
class SkippedPoint:
    """Learning-curve point that could not be evaluated."""

    fraction: float
    reason: str

    def to_json(self):
        return {"fraction": self.fraction, "skipped": True, "reason": self.reason}


@dataclass
class CurvePoint:
    fraction: float
    train_accuracy: float
    val_accuracy: float

    def to_json(self):
        return {"fraction": self.fraction, "train_accuracy": self.train_accuracy,
                "val_accuracy": self.val_accuracy}


@dataclass
class CvReport:
    model_tag: str
    hyperparams: Dict[str, Any]
    k: int
    per_fold: List[Metrics]
    curve_points: Optional[List[Union[CurvePoint, SkippedPoint]]] = None
    mean: Dict[str, float] = field(init=False)
    std: Dict[str, float] = field(init=False)

    def __post_init__(self):
        self.mean, self.std = {}, {}
        for name in METRIC_NAMES + ("runtime_s",):
            vals = np.array([getattr(m, name) for m in self.per_fold], dtype=float)
            self.mean[name] = float(vals.mean())
            self.std[name] = float(vals.std())

    @property
    def total_runtime_s(self) -> float:
        return float(sum(m.runtime_s for m in self.per_fold))

    def table_row(self) -> dict:
        """Weighted metrics in percent, in the layout of a results table."""
        return {
            "model": self.model_tag,
            "name": MODEL_NAMES.get(self.model_tag, self.model_tag),
            "accuracy": 100.0 * self.mean["accuracy"],
            "precision": 100.0 * self.mean["precision_weighted"],
            "recall": 100.0 * self.mean["recall_weighted"],
            "f_score": 100.0 * self.mean["f1_weighted"],
            "runtime_s": self.mean["runtime_s"],
        }

    def to_json(self) -> dict:
        doc = {
            "model_tag": self.model_tag,
            "hyperparams": self.hyperparams,
            "k": self.k,
            "per_fold": [m.to_json() for m in self.per_fold],
            "mean": self.mean,
            "std": self.std,
        }
        if self.curve_points is not None:
            doc["curve_points"] = [p.to_json() for p in self.curve_points]
        return doc


def n_workers() -> int:
    """Parallelism cap from ``EMOSENS_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("EMOSENS_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    workers = n_workers()
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fit_and_score(data, train_idx, test_idx, model_tag, hp, fold_id):
    start = time.perf_counter()
    train_set = data.subset(train_idx)
    test_set = data.subset(test_idx)
    scaler = fit_minmax(train_set, fitted_on=fold_id)
    train_set = apply_minmax(scaler, train_set)
    test_set = apply_minmax(scaler, test_set)
    model = train(model_tag, train_set, hp)
    pred = model.predict(test_set.X)
    elapsed = time.perf_counter() - start
    return model, train_set, evaluate_predictions(test_set.y, pred, data.n_classes, elapsed)


def cross_validate(data: LabeledDataset, model_tag: str, hp: Optional[dict] = None,
                   k: int = 10) -> CvReport:
    """Grouped k-fold evaluation of one model configuration."""
    hp = resolve_hyperparams(model_tag, hp)
    folds = list(group_k_fold(data.groups, k).splits(data.groups))

    def run(args):
        i, (tr, te) = args
        return _fit_and_score(data, tr, te, model_tag, hp, f"fold-{i}")[2]

    per_fold = _map(run, list(enumerate(folds)))
    return CvReport(model_tag=model_tag, hyperparams=hp, k=k, per_fold=per_fold)


def grid_search(data: LabeledDataset, model_tag: str, grid: Sequence[dict],
                k: int = 10) -> Tuple[dict, CvReport]:
    """Cross-validate every grid point; best mean accuracy wins, earliest on ties."""
    grid = list(grid)
    if not grid:
        raise EmptyGrid("hyperparameter grid is empty")
    for point in grid:
        resolve_hyperparams(model_tag, point)
    best = None
    for point in grid:
        report = cross_validate(data, model_tag, point, k)
        if best is None or report.mean["accuracy"] > best[1].mean["accuracy"]:
            best = (report.hyperparams, report)
    return best


def learning_curve(data: LabeledDataset, model_tag: str, hp: Optional[dict] = None,
                   fractions: Sequence[float] = (0.1, 0.25, 0.5, 0.75, 1.0),
                   k: int = 10, seed: int = 0) -> List[Union[CurvePoint, SkippedPoint]]:
    """Train and validation accuracy as the training groups are subsampled.

    For each fraction and fold, ``round(fraction * n_train_groups)`` whole
    training groups are drawn without replacement (seeded per fraction and
    fold); accuracies are averaged over folds. A fraction that leaves no
    group yields a :class:`SkippedPoint`.
    """
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise InputError(f"learning-curve fractions must be in (0, 1], got {f}")
    hp = resolve_hyperparams(model_tag, hp)
    folds = list(group_k_fold(data.groups, k).splits(data.groups))
    points = []
    for fi, frac in enumerate(fractions):
        train_acc, val_acc = [], []
        skipped = None
        for i, (tr, te) in enumerate(folds):
            tr_groups = list(dict.fromkeys(data.groups[tr].tolist()))
            n_keep = int(round(frac * len(tr_groups)))
            if n_keep < 1:
                skipped = SkippedPoint(frac, f"fold {i}: fraction keeps no training group")
                break
            if n_keep < len(tr_groups):
                rng = np.random.default_rng([seed, fi, i])
                keep = set(rng.choice(len(tr_groups), n_keep, replace=False).tolist())
                keep_groups = {tr_groups[j] for j in keep}
                tr = tr[np.array([g in keep_groups for g in data.groups[tr]])]
            model, scaled_train, metrics = _fit_and_score(
                data, tr, te, model_tag, hp, f"fold-{i}")
            train_acc.append(float(np.mean(model.predict(scaled_train.X) == scaled_train.y)))
            val_acc.append(metrics.accuracy)
        if skipped is not None:
            points.append(skipped)
        else:
            points.append(CurvePoint(float(frac), float(np.mean(train_acc)),
                                     float(np.mean(val_acc))))
    return points


def write_curve_csv(path, points) -> None:
    """``fraction,train_acc,val_acc``; skipped points leave the accuracies empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fraction", "train_acc", "val_acc"])
        for p in points:
            if isinstance(p, SkippedPoint):
                w.writerow([repr(p.fraction), "", ""])
            else:
                w.writerow([repr(p.fraction), repr(p.train_accuracy), repr(p.val_accuracy)])


def results_table(reports: Sequence[CvReport]) -> List[dict]:
    return [r.table_row() for r in reports]


def format_table(rows: Sequence[dict]) -> str:
    """Plain-text table: model, accuracy %, precision, recall, F-score, runtime."""
    header = f"{'Model':<24}{'Accuracy (%)':>14}{'Precision':>11}{'Recall':>9}{'F-score':>9}{'Runtime (s)':>13}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r['name']:<24}{r['accuracy']:>14.2f}{r['precision']:>11.2f}"
                     f"{r['recall']:>9.2f}{r['f_score']:>9.2f}{r['runtime_s']:>13.3f}")
    return "\n".join(lines)


def dumps_report(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False)
