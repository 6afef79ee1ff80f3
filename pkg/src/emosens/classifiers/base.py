"""Shared model plumbing: hyperparameter validation, array trees, predict, JSON."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..errors import FormatError, InvalidHyperParams, ShapeError

MODEL_FORMAT = "emosens-model"
MODEL_FORMAT_VERSION = "1.0"


def _int_at_least(lo):
    def check(v):
        return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= lo
    check.desc = f"integer >= {lo}"
    return check


def _optional(check):
    def opt(v):
        return v is None or check(v)
    opt.desc = f"null or {check.desc}"
    return opt


def _real_in(lo, hi, lo_open=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float, np.floating)):
            return False
        return (lo < v if lo_open else lo <= v) and v <= hi
    check.desc = f"real in {'(' if lo_open else '['}{lo}, {hi}]"
    return check


def _max_features(v):
    return v is None or v in ("sqrt", "all") or _int_at_least(1)(v)


_max_features.desc = "null, 'sqrt', 'all' or integer >= 1"


def _is_bool(v):
    return isinstance(v, bool)


_is_bool.desc = "boolean"

# tag -> {key: (default, validator)}
HYPERPARAM_SPECS: Dict[str, Dict[str, tuple]] = {
    "dt": {
        "max_depth": (None, _optional(_int_at_least(1))),
        "min_samples_leaf": (1, _int_at_least(1)),
        "min_samples_split": (2, _int_at_least(2)),
        "max_features": (None, _max_features),
        "seed": (0, _int_at_least(0)),
    },
    "rf": {
        "n_trees": (100, _int_at_least(1)),
        "max_depth": (None, _optional(_int_at_least(1))),
        "min_samples_leaf": (1, _int_at_least(1)),
        "min_samples_split": (2, _int_at_least(2)),
        "max_features": ("sqrt", _max_features),
        "bootstrap": (True, _is_bool),
        "seed": (0, _int_at_least(0)),
    },
    "gbdt": {
        "n_rounds": (100, _int_at_least(1)),
        "learning_rate": (0.1, _real_in(0.0, 1.0, lo_open=True)),
        "max_leaves": (15, _int_at_least(2)),
        "max_depth": (None, _optional(_int_at_least(1))),
        "min_samples_leaf": (5, _int_at_least(1)),
        "n_bins": (255, _int_at_least(2)),
        "lambda_l2": (1.0, _real_in(0.0, math.inf)),
        "min_gain": (0.0, _real_in(0.0, math.inf)),
        "subsample": (1.0, _real_in(0.0, 1.0, lo_open=True)),
        "colsample": (1.0, _real_in(0.0, 1.0, lo_open=True)),
        "seed": (0, _int_at_least(0)),
    },
    "adaboost": {
        "n_rounds": (50, _int_at_least(1)),
        "seed": (0, _int_at_least(0)),
    },
    "knn": {
        "k": (5, _int_at_least(1)),
    },
    "gnb": {
        "var_floor": (1e-9, _real_in(0.0, math.inf, lo_open=True)),
    },
}

MODEL_NAMES = {
    "dt": "Decision Tree",
    "rf": "Random Forest",
    "gbdt": "Gradient Boosted Trees",
    "adaboost": "AdaBoost",
    "knn": "Nearest Neighbours",
    "gnb": "Naive Bayes",
}


def resolve_hyperparams(tag: str, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Merge ``overrides`` into the defaults for ``tag`` and validate ranges."""
    if tag not in HYPERPARAM_SPECS:
        raise InvalidHyperParams(f"unknown model tag {tag!r}")
    spec = HYPERPARAM_SPECS[tag]
    overrides = dict(overrides or {})
    unknown = sorted(set(overrides) - set(spec))
    if unknown:
        raise InvalidHyperParams(f"{tag}: unknown hyperparameters {unknown}")
    hp = {k: overrides.get(k, default) for k, (default, _) in spec.items()}
    for k, v in hp.items():
        check = spec[k][1]
        if not check(v):
            raise InvalidHyperParams(f"{tag}.{k} = {v!r}; expected {check.desc}")
    return hp


# ---------------------------------------------------------------------------
# array-backed binary tree

class Tree:
    """Binary tree stored as parallel arrays.

    Node ``i`` is a leaf when ``feature[i] == -1``; otherwise rows with
    ``x[feature] <= threshold`` go to ``left[i]``. ``value`` has one row per
    node (class distribution for classification trees, a single score for
    boosting trees).
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.intp)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.intp)
        self.right = np.asarray(right, dtype=np.intp)
        self.value = np.asarray(value, dtype=float)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature < 0))

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_json(self, node: int = 0) -> dict:
        if self.feature[node] < 0:
            return {"leaf": self.value[node].tolist()}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_json(int(self.left[node])),
            "right": self.to_json(int(self.right[node])),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Tree":
        feature, threshold, left, right, value = [], [], [], [], []
        width = None

        def visit(obj):
            nonlocal width
            i = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(None)
            if "leaf" in obj:
                value[i] = list(obj["leaf"])
                width = len(value[i])
            else:
                feature[i] = int(obj["feature"])
                threshold[i] = float(obj["threshold"])
                left[i] = visit(obj["left"])
                right[i] = visit(obj["right"])
            return i

        visit(doc)
        value = [v if v is not None else [0.0] * width for v in value]
        return cls(feature, threshold, left, right, value)


class TreeBuilder:
    """Growable node store that produces a :class:`Tree`."""

    def __init__(self, width: int):
        self.width = width
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []

    def add_leaf(self, value) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(np.asarray(value, dtype=float).reshape(self.width))
        return len(self.feature) - 1

    def make_split(self, node: int, feature: int, threshold: float, left: int, right: int):
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = left
        self.right[node] = right

    def set_value(self, node: int, value):
        self.value[node] = np.asarray(value, dtype=float).reshape(self.width)

    def build(self) -> Tree:
        return Tree(self.feature, self.threshold, self.left, self.right,
                    np.vstack(self.value) if self.value else np.zeros((0, self.width)))


# ---------------------------------------------------------------------------
# models

class Model:
    """Common interface of every trained classifier.

    Subclasses set ``tag`` and implement ``_proba`` plus the JSON state
    hooks. Class indices run over ``range(n_classes)``.
    """

    tag = ""

    def __init__(self, hyperparams: Dict[str, Any], n_classes: int, n_features: int):
        self.hyperparams = dict(hyperparams)
        self.n_classes = int(n_classes)
        self.n_features = int(n_features)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, self.n_features)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ShapeError(f"model expects {self.n_features} features, got shape {X.shape}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        X = self._check(X)
        if X.shape[0] == 0:
            return np.zeros((0, self.n_classes))
        return self._proba(X)

    def predict(self, X) -> np.ndarray:
        X = self._check(X)
        if X.shape[0] == 0:
            return np.zeros(0, dtype=np.intp)
        return self._predict(X)

    def _predict(self, X) -> np.ndarray:
        return np.argmax(self._proba(X), axis=1)

    def _proba(self, X) -> np.ndarray:
        raise NotImplementedError

    # serialization hooks
    def _state(self) -> dict:
        raise NotImplementedError

    @classmethod
    def _from_state(cls, state: dict, hyperparams, n_classes, n_features) -> "Model":
        raise NotImplementedError

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_FORMAT_VERSION,
            "tag": self.tag,
            "hyperparams": self.hyperparams,
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "state": self._state(),
        }


def predict(model: Model, features) -> np.ndarray:
    return model.predict(features)


def predict_proba(model: Model, features) -> np.ndarray:
    return model.predict_proba(features)


_REGISTRY: Dict[str, type] = {}


def register(cls):
    _REGISTRY[cls.tag] = cls
    return cls


def model_from_json(doc: dict) -> Model:
    if doc.get("format") != MODEL_FORMAT:
        raise FormatError("not a serialized model")
    major = str(doc.get("version", "")).split(".")[0]
    if major != MODEL_FORMAT_VERSION.split(".")[0]:
        raise FormatError(f"unsupported model format version {doc.get('version')!r}")
    try:
        cls = _REGISTRY[doc["tag"]]
    except KeyError:
        raise FormatError(f"unknown model tag {doc.get('tag')!r}") from None
    return cls._from_state(doc["state"], doc["hyperparams"], doc["n_classes"], doc["n_features"])


def save_model(model: Model, path) -> None:
    Path(path).write_text(json.dumps(model.to_json()) + "\n", encoding="utf-8")


def load_model(path) -> Model:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})") from None
    return model_from_json(doc)
