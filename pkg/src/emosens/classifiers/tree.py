"""CART classification trees with Gini impurity."""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from ..dataset import LabeledDataset
from ..errors import EmptyTrain
from .base import Model, Tree, TreeBuilder, register, resolve_hyperparams

# impurities closer than this are treated as equal (first candidate wins)
TIE_TOL = 1e-12


def split_impurity(left_counts: np.ndarray, right_counts: np.ndarray) -> np.ndarray:
    """Size-weighted Gini impurity of the two children.

    Counts are (possibly weighted) class totals with classes on the last axis.
    """
    nl = left_counts.sum(axis=-1)
    nr = right_counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        gl = nl - np.where(nl > 0, (left_counts ** 2).sum(axis=-1) / nl, 0.0)
        gr = nr - np.where(nr > 0, (right_counts ** 2).sum(axis=-1) / nr, 0.0)
    return (gl + gr) / (nl + nr)


def best_split(X: np.ndarray, y: np.ndarray, w: np.ndarray, n_classes: int,
               features=None, min_samples_leaf: int = 1
               ) -> Optional[Tuple[int, float, float]]:
    """Exhaustive Gini split search.

    Candidate thresholds are midpoints between consecutive distinct values.
    Returns ``(feature, threshold, impurity)`` for the lowest weighted child
    impurity, ties going to the lowest feature index and then the lowest
    threshold, or ``None`` when no split respects ``min_samples_leaf``.
    """
    n = X.shape[0]
    feats = np.arange(X.shape[1]) if features is None else np.sort(np.asarray(features, dtype=int))
    if n < 2 or feats.size == 0:
        return None
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = w
    total = onehot.sum(axis=0)
    order = np.argsort(X[:, feats], axis=0, kind="stable")
    xs = np.take_along_axis(X[:, feats], order, axis=0)
    # split after sorted position i (left = first i + 1 rows)
    cum = np.cumsum(onehot[order], axis=0)[:-1]
    imp = split_impurity(cum, total - cum)
    size_left = np.arange(1, n)[:, None]
    valid = ((xs[:-1] < xs[1:]) & (size_left >= min_samples_leaf)
             & (n - size_left >= min_samples_leaf))
    imp = np.where(valid, imp, np.inf)
    best = None
    for c, f in enumerate(feats):
        col = imp[:, c]
        lo = col.min()
        if not np.isfinite(lo):
            continue
        j = int(np.flatnonzero(col <= lo + TIE_TOL)[0])
        if best is None or col[j] < best[2] - TIE_TOL:
            a, b = xs[j, c], xs[j + 1, c]
            thr = a + (b - a) / 2.0
            if thr >= b:  # adjacent floats
                thr = a
            best = (int(f), float(thr), float(col[j]))
    return best


def n_candidate_features(max_features, n_features: int) -> int:
    if max_features is None or max_features == "all":
        return n_features
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    return min(int(max_features), n_features)


def grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, sample_weight=None,
              max_depth=None, min_samples_leaf: int = 1, min_samples_split: int = 2,
              max_features=None, rng: Optional[np.random.Generator] = None) -> Tree:
    """Grow a CART tree depth-first.

    Nodes stop splitting at ``max_depth``, below ``min_samples_split`` rows,
    when pure, or when no split leaves ``min_samples_leaf`` rows per side.
    Leaves store the (weighted) class distribution. Splits with zero
    impurity decrease are allowed, which lets XOR-like data be fit.
    """
    n, p = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    n_try = n_candidate_features(max_features, p)
    builder = TreeBuilder(n_classes)

    def distribution(idx):
        counts = np.bincount(y[idx], weights=w[idx], minlength=n_classes)
        s = counts.sum()
        return counts / s if s > 0 else np.full(n_classes, 1.0 / n_classes)

    root = builder.add_leaf(distribution(np.arange(n)))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if max_depth is not None and depth >= max_depth:
            continue
        if idx.size < min_samples_split or idx.size < 2 * min_samples_leaf:
            continue
        dist = builder.value[node]
        if np.count_nonzero(dist) <= 1:
            continue
        if n_try < p:
            feats = np.sort(rng.choice(p, size=n_try, replace=False))
        else:
            feats = None
        found = best_split(X[idx], y[idx], w[idx], n_classes, feats, min_samples_leaf)
        if found is None:
            continue
        f, thr, _ = found
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        left = builder.add_leaf(distribution(li))
        right = builder.add_leaf(distribution(ri))
        builder.make_split(node, f, thr, left, right)
        # push right first so the left subtree gets the lower node ids
        stack.append((right, ri, depth + 1))
        stack.append((left, li, depth + 1))
    return builder.build()


@register
class DecisionTree(Model):
    tag = "dt"

    def __init__(self, tree: Tree, hyperparams, n_classes, n_features):
        super().__init__(hyperparams, n_classes, n_features)
        self.tree = tree

    def _proba(self, X):
        return self.tree.predict_value(X)

    def _state(self):
        return {"root": self.tree.to_json()}

    @classmethod
    def _from_state(cls, state, hyperparams, n_classes, n_features):
        return cls(Tree.from_json(state["root"]), hyperparams, n_classes, n_features)


def train_decision_tree(data: LabeledDataset, hp=None) -> DecisionTree:
    hp = resolve_hyperparams("dt", hp)
    if len(data) == 0:
        raise EmptyTrain("no training rows")
    rng = np.random.default_rng(hp["seed"])
    tree = grow_tree(data.X, data.y, data.n_classes, max_depth=hp["max_depth"],
                     min_samples_leaf=hp["min_samples_leaf"],
                     min_samples_split=hp["min_samples_split"],
                     max_features=hp["max_features"], rng=rng)
    return DecisionTree(tree, hp, data.n_classes, data.n_features)
