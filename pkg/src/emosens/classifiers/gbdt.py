"""Multiclass gradient-boosted trees: softmax objective, histogram splits,
leaf-wise growth.

Every round fits one regression tree per class to the Newton step of the
softmax cross-entropy, with ``g = p - y`` and ``h = p (1 - p)``. A tree is
grown by repeatedly splitting the leaf with the largest gain

    G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda) - G^2 / (H + lambda)

until ``max_leaves`` leaves exist or no split gains anything. Leaves output
``-G / (H + lambda)``. Split candidates come from per-feature equal-frequency
bins computed once on the training matrix.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..dataset import LabeledDataset
from ..errors import EmptyTrain, NonFiniteGradient
from .base import Model, Tree, TreeBuilder, register, resolve_hyperparams

GAIN_TIE_TOL = 1e-12
MIN_HESSIAN = 1e-12
PRIOR_FLOOR = 1e-6


class BinMapper:
    """Equal-frequency binning fitted on a training matrix.

    Bin edges sit at midpoints between neighbouring distinct values. A value
    ``x`` falls in bin ``#{edges < x}``, so bin ``<= b`` is the same as
    ``x <= edges[b]``. Features with at most ``n_bins`` distinct values get
    one bin per value.
    """

    def __init__(self, n_bins: int = 255):
        self.n_bins = int(n_bins)
        self.edges: List[np.ndarray] = []

    def fit(self, X: np.ndarray) -> "BinMapper":
        self.edges = [self._edges(X[:, f]) for f in range(X.shape[1])]
        return self

    def _edges(self, x: np.ndarray) -> np.ndarray:
        values, counts = np.unique(x, return_counts=True)
        mids = values[:-1] + (values[1:] - values[:-1]) / 2.0
        if values.size <= self.n_bins:
            return mids
        cum = np.cumsum(counts)
        targets = np.arange(1, self.n_bins) * (x.size / self.n_bins)
        cut = np.unique(np.searchsorted(cum, targets, side="left"))
        cut = cut[cut < mids.size]
        return mids[cut]

    @property
    def bins_per_feature(self) -> np.ndarray:
        return np.array([e.size + 1 for e in self.edges])

    def transform(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape, dtype=np.intp)
        for f, e in enumerate(self.edges):
            out[:, f] = np.searchsorted(e, X[:, f], side="left")
        return out


def split_gain(gl, hl, gr, hr, lam):
    g, h = gl + gr, hl + hr
    return gl ** 2 / (hl + lam) + gr ** 2 / (hr + lam) - g ** 2 / (h + lam)


@dataclass
class SplitCandidate:
    gain: float
    feature: int
    bin: int


def best_split_from_histograms(hist_g: np.ndarray, hist_h: np.ndarray, hist_n: np.ndarray,
                               n_bins: np.ndarray, lam: float, min_samples_leaf: int = 1,
                               features=None) -> Optional[SplitCandidate]:
    """Best ``bin <= b`` split given per-feature histograms.

    Histograms have shape ``(n_features, max_bins)``. Ties keep the lowest
    feature and then the lowest bin. Returns ``None`` if no split has both
    sides with at least ``min_samples_leaf`` rows.
    """
    G = hist_g[0].sum()
    H = hist_h[0].sum()
    N = hist_n[0].sum()
    cg = np.cumsum(hist_g, axis=1)
    ch = np.cumsum(hist_h, axis=1)
    cn = np.cumsum(hist_n, axis=1)
    # empty sides with lambda 0 divide by zero; those entries are masked below
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = split_gain(cg, ch, G - cg, H - ch, lam)
    valid = (cn >= min_samples_leaf) & (N - cn >= min_samples_leaf)
    valid &= np.arange(hist_g.shape[1])[None, :] < (n_bins[:, None] - 1)
    if features is not None:
        mask = np.zeros(hist_g.shape[0], dtype=bool)
        mask[np.asarray(features)] = True
        valid &= mask[:, None]
    if not valid.any():
        return None
    gain = np.where(valid, gain, -np.inf)
    top = gain.max()
    # row-major flat order = lowest feature, then lowest bin
    flat = int(np.flatnonzero(gain.ravel() >= top - GAIN_TIE_TOL * max(1.0, abs(top)))[0])
    f, b = divmod(flat, hist_g.shape[1])
    return SplitCandidate(float(gain[f, b]), int(f), int(b))


class _Histograms:
    def __init__(self, binned: np.ndarray, max_bins: int):
        self.binned = binned
        self.p = binned.shape[1]
        self.max_bins = max_bins
        self.flat = binned + (np.arange(self.p) * max_bins)[None, :]

    def build(self, idx, g, h):
        size = self.p * self.max_bins
        keys = self.flat[idx].ravel()
        shape = (self.p, self.max_bins)
        hg = np.bincount(keys, weights=np.repeat(g[idx], self.p), minlength=size).reshape(shape)
        hh = np.bincount(keys, weights=np.repeat(h[idx], self.p), minlength=size).reshape(shape)
        hn = np.bincount(keys, minlength=size).reshape(shape).astype(float)
        return hg, hh, hn


def grow_regression_tree(binned: np.ndarray, mapper: BinMapper, g: np.ndarray, h: np.ndarray,
                         rows: np.ndarray, lam: float, max_leaves: int, max_depth=None,
                         min_samples_leaf: int = 1, min_gain: float = 0.0,
                         features=None, hist: Optional[_Histograms] = None) -> Tree:
    n_bins = mapper.bins_per_feature
    if hist is None:
        hist = _Histograms(binned, int(n_bins.max()))
    builder = TreeBuilder(1)
    counter = 0
    heap = []

    def leaf_value(idx):
        return -g[idx].sum() / (h[idx].sum() + lam)

    def consider(node, idx, depth, hists):
        nonlocal counter
        if max_depth is not None and depth >= max_depth:
            return
        if idx.size < 2 * min_samples_leaf:
            return
        cand = best_split_from_histograms(*hists, n_bins, lam, min_samples_leaf, features)
        if cand is None or not cand.gain > min_gain:
            return
        counter += 1
        heapq.heappush(heap, (-cand.gain, counter, node, idx, depth, cand, hists))

    root = builder.add_leaf(leaf_value(rows))
    consider(root, rows, 0, hist.build(rows, g, h))
    n_leaves = 1
    while heap and n_leaves < max_leaves:
        _, _, node, idx, depth, cand, hists = heapq.heappop(heap)
        go_left = binned[idx, cand.feature] <= cand.bin
        li, ri = idx[go_left], idx[~go_left]
        left = builder.add_leaf(leaf_value(li))
        right = builder.add_leaf(leaf_value(ri))
        thr = float(mapper.edges[cand.feature][cand.bin])
        builder.make_split(node, cand.feature, thr, left, right)
        n_leaves += 1
        # build the smaller child, derive the larger by subtraction
        if li.size <= ri.size:
            small = hist.build(li, g, h)
            big = tuple(a - b for a, b in zip(hists, small))
            lh, rh = small, big
        else:
            small = hist.build(ri, g, h)
            big = tuple(a - b for a, b in zip(hists, small))
            lh, rh = big, small
        consider(left, li, depth + 1, lh)
        consider(right, ri, depth + 1, rh)
    return builder.build()


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(scores: np.ndarray, y: np.ndarray) -> float:
    """Mean multiclass log loss of raw scores."""
    z = scores - scores.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return float(-logp[np.arange(y.size), y].mean())


@register
class Gbdt(Model):
    tag = "gbdt"

    def __init__(self, trees, learning_rate, base_scores, hyperparams, n_classes,
                 n_features, train_loss=None):
        super().__init__(hyperparams, n_classes, n_features)
        self.trees: List[List[Tree]] = [list(r) for r in trees]  # [round][class]
        self.learning_rate = float(learning_rate)
        self.base_scores = np.asarray(base_scores, dtype=float)
        self.train_loss = list(train_loss or [])

    def decision_function(self, X) -> np.ndarray:
        X = self._check(X)
        scores = np.tile(self.base_scores, (X.shape[0], 1))
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                scores[:, k] += self.learning_rate * tree.predict_value(X)[:, 0]
        return scores

    def _proba(self, X):
        return softmax(self.decision_function(X))

    def _predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)

    def _state(self):
        return {
            "learning_rate": self.learning_rate,
            "base_scores": self.base_scores.tolist(),
            "trees": [[t.to_json() for t in r] for r in self.trees],
            "train_loss": self.train_loss,
        }

    @classmethod
    def _from_state(cls, state, hyperparams, n_classes, n_features):
        trees = [[Tree.from_json(t) for t in r] for r in state["trees"]]
        return cls(trees, state["learning_rate"], state["base_scores"], hyperparams,
                   n_classes, n_features, state.get("train_loss"))


def train_gbdt(data: LabeledDataset, hp=None) -> Gbdt:
    """Fit the boosted ensemble.

    Initial scores are log class priors (absent classes floored at 1e-6).
    ``model.train_loss`` records the mean training cross-entropy before the
    first round and after each round.
    """
    hp = resolve_hyperparams("gbdt", hp)
    X, y = data.X, data.y
    n, p = X.shape
    K = data.n_classes
    if n == 0:
        raise EmptyTrain("no training rows")
    rng = np.random.default_rng(hp["seed"])
    mapper = BinMapper(hp["n_bins"]).fit(X)
    binned = mapper.transform(X)
    hist = _Histograms(binned, int(mapper.bins_per_feature.max()))

    prior = np.bincount(y, minlength=K) / n
    base = np.log(np.maximum(prior, PRIOR_FLOOR))
    base -= base.mean()
    scores = np.tile(base, (n, 1))
    onehot = np.zeros((n, K))
    onehot[np.arange(n), y] = 1.0
    lr = hp["learning_rate"]
    n_rows = max(1, int(round(hp["subsample"] * n)))
    n_cols = max(1, int(round(hp["colsample"] * p)))

    losses = [cross_entropy(scores, y)]
    rounds = []
    for _ in range(hp["n_rounds"]):
        prob = softmax(scores)
        grad = prob - onehot
        hess = np.maximum(prob * (1.0 - prob), MIN_HESSIAN)
        rows = np.sort(rng.choice(n, n_rows, replace=False)) if n_rows < n else np.arange(n)
        round_trees = []
        for k in range(K):
            feats = np.sort(rng.choice(p, n_cols, replace=False)) if n_cols < p else None
            tree = grow_regression_tree(
                binned, mapper, grad[:, k], hess[:, k], rows, hp["lambda_l2"],
                hp["max_leaves"], hp["max_depth"], hp["min_samples_leaf"],
                hp["min_gain"], feats, hist)
            round_trees.append(tree)
        for k, tree in enumerate(round_trees):
            scores[:, k] += lr * tree.value[tree.apply(X), 0]
        if not np.all(np.isfinite(scores)):
            raise NonFiniteGradient("boosting scores overflowed; lower the learning rate")
        rounds.append(round_trees)
        losses.append(cross_entropy(scores, y))
    return Gbdt(rounds, lr, base, hp, K, p, losses)
