from __future__ import annotations

import math

import numpy as np

from ..dataset import LabeledDataset
from ..errors import EmptyTrain
from .base import Model, Tree, register, resolve_hyperparams
from .tree import grow_tree

ERR_FLOOR = 1e-10


@register
class AdaBoost(Model):
    """SAMME ensemble of depth-1 trees.

    ``predict_proba`` is each class's share of the total stump weight voting
    for it. With no usable stump it falls back to the training class prior.
    """

    tag = "adaboost"

    def __init__(self, stumps, stump_weights, prior, hyperparams, n_classes, n_features):
        super().__init__(hyperparams, n_classes, n_features)
        self.stumps = list(stumps)
        self.stump_weights = [float(a) for a in stump_weights]
        self.prior = np.asarray(prior, dtype=float)

    def _proba(self, X):
        votes = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for stump, alpha in zip(self.stumps, self.stump_weights):
            votes[rows, np.argmax(stump.predict_value(X), axis=1)] += alpha
        total = votes.sum(axis=1, keepdims=True)
        fallback = np.tile(self.prior, (X.shape[0], 1))
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, votes / np.where(total > 0, total, 1.0), fallback)

    def _state(self):
        return {"stumps": [s.to_json() for s in self.stumps],
                "stump_weights": self.stump_weights, "prior": self.prior.tolist()}

    @classmethod
    def _from_state(cls, state, hyperparams, n_classes, n_features):
        stumps = [Tree.from_json(s) for s in state["stumps"]]
        return cls(stumps, state["stump_weights"], state["prior"], hyperparams,
                   n_classes, n_features)


def train_adaboost(data: LabeledDataset, hp=None) -> AdaBoost:
    """Multiclass SAMME on stumps.

    Round weight is ``ln((1 - err) / err) + ln(K - 1)`` with the weighted
    error floored at 1e-10. Boosting stops once a stump's error reaches
    ``1 - 1/K`` (the stump is discarded) or hits zero (the stump is kept).
    """
    hp = resolve_hyperparams("adaboost", hp)
    n = len(data)
    if n == 0:
        raise EmptyTrain("no training rows")
    K = data.n_classes
    X, y = data.X, data.y
    w = np.full(n, 1.0 / n)
    prior = np.bincount(y, minlength=K) / n
    stumps, alphas = [], []
    for _ in range(hp["n_rounds"]):
        stump = grow_tree(X, y, K, sample_weight=w, max_depth=1)
        miss = np.argmax(stump.predict_value(X), axis=1) != y
        err = float(w[miss].sum() / w.sum())
        if err >= 1.0 - 1.0 / K:
            break
        err = max(err, ERR_FLOOR)
        alpha = math.log((1.0 - err) / err) + math.log(K - 1) if K > 1 else 1.0
        stumps.append(stump)
        alphas.append(alpha)
        if err <= ERR_FLOOR:
            break
        w = w * np.exp(alpha * miss)
        w /= w.sum()
    return AdaBoost(stumps, alphas, prior, hp, K, data.n_features)
