from __future__ import annotations

import numpy as np

from ..dataset import LabeledDataset
from ..errors import EmptyTrain, InvalidK
from .base import Model, register, resolve_hyperparams

_CHUNK = 512


@register
class Knn(Model):
    """k nearest neighbours, Euclidean distance.

    Equal distances keep the lower training row; equal vote counts go to the
    lower class index.
    """

    tag = "knn"

    def __init__(self, X, y, k, hyperparams, n_classes, n_features):
        super().__init__(hyperparams, n_classes, n_features)
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=np.intp)
        self.k = int(k)

    def _proba(self, X):
        out = np.zeros((X.shape[0], self.n_classes))
        for start in range(0, X.shape[0], _CHUNK):
            Q = X[start:start + _CHUNK]
            # exact differences rather than the expanded form, so ties stay ties
            d2 = ((Q[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
            nearest = np.argsort(d2, axis=1, kind="stable")[:, :self.k]
            labels = self.y[nearest]
            for r in range(Q.shape[0]):
                out[start + r] = np.bincount(labels[r], minlength=self.n_classes)
        return out / self.k

    def _state(self):
        return {"X": self.X.tolist(), "y": self.y.tolist(), "k": self.k}

    @classmethod
    def _from_state(cls, state, hyperparams, n_classes, n_features):
        X = np.asarray(state["X"], dtype=float).reshape(-1, n_features)
        return cls(X, state["y"], state["k"], hyperparams, n_classes, n_features)


def train_knn(data: LabeledDataset, hp=None) -> Knn:
    hp = resolve_hyperparams("knn", hp)
    if len(data) == 0:
        raise EmptyTrain("no training rows")
    if hp["k"] > len(data):
        raise InvalidK(f"k = {hp['k']} exceeds {len(data)} training rows")
    return Knn(data.X.copy(), data.y.copy(), hp["k"], hp, data.n_classes, data.n_features)
