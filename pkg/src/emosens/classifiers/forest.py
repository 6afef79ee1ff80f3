from __future__ import annotations

import numpy as np

from ..dataset import LabeledDataset
from ..errors import EmptyTrain
from .base import Model, Tree, register, resolve_hyperparams
from .tree import grow_tree


@register
class RandomForest(Model):
    """Bagged CART trees combined by majority vote.

    ``predict_proba`` returns vote fractions, so its argmax is the majority
    class with ties going to the lowest class index.
    """

    tag = "rf"

    def __init__(self, trees, seeds, hyperparams, n_classes, n_features):
        super().__init__(hyperparams, n_classes, n_features)
        self.trees = list(trees)
        self.seeds = list(seeds)

    def _proba(self, X):
        votes = np.zeros((X.shape[0], self.n_classes))
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, np.argmax(tree.predict_value(X), axis=1)] += 1.0
        return votes / len(self.trees)

    def _state(self):
        return {"seeds": self.seeds, "trees": [t.to_json() for t in self.trees]}

    @classmethod
    def _from_state(cls, state, hyperparams, n_classes, n_features):
        trees = [Tree.from_json(t) for t in state["trees"]]
        return cls(trees, state["seeds"], hyperparams, n_classes, n_features)


def train_random_forest(data: LabeledDataset, hp=None) -> RandomForest:
    """Each tree gets its own seed drawn from ``hp['seed']``; the seed drives
    both the bootstrap draw and the per-split feature sampling."""
    hp = resolve_hyperparams("rf", hp)
    n = len(data)
    if n == 0:
        raise EmptyTrain("no training rows")
    master = np.random.default_rng(hp["seed"])
    seeds = [int(s) for s in master.integers(0, 2**31 - 1, size=hp["n_trees"])]
    trees = []
    for s in seeds:
        rng = np.random.default_rng(s)
        if hp["bootstrap"]:
            idx = np.sort(rng.integers(0, n, size=n))
        else:
            idx = np.arange(n)
        trees.append(grow_tree(
            data.X[idx], data.y[idx], data.n_classes, max_depth=hp["max_depth"],
            min_samples_leaf=hp["min_samples_leaf"],
            min_samples_split=hp["min_samples_split"],
            max_features=hp["max_features"], rng=rng))
    return RandomForest(trees, seeds, hp, data.n_classes, data.n_features)
