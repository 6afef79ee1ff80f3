from __future__ import annotations

import numpy as np

from ..dataset import LabeledDataset
from ..errors import EmptyTrain
from .base import Model, register, resolve_hyperparams


@register
class GaussianNb(Model):
    """Diagonal-Gaussian naive Bayes. Classes absent from training get prior 0."""

    tag = "gnb"

    def __init__(self, means, variances, priors, hyperparams, n_classes, n_features):
        super().__init__(hyperparams, n_classes, n_features)
        self.means = np.asarray(means, dtype=float)
        self.variances = np.asarray(variances, dtype=float)
        self.priors = np.asarray(priors, dtype=float)

    def joint_log_likelihood(self, X) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.priors)
        ll = -0.5 * (np.log(2.0 * np.pi * self.variances)[None, :, :]
                     + (X[:, None, :] - self.means[None, :, :]) ** 2
                     / self.variances[None, :, :]).sum(axis=2)
        return ll + log_prior[None, :]

    def _proba(self, X):
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        e = np.exp(jll)
        return e / e.sum(axis=1, keepdims=True)

    def _state(self):
        return {"means": self.means.tolist(), "variances": self.variances.tolist(),
                "priors": self.priors.tolist()}

    @classmethod
    def _from_state(cls, state, hyperparams, n_classes, n_features):
        return cls(state["means"], state["variances"], state["priors"], hyperparams,
                   n_classes, n_features)


def train_gaussian_nb(data: LabeledDataset, hp=None) -> GaussianNb:
    hp = resolve_hyperparams("gnb", hp)
    n = len(data)
    if n == 0:
        raise EmptyTrain("no training rows")
    K, p = data.n_classes, data.n_features
    means = np.zeros((K, p))
    variances = np.ones((K, p))
    counts = np.bincount(data.y, minlength=K)
    for c in np.flatnonzero(counts):
        Xc = data.X[data.y == c]
        means[c] = Xc.mean(axis=0)
        variances[c] = Xc.var(axis=0)
    variances = np.maximum(variances, hp["var_floor"])
    return GaussianNb(means, variances, counts / n, hp, K, p)
