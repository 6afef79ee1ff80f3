"""From-scratch multiclass classifiers.

Every trainer takes a :class:`~emosens.dataset.LabeledDataset` and an
optional hyperparameter dict (validated against the defaults in
``HYPERPARAM_SPECS``) and returns a trained :class:`Model`.
"""

from .adaboost import AdaBoost, train_adaboost
from .base import (HYPERPARAM_SPECS, MODEL_NAMES, Model, Tree, load_model,
                   model_from_json, predict, predict_proba,
                   resolve_hyperparams, save_model)
from .forest import RandomForest, train_random_forest
from .gbdt import BinMapper, Gbdt, train_gbdt
from .knn import Knn, train_knn
from .naive_bayes import GaussianNb, train_gaussian_nb
from .tree import DecisionTree, best_split, train_decision_tree

TRAINERS = {
    "dt": train_decision_tree,
    "rf": train_random_forest,
    "gbdt": train_gbdt,
    "adaboost": train_adaboost,
    "knn": train_knn,
    "gnb": train_gaussian_nb,
}


def train(tag, data, hp=None) -> Model:
    """Dispatch to the trainer registered for ``tag``."""
    resolve_hyperparams(tag, hp)
    return TRAINERS[tag](data, hp)


__all__ = [
    "AdaBoost", "BinMapper", "DecisionTree", "GaussianNb", "Gbdt", "Knn",
    "Model", "RandomForest", "Tree", "HYPERPARAM_SPECS", "MODEL_NAMES",
    "TRAINERS", "best_split", "load_model", "model_from_json", "predict",
    "predict_proba", "resolve_hyperparams", "save_model", "train",
    "train_adaboost", "train_decision_tree", "train_gaussian_nb",
    "train_gbdt", "train_knn", "train_random_forest",
]
