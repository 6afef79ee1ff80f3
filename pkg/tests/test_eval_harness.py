import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emosens.dataset import LabeledDataset
from emosens.errors import EmptyGrid, InputError, ShapeError, TooManyFolds
from emosens.eval_harness import (METRIC_NAMES, CurvePoint, SkippedPoint,
                                  cross_validate, evaluate_predictions,
                                  grid_search, group_k_fold, learning_curve,
                                  write_curve_csv)

from oracles import naive_metrics

FAST = {"dt": {}, "rf": {"n_trees": 20}, "gbdt": {"n_rounds": 20},
        "adaboost": {"n_rounds": 20}, "knn": {"k": 5}, "gnb": {}}


# ---------------------------------------------------------------------------
# folds

def test_23_groups_10_folds():
    groups = np.repeat([f"S{i:02d}" for i in range(23)], 18)
    fa = group_k_fold(groups, 10)
    per_fold = np.bincount(list(fa.fold_of_group.values()), minlength=10)
    assert set(per_fold.tolist()) == {2, 3}
    assert sorted(fa.fold_of_group) == sorted(set(groups))
    seen = []
    for tr, te in fa.splits(groups):
        assert not set(groups[tr]) & set(groups[te])
        seen += list(set(groups[te]))
    assert sorted(seen) == sorted(set(groups))


def test_leave_one_group_out():
    groups = np.array(list("aabbbcdd"))
    fa = group_k_fold(groups, 4)
    tests = [set(groups[te]) for _, te in fa.splits(groups)]
    assert all(len(t) == 1 for t in tests)
    # largest group first, placed in fold 0
    assert fa.fold_of_group["b"] == 0


def test_fold_errors():
    with pytest.raises(TooManyFolds):
        group_k_fold(["a", "b"], 3)
    with pytest.raises(InputError):
        group_k_fold(["a", "b"], 1)


def test_fold_assignment_deterministic():
    groups = np.random.default_rng(0).integers(0, 30, size=500)
    a = group_k_fold(groups, 7)
    b = group_k_fold(groups, 7)
    assert a == b


def test_no_leakage_randomized():
    r = np.random.default_rng(2718)
    for _ in range(1000):
        n = int(r.integers(5, 120))
        groups = r.integers(0, int(r.integers(2, 40)), size=n)
        n_groups = np.unique(groups).size
        if n_groups < 2:
            continue
        k = int(r.integers(2, n_groups + 1))
        fa = group_k_fold(groups, k)
        counts = np.bincount(list(fa.fold_of_group.values()), minlength=k)
        assert counts.max() - counts.min() <= 1
        covered = np.zeros(n, dtype=int)
        for tr, te in fa.splits(groups):
            assert not set(groups[tr].tolist()) & set(groups[te].tolist())
            covered[te] += 1
        assert np.all(covered == 1)


# ---------------------------------------------------------------------------
# metrics

def test_perfect_prediction():
    y = [0, 1, 2, 3, 4, 5, 6, 7, 8, 0]
    m = evaluate_predictions(y, y)
    for name in METRIC_NAMES:
        assert getattr(m, name) == 1.0


def test_hand_confusion_example():
    m = evaluate_predictions([0, 0, 1, 1], [0, 1, 1, 1])
    assert m.accuracy == 0.75
    assert m.precision_macro == pytest.approx((1.0 + 2 / 3) / 2)
    assert m.recall_macro == pytest.approx((0.5 + 1.0) / 2)
    assert m.confusion[0][:2] == [1, 1] and m.confusion[1][:2] == [0, 2]


def test_constant_prediction_on_balanced_truth():
    y = np.repeat(np.arange(9), 10)
    m = evaluate_predictions(y, np.zeros_like(y))
    assert m.accuracy == pytest.approx(1 / 9)
    assert m.accuracy == np.trace(m.confusion) / np.sum(m.confusion)


def test_length_mismatch():
    with pytest.raises(ShapeError):
        evaluate_predictions([0, 1], [0])


def test_metrics_match_naive_implementation():
    r = np.random.default_rng(31)
    for _ in range(500):
        n = int(r.integers(1, 60))
        k = int(r.integers(2, 10))
        yt = r.integers(0, k, size=n)
        yp = np.where(r.random(n) < 0.5, yt, r.integers(0, k, size=n))
        got = evaluate_predictions(yt, yp, 9)
        exp = naive_metrics(yt.tolist(), yp.tolist(), 9)
        for name in METRIC_NAMES:
            assert abs(getattr(got, name) - exp[name]) <= 1e-12
            assert 0.0 <= getattr(got, name) <= 1.0
        assert got.confusion == exp["confusion"]


# ---------------------------------------------------------------------------
# cross-validation

def _quadrant_data(seed=0, noise=0.2, n_groups=20, per_group=20, n_noise_features=2):
    r = np.random.default_rng(seed)
    n = n_groups * per_group
    X = r.uniform(-1, 1, size=(n, 2 + n_noise_features))
    y = 2 * (X[:, 0] > 0) + (X[:, 1] > 0)
    flip = r.random(n) < noise
    y = np.where(flip, r.integers(0, 4, size=n), y)
    return LabeledDataset.from_arrays(X, y, groups=np.repeat(np.arange(n_groups), per_group),
                                      n_classes=4)


def test_deterministic_label_gives_perfect_tree():
    r = np.random.default_rng(1)
    X = r.normal(size=(200, 5))
    y = np.digitize(X[:, 3], [-1.0, 0.0, 1.0])
    data = LabeledDataset.from_arrays(X, y, groups=np.arange(200) % 20, n_classes=9)
    rep = cross_validate(data, "dt", {}, k=10)
    assert rep.mean["accuracy"] == 1.0


def test_report_mean_is_fold_average():
    rep = cross_validate(_quadrant_data(), "dt", {"max_depth": 3}, k=5)
    for name in METRIC_NAMES + ("runtime_s",):
        vals = [getattr(m, name) for m in rep.per_fold]
        assert abs(rep.mean[name] - sum(vals) / len(vals)) <= 1e-12
        assert abs(rep.std[name] - float(np.std(vals))) <= 1e-12
    assert len(rep.per_fold) == 5 and rep.k == 5
    assert rep.hyperparams["max_depth"] == 3


@pytest.mark.parametrize("tag", sorted(FAST))
def test_shuffled_labels_are_at_chance(shipped, tag):
    y = np.random.default_rng(0).permutation(shipped.y)
    rep = cross_validate(shipped.with_labels(y), tag, FAST[tag], k=10)
    assert abs(rep.mean["accuracy"] - 1 / 9) <= 0.05


def test_parallel_folds_match_sequential(monkeypatch):
    data = _quadrant_data()
    seq = cross_validate(data, "rf", {"n_trees": 5}, k=5)
    monkeypatch.setenv("EMOSENS_THREADS", "4")
    par = cross_validate(data, "rf", {"n_trees": 5}, k=5)

    def strip(rep):
        doc = rep.to_json()
        for m in doc["per_fold"]:
            m.pop("runtime_s")
        doc["mean"].pop("runtime_s")
        doc["std"].pop("runtime_s")
        return json.dumps(doc)
    assert strip(seq) == strip(par)


# ---------------------------------------------------------------------------
# grid search

def test_grid_of_one():
    data = _quadrant_data()
    hp, rep = grid_search(data, "dt", [{"max_depth": 4}], k=5)
    assert hp["max_depth"] == 4 and rep.hyperparams == hp


def test_grid_picks_optimal_depth():
    data = _quadrant_data(seed=3)
    grid = [{"max_depth": d} for d in (1, 2, 3, 6, None)]
    hp, rep = grid_search(data, "dt", grid, k=5)
    assert hp["max_depth"] == 2
    others = [cross_validate(data, "dt", g, 5).mean["accuracy"] for g in grid]
    assert rep.mean["accuracy"] == max(others)


def test_grid_ties_keep_earliest():
    data = _quadrant_data()
    hp, _ = grid_search(data, "knn", [{"k": 3}, {"k": 3}], k=4)
    assert hp == {"k": 3}
    hp, _ = grid_search(data, "gnb", [{"var_floor": 1e-9}, {"var_floor": 2e-9}], k=4)
    assert hp["var_floor"] == 1e-9


def test_empty_grid():
    with pytest.raises(EmptyGrid):
        grid_search(_quadrant_data(), "dt", [], k=5)


# ---------------------------------------------------------------------------
# learning curves

def test_curve_full_fraction_matches_cv():
    data = _quadrant_data()
    pts = learning_curve(data, "dt", {"max_depth": 2}, [0.25, 0.5, 1.0], k=5, seed=1)
    assert [p.fraction for p in pts] == [0.25, 0.5, 1.0]
    rep = cross_validate(data, "dt", {"max_depth": 2}, k=5)
    assert pts[-1].val_accuracy == pytest.approx(rep.mean["accuracy"], abs=1e-12)


def test_curve_skips_empty_fraction(tmp_path):
    data = _quadrant_data(n_groups=4)
    pts = learning_curve(data, "dt", {}, [0.1, 1.0], k=2)
    assert isinstance(pts[0], SkippedPoint) and isinstance(pts[1], CurvePoint)
    write_curve_csv(tmp_path / "c.csv", pts)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "fraction,train_acc,val_acc"
    assert lines[1] == "0.1,,"


def test_curve_bad_fraction():
    with pytest.raises(InputError):
        learning_curve(_quadrant_data(), "dt", {}, [0.0, 1.0], k=5)
    with pytest.raises(InputError):
        learning_curve(_quadrant_data(), "dt", {}, [1.5], k=5)


@given(st.lists(st.sampled_from([0.2, 0.4, 0.6, 0.8, 1.0]), min_size=1, max_size=4))
def test_curve_preserves_fraction_order(fracs):
    data = _quadrant_data(n_groups=10, per_group=8)
    pts = learning_curve(data, "gnb", {}, fracs, k=5)
    assert [p.fraction for p in pts] == fracs
