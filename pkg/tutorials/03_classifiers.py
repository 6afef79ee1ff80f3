# # Classifiers
#
# Every model shares the same train / predict interface, so they can be
# swapped by tag. Here they are fitted on a fixed split of the shipped
# synthetic feature table.

# %%
import time

import numpy as np

from emosens.classifiers import TRAINERS, train
from emosens.hrv_features import apply_minmax, fit_minmax
from emosens.synth_corpus import load_shipped_features

data = load_shipped_features()
print(data.X.shape, "classes:", data.n_classes)

# %%
# Hold out the last three subjects; scale with train statistics only.
held = np.isin(data.groups, sorted(set(data.groups))[-3:])
scaler = fit_minmax(data.subset(np.flatnonzero(~held)))
train_set = apply_minmax(scaler, data.subset(np.flatnonzero(~held)))
test_set = apply_minmax(scaler, data.subset(np.flatnonzero(held)))

# %%
for tag in TRAINERS:
    t0 = time.perf_counter()
    model = train(tag, train_set, {"n_rounds": 30} if tag == "gbdt" else None)
    acc = np.mean(model.predict(test_set.X) == test_set.y)
    print("%-9s acc %.3f  (%.2f s)" % (tag, acc, time.perf_counter() - t0))

# %%
# Probabilities always have one column per class and rows summing to one.
proba = train("rf", train_set, {"n_trees": 25}).predict_proba(test_set.X[:3])
print(proba.round(2))
