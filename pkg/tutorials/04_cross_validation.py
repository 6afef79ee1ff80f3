# # Grouped cross-validation
#
# Folds are built from whole subjects so no person appears on both sides of
# a split.

# %%
import numpy as np

from emosens.eval_harness import cross_validate, format_table, group_k_fold, results_table
from emosens.synth_corpus import load_shipped_features

data = load_shipped_features()

# %%
folds = group_k_fold(data.groups, 10)
for i, (tr, te) in enumerate(folds.splits(data.groups)):
    overlap = set(data.groups[tr]) & set(data.groups[te])
    print("fold %d: %3d test rows, subjects %s, overlap %d"
          % (i, len(te), sorted(set(data.groups[te])), len(overlap)))

# %%
reports = [cross_validate(data, tag, hp, k=10)
           for tag, hp in [("dt", {}), ("knn", {}), ("gnb", {}), ("adaboost", {})]]
print(format_table(results_table(reports)))

# %%
# Shuffling labels destroys the signal, so accuracy falls to about 1/9.
y = np.random.default_rng(1).permutation(data.y)
print("shuffled: %.3f" % cross_validate(data.with_labels(y), "dt", {}, 10).mean["accuracy"])
