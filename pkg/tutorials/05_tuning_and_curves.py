# # Grid search and learning curves

# %%
from emosens.eval_harness import grid_search, learning_curve
from emosens.synth_corpus import load_shipped_features

data = load_shipped_features()

# %%
grid = [{"max_depth": d, "min_samples_leaf": m} for d in (2, 3, 4, 6, None) for m in (1, 4)]
best, report = grid_search(data, "dt", grid, k=10)
print("best:", best)
print("mean accuracy %.4f" % report.mean["accuracy"])

# %%
# Train vs validation accuracy as whole subjects are removed from training.
for p in learning_curve(data, "dt", best, fractions=(0.1, 0.25, 0.5, 1.0), k=10):
    print(p.to_json())
