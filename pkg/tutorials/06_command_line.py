# # The command-line workflow
#
# The same steps as the other tutorials, driven through ``emosens.cli.main``
# (equivalent to running the ``emosens`` executable).

# %%
import json
import tempfile
from pathlib import Path

from emosens.cli import main

work = Path(tempfile.mkdtemp())

# %%
# Three subjects keep this quick; the default corpus has 23.
main(["synth", "--out", str(work / "corpus"), "--subjects", "3"])
main(["extract", "--input", str(work / "corpus" / "manifest.json"), "--out", str(work / "features.csv")])

# %%
main(["cv", "--input", str(work / "features.csv"), "--models", "dt,gnb,knn",
      "--k", "3", "--out", str(work / "cv.json")])
doc = json.loads((work / "cv.json").read_text())
print([row["model"] for row in doc["table"]])

# %%
main(["tune", "--input", str(work / "features.csv"), "--models", "dt", "--k", "3",
      "--grid", '{"dt": {"max_depth": [2, 4, null]}}', "--out", str(work / "tune.json")])
print(json.loads((work / "tune.json").read_text())["best_hyperparams"])

# %%
code = main(["cv", "--input", str(work / "missing.csv")])
print("exit code for a missing input:", code)
