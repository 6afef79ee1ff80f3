import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def shipped():
    from emosens.synth_corpus import load_shipped_features
    return load_shipped_features()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def blobs(n_per_class=100, n_classes=3, n_features=2, sep=5.0, seed=0):
    """Isotropic Gaussian blobs with centres ``sep`` standard deviations apart."""
    r = np.random.default_rng(seed)
    centres = r.normal(size=(n_classes, n_features))
    centres /= np.linalg.norm(centres, axis=1, keepdims=True)
    # place centres on a regular simplex-like spread, scaled for separation
    centres = np.array([[sep * np.cos(2 * np.pi * c / n_classes),
                         sep * np.sin(2 * np.pi * c / n_classes)] + [0.0] * (n_features - 2)
                        for c in range(n_classes)])
    X = np.vstack([r.normal(centres[c], 1.0, size=(n_per_class, n_features))
                   for c in range(n_classes)])
    y = np.repeat(np.arange(n_classes), n_per_class)
    perm = r.permutation(y.size)
    return X[perm], y[perm]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
