import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from focusline.features import FEATURE_NAMES, FeatureTable, WindowConfig, build_feature_table
from focusline.preprocess import preprocess
from focusline.synth import generate, preset

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {title}"
    if detail:
        line += f"  ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def make_table(n_per_rec=60, n_recs=3, d=len(FEATURE_NAMES), seed=0, shift=3.0):
    """Gaussian blobs, one recording per class, rows in window order."""
    rng = np.random.default_rng(seed)
    X, labels, ids, starts = [], [], [], []
    for r in range(n_recs):
        label = r % 3
        X.append(rng.normal(size=(n_per_rec, d)) + shift * label * (np.arange(d) % 5 == label))
        labels += [label] * n_per_rec
        ids += [f"rec{r}"] * n_per_rec
        starts.append(np.arange(n_per_rec) * 0.5)
    return FeatureTable(np.vstack(X), np.array(labels), np.array(ids, dtype=object),
                        np.concatenate(starts), list(FEATURE_NAMES[:d]))


@pytest.fixture
def blob_table():
    return make_table()


@pytest.fixture(scope="session")
def short_recordings():
    return generate(preset("easy", duration_s=40, seed=3))


@pytest.fixture(scope="session")
def short_table(short_recordings):
    return build_feature_table(preprocess(short_recordings), WindowConfig())
