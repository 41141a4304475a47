"""Recording-aware train/validation/test splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import FeatureTable
from .types import FocuslineError, N_CLASSES, ValidationError

MIN_ROWS_PER_RECORDING = 5


class TooFewWindowsError(FocuslineError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if min(fracs) <= 0 or not math.isclose(sum(fracs), 1.0, abs_tol=1e-9):
            raise ValidationError(f"split fractions must be positive and sum to 1, got {fracs}")


@dataclass
class DataSplit:
    train: FeatureTable
    val: FeatureTable
    test: FeatureTable

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.val), len(self.test)


def split(table: FeatureTable, spec: SplitSpec = SplitSpec()) -> DataSplit:
    """Cut every recording chronologically, then merge and shuffle each subset.

    Within a recording of ``n`` rows, the first ``floor(train_frac * n)`` rows
    (by window start) go to train, rows up to ``floor((train_frac + val_frac) * n)``
    go to validation and the remainder to test.
    """
    parts: tuple[list[np.ndarray], ...] = ([], [], [])
    # recordings in order of first appearance
    _, first = np.unique(table.recording_ids.astype(str), return_index=True)
    for rid in table.recording_ids[np.sort(first)]:
        rows = np.flatnonzero(table.recording_ids == rid)
        n = len(rows)
        if n < MIN_ROWS_PER_RECORDING:
            raise TooFewWindowsError(
                f"recording {rid!r} has {n} windows, need at least {MIN_ROWS_PER_RECORDING}")
        rows = rows[np.argsort(table.window_starts[rows], kind="stable")]
        # epsilon guards products like 0.6 * 5 landing just below an integer
        a = math.floor(spec.train_frac * n + 1e-9)
        b = math.floor((spec.train_frac + spec.val_frac) * n + 1e-9)
        parts[0].append(rows[:a])
        parts[1].append(rows[a:b])
        parts[2].append(rows[b:])
    rng = np.random.default_rng(spec.seed)
    subsets = []
    for chunks in parts:
        idx = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
        subsets.append(table.take(idx[rng.permutation(len(idx))]))
    return DataSplit(*subsets)


def class_histogram(table: FeatureTable) -> np.ndarray:
    """Row count per concentration label."""
    return np.bincount(table.labels, minlength=N_CLASSES)[:N_CLASSES]
