"""Sliding-window statistical features, 10 statistics for each of the 5 bands."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .preprocess import BandSeries
from .types import Band, ConcentrationLabel, FocuslineError, N_BANDS, ValidationError

log = logging.getLogger(__name__)

STATISTICS = ("mean", "squared_value", "variance", "std", "skewness", "kurtosis", "rms",
              "entropy", "activity", "mobility")
FEATURE_NAMES = [f"{b.name}_{s}" for b in Band for s in STATISTICS]
N_STATS = len(STATISTICS)
N_FEATURES = len(FEATURE_NAMES)
TABLE_META_COLUMNS = ["label", "recording_id", "window_start_s"]

# tolerance for window-boundary arithmetic, in seconds
_TIME_EPS = 1e-6


class TooShortError(FocuslineError):
    pass


class DegenerateWindowError(FocuslineError):
    pass


class EmptyTableError(FocuslineError):
    pass


@dataclass(frozen=True)
class WindowConfig:
    window_s: float = 10.0
    hop_s: float = 0.5
    min_points: int = 8
    entropy_bins: int = 16

    def __post_init__(self):
        if not (self.window_s > 0 and self.hop_s > 0):
            raise ValidationError("window_s and hop_s must be positive")
        if self.hop_s > self.window_s:
            raise ValidationError("hop_s must not exceed window_s")
        if self.min_points < 2:
            raise ValidationError("min_points must be at least 2")
        if self.entropy_bins < 1:
            raise ValidationError("entropy_bins must be positive")


@dataclass(frozen=True)
class Window:
    start_s: float
    values: np.ndarray  # (n_points, 5)


def series_duration(series: BandSeries) -> float:
    """Covered time span: first to last timestamp plus one sample period."""
    t = series.times
    if len(t) == 0:
        return 0.0
    period = float(np.median(np.diff(t))) if len(t) > 1 else 0.0
    return float(t[-1] - t[0]) + period


def window_count(duration: float, cfg: WindowConfig) -> int:
    if duration < cfg.window_s - _TIME_EPS:
        return 0
    return math.floor((duration - cfg.window_s) / cfg.hop_s + _TIME_EPS) + 1


def windows(series: BandSeries, cfg: WindowConfig = WindowConfig()) -> list[Window]:
    """Cut a series into windows ``[i*hop, i*hop + window)`` relative to its first sample."""
    duration = series_duration(series)
    n = window_count(duration, cfg)
    if n == 0:
        raise TooShortError(
            f"series {series.recording_id!r} spans {duration:g} s, shorter than the "
            f"{cfg.window_s:g} s window")
    rel = series.times - series.times[0]
    starts = np.arange(n) * cfg.hop_s
    lo = np.searchsorted(rel, starts - _TIME_EPS, side="left")
    hi = np.searchsorted(rel, starts + cfg.window_s - _TIME_EPS, side="left")
    out = [Window(float(s), series.values[a:b]) for s, a, b in zip(starts, lo, hi)
           if b - a >= cfg.min_points]
    if len(out) < n:
        log.warning("series %s: dropped %d windows with fewer than %d points",
                    series.recording_id, n - len(out), cfg.min_points)
    return out


def extract_features(window: np.ndarray, entropy_bins: int = 16) -> np.ndarray:
    """The 50 window statistics in band-major order (see ``FEATURE_NAMES``).

    Moments are population moments; kurtosis is excess kurtosis; entropy is
    the Shannon entropy (bits) of a histogram with ``entropy_bins`` uniform
    bins spanning the window's range. Constant bands get zero for every
    statistic that depends on spread.
    """
    x = np.asarray(window, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 2:
        raise DegenerateWindowError(f"window has {n} points, need at least 2")
    k = x.shape[1]
    out = np.zeros((k, N_STATS))

    lo, hi = x.min(axis=0), x.max(axis=0)
    const = lo == hi
    mean = x.mean(axis=0)
    mean[const] = x[0, const]
    sq = np.mean(x * x, axis=0)
    sq[const] = x[0, const] * x[0, const]
    dev = x - mean
    m2 = np.mean(dev ** 2, axis=0)
    m2[const] = 0.0
    live = m2 > 0
    sd = np.sqrt(m2)
    # standardize first so that tiny variances cannot underflow the ratios
    z = dev / np.where(live, sd, 1.0)
    skew = np.where(live, np.mean(z ** 3, axis=0), 0.0)
    kurt = np.where(live, np.mean(z ** 4, axis=0) - 3.0, 0.0)

    ent = np.zeros(k)
    for j in np.nonzero(~const)[0]:
        counts, _ = np.histogram(x[:, j], bins=entropy_bins, range=(lo[j], hi[j]))
        p = counts[counts > 0] / n
        ent[j] = max(0.0, float(-(p * np.log2(p)).sum()))

    d = np.diff(x, axis=0)
    dvar = np.mean((d - d.mean(axis=0)) ** 2, axis=0)
    mob = np.where(live, np.sqrt(dvar) / np.where(live, sd, 1.0), 0.0)

    out[:, 0] = mean
    out[:, 1] = sq
    out[:, 2] = m2
    out[:, 3] = sd
    out[:, 4] = skew
    out[:, 5] = kurt
    out[:, 6] = np.sqrt(sq)
    out[:, 7] = ent
    out[:, 8] = m2
    out[:, 9] = mob
    return out.ravel()


@dataclass
class FeatureVector:
    values: np.ndarray
    label: ConcentrationLabel
    recording_id: str
    window_start_s: float


@dataclass
class FeatureTable:
    """Row-aligned feature matrix with labels and window provenance."""

    X: np.ndarray
    labels: np.ndarray
    recording_ids: np.ndarray
    window_starts: np.ndarray
    feature_names: tuple[str, ...] = tuple(FEATURE_NAMES)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64).reshape(-1, len(self.feature_names))
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.recording_ids = np.asarray(self.recording_ids, dtype=object)
        self.window_starts = np.asarray(self.window_starts, dtype=np.float64)
        n = self.X.shape[0]
        if not (len(self.labels) == len(self.recording_ids) == len(self.window_starts) == n):
            raise ValidationError("feature table columns have mismatched lengths")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValidationError("feature names must be unique")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def rows(self) -> list[FeatureVector]:
        return [FeatureVector(x, ConcentrationLabel(int(y)), r, float(s))
                for x, y, r, s in zip(self.X, self.labels, self.recording_ids, self.window_starts)]

    def take(self, idx) -> "FeatureTable":
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureTable(self.X[idx], self.labels[idx], self.recording_ids[idx],
                            self.window_starts[idx], self.feature_names)

    @classmethod
    def concat(cls, tables: Sequence["FeatureTable"]) -> "FeatureTable":
        if not tables:
            raise EmptyTableError("nothing to concatenate")
        return cls(np.concatenate([t.X for t in tables]),
                   np.concatenate([t.labels for t in tables]),
                   np.concatenate([t.recording_ids for t in tables]),
                   np.concatenate([t.window_starts for t in tables]),
                   tables[0].feature_names)


def series_features(series: BandSeries, cfg: WindowConfig = WindowConfig()) -> FeatureTable:
    ws = windows(series, cfg)
    X = np.array([extract_features(w.values, cfg.entropy_bins) for w in ws]).reshape(-1, N_FEATURES)
    n = len(ws)
    return FeatureTable(X, np.full(n, int(series.label)), np.array([series.recording_id] * n, dtype=object),
                        np.array([w.start_s for w in ws]))


def build_feature_table(series_set: Sequence[BandSeries],
                        cfg: WindowConfig = WindowConfig()) -> FeatureTable:
    """Windowed features for every series, concatenated in input order."""
    if not series_set:
        raise EmptyTableError("no series given")
    modalities = {s.modality for s in series_set}
    if len(modalities) > 1:
        raise ValidationError(f"series mix modalities: {sorted(m.value for m in modalities)}")
    return FeatureTable.concat([series_features(s, cfg) for s in series_set])


# -- persistence -------------------------------------------------------------

def write_table_csv(table: FeatureTable, path: str | Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(table.feature_names) + TABLE_META_COLUMNS)
        for x, y, r, s in zip(table.X, table.labels, table.recording_ids, table.window_starts):
            w.writerow([repr(float(v)) for v in x] + [int(y), r, repr(float(s))])


def read_table_csv(path: str | Path) -> FeatureTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[-3:] != TABLE_META_COLUMNS:
            raise ValidationError(f"{path}: not a feature table (header must end with "
                                  f"{','.join(TABLE_META_COLUMNS)})")
        names = tuple(header[:-3])
        X, y, rid, ws = [], [], [], []
        for row in reader:
            if not row:
                continue
            X.append([float(v) for v in row[:-3]])
            y.append(int(row[-3]))
            rid.append(row[-2])
            ws.append(float(row[-1]))
    return FeatureTable(np.array(X, dtype=np.float64).reshape(-1, len(names)), np.array(y, dtype=np.int64),
                        np.array(rid, dtype=object), np.array(ws), names)
