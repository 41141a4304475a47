"""Clean per-electrode recordings into per-band series.

Order of operations: forward fill bad entries, average the four electrodes
per band, then min-max rescale each band to ``[0, 1]``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .types import (AcquisitionMeta, Band, ConcentrationLabel, Electrode, FocuslineError,
                    Modality, N_BANDS, Recording, ValidationError)

SERIES_COLUMNS = ["t"] + [b.name for b in Band]


class UnrecoverableChannelError(FocuslineError):
    def __init__(self, band: Band, electrode: Electrode):
        super().__init__(f"channel ({band.name}, {electrode.name}) has no valid samples")
        self.band = band
        self.electrode = electrode


class PreconditionError(FocuslineError):
    pass


class StateError(FocuslineError):
    pass


@dataclass(frozen=True)
class BandVector:
    timestamp: float
    value: np.ndarray


@dataclass
class BandSeries:
    recording_id: str
    modality: Modality
    label: ConcentrationLabel
    times: np.ndarray
    values: np.ndarray  # (n, 5)
    rescaled: bool = False
    meta: AcquisitionMeta = field(default_factory=AcquisitionMeta)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.times.shape[0], N_BANDS):
            raise ValidationError(f"series {self.recording_id!r}: values must have shape (n, 5)")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError(f"series {self.recording_id!r}: non-finite band value")
        self.label = ConcentrationLabel(self.label)
        self.modality = Modality(self.modality)

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def points(self) -> list[BandVector]:
        return [BandVector(float(t), v) for t, v in zip(self.times, self.values)]


def forward_fill(rec: Recording) -> Recording:
    """Replace bad entries with the last good value of the same channel.

    Leading bad entries take the first good value of their channel instead.
    """
    values, bad = rec.values, rec.bad
    if not bad.any():
        return rec.replace(values=values.copy(), bad=bad.copy())
    n = len(rec)
    good = ~bad
    dead = np.argwhere(~good.any(axis=0))
    if len(dead):
        raise UnrecoverableChannelError(Band(dead[0][0]), Electrode(dead[0][1]))
    # index of the most recent good sample, per channel
    idx = np.where(good, np.arange(n)[:, None, None], 0)
    np.maximum.accumulate(idx, axis=0, out=idx)
    first_good = good.argmax(axis=0)
    leading = ~np.logical_or.accumulate(good, axis=0)
    idx = np.where(leading, first_good[None], idx)
    filled = np.take_along_axis(values, idx, axis=0)
    return rec.replace(values=filled, bad=np.zeros_like(bad))


def average_bands(rec: Recording) -> BandSeries:
    """Electrode mean per band and time step."""
    if rec.bad.any():
        raise PreconditionError(f"recording {rec.id!r} still has bad entries; forward_fill first")
    return BandSeries(recording_id=rec.id, modality=rec.modality, label=rec.label,
                      times=rec.timestamps.copy(), values=rec.values.mean(axis=2),
                      rescaled=False, meta=rec.meta)


def band_range(series_set: Sequence[BandSeries]) -> tuple[np.ndarray, np.ndarray]:
    """Per-band (min, max) over a set of series."""
    lo = np.min([s.values.min(axis=0) for s in series_set], axis=0)
    hi = np.max([s.values.max(axis=0) for s in series_set], axis=0)
    return lo, hi


def rescale(series: BandSeries, bounds: tuple[np.ndarray, np.ndarray] | None = None) -> BandSeries:
    """Min-max rescale every band to ``[0, 1]``.

    ``bounds`` defaults to the series' own per-band range. A band whose range
    is zero maps to 0.
    """
    if series.rescaled:
        raise StateError(f"series {series.recording_id!r} is already rescaled")
    if len(series) == 0:
        raise PreconditionError("cannot rescale an empty series")
    lo, hi = bounds if bounds is not None else band_range([series])
    lo = np.asarray(lo, dtype=np.float64)
    span = np.asarray(hi, dtype=np.float64) - lo
    flat = span == 0
    out = (series.values - lo) / np.where(flat, 1.0, span)
    out[:, flat] = 0.0
    np.clip(out, 0.0, 1.0, out=out)
    return BandSeries(recording_id=series.recording_id, modality=series.modality,
                      label=series.label, times=series.times.copy(), values=out,
                      rescaled=True, meta=series.meta)


def preprocess(recordings: Sequence[Recording], scope: str = "global") -> list[BandSeries]:
    """Forward fill, electrode-average and rescale a batch of recordings.

    ``scope="global"`` rescales with the per-band range over the whole batch,
    ``scope="recording"`` uses each recording's own range.
    """
    if scope not in ("global", "recording"):
        raise ValidationError(f"unknown rescale scope {scope!r}")
    averaged = [average_bands(forward_fill(r)) for r in recordings]
    bounds = band_range(averaged) if scope == "global" and averaged else None
    return [rescale(s, bounds) for s in averaged]


# -- persistence -------------------------------------------------------------

def format_series_csv(series: BandSeries) -> str:
    out = io.StringIO()
    out.write(f"# recording_id={series.recording_id}\n")
    out.write(f"# label={int(series.label)}\n")
    out.write(f"# modality={series.modality.value}\n")
    out.write(f"# rescaled={str(series.rescaled).lower()}\n")
    out.write(f"# sampling_rate_hz={series.meta.sampling_rate_hz!r}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for t, v in zip(series.times, series.values):
        w.writerow([repr(float(t))] + [repr(float(x)) for x in v])
    return out.getvalue()


def write_series_csv(series: BandSeries, path: str | Path):
    Path(path).write_text(format_series_csv(series))


def read_series_csv(path: str | Path) -> BandSeries:
    meta: dict[str, str] = {}
    rows = []
    header = None
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
                continue
            if header is None:
                header = next(csv.reader([line]))
                if header != SERIES_COLUMNS:
                    raise ValidationError(f"{path}: expected header {','.join(SERIES_COLUMNS)}")
                continue
            if line.strip():
                rows.append([float(x) for x in line.split(",")])
    arr = np.array(rows, dtype=np.float64).reshape(-1, len(SERIES_COLUMNS))
    return BandSeries(recording_id=meta.get("recording_id", Path(path).stem),
                      modality=Modality(meta.get("modality", "non_vr")),
                      label=ConcentrationLabel(int(meta.get("label", 0))),
                      times=arr[:, 0], values=arr[:, 1:],
                      rescaled=meta.get("rescaled", "false") == "true",
                      meta=AcquisitionMeta(float(meta.get("sampling_rate_hz", 256.0))))
