"""Core domain types shared across the pipeline stages."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


class FocuslineError(Exception):
    """Base class for all errors raised by the pipeline."""


class FormatError(FocuslineError):
    """Malformed input file or datagram."""


class EmptyRecordingError(FocuslineError):
    """A recording ended up with zero samples."""


class DecodeError(FormatError):
    """An OSC datagram could not be decoded."""


class ValidationError(FocuslineError, ValueError):
    """Invalid configuration or input values."""


class Band(enum.IntEnum):
    delta = 0
    theta = 1
    alpha = 2
    beta = 3
    gamma = 4

    @property
    def title(self) -> str:
        return self.name.capitalize()


class Electrode(enum.IntEnum):
    TP9 = 0
    AF7 = 1
    AF8 = 2
    TP10 = 3


class ConcentrationLabel(enum.IntEnum):
    fully_concentrated = 0
    moderately_concentrated = 1
    not_concentrated = 2


class Modality(str, enum.Enum):
    non_vr = "non_vr"
    vr = "vr"

    @classmethod
    def parse(cls, text: str) -> "Modality":
        key = text.strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ValidationError(f"unknown modality {text!r} (expected vr or non-vr)") from None


N_BANDS = len(Band)
N_ELECTRODES = len(Electrode)
N_CLASSES = len(ConcentrationLabel)


@dataclass(frozen=True)
class AcquisitionMeta:
    sampling_rate_hz: float = 256.0
    notch_hz: int | None = 50
    device: str = "Muse S (Gen 2)"

    def __post_init__(self):
        if not self.sampling_rate_hz > 0:
            raise ValidationError("sampling_rate_hz must be positive")
        if self.notch_hz not in (50, 60, None):
            raise ValidationError(f"notch_hz must be 50, 60 or None, got {self.notch_hz!r}")

    def to_dict(self) -> dict:
        return {"sampling_rate_hz": self.sampling_rate_hz, "notch_hz": self.notch_hz,
                "device": self.device}


@dataclass(frozen=True)
class ElectrodeBandSample:
    """One time step: values and bad flags indexed ``[band, electrode]``."""

    timestamp: float
    values: np.ndarray
    bad: np.ndarray


@dataclass
class Recording:
    """A single session of per-electrode band-power samples.

    Samples are stored column-wise: ``timestamps`` has shape ``(n,)`` while
    ``values`` and ``bad`` have shape ``(n, 5, 4)`` indexed
    ``[sample, band, electrode]``.
    """

    id: str
    modality: Modality
    label: ConcentrationLabel
    timestamps: np.ndarray
    values: np.ndarray
    bad: np.ndarray
    meta: AcquisitionMeta = field(default_factory=AcquisitionMeta)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.bad = np.asarray(self.bad, dtype=bool)
        n = self.timestamps.shape[0]
        if self.values.shape != (n, N_BANDS, N_ELECTRODES) or self.bad.shape != self.values.shape:
            raise ValidationError(
                f"recording {self.id!r}: expected values/bad of shape {(n, N_BANDS, N_ELECTRODES)}, "
                f"got {self.values.shape} and {self.bad.shape}")
        if n and np.any(np.diff(self.timestamps) < 0):
            raise ValidationError(f"recording {self.id!r}: timestamps must be non-decreasing")
        if np.any(~np.isfinite(self.values[~self.bad])):
            raise ValidationError(f"recording {self.id!r}: non-finite value not flagged bad")
        self.label = ConcentrationLabel(self.label)
        self.modality = Modality(self.modality)

    def __len__(self) -> int:
        return self.timestamps.shape[0]

    @property
    def samples(self) -> list[ElectrodeBandSample]:
        return list(self.iter_samples())

    def iter_samples(self) -> Iterator[ElectrodeBandSample]:
        for i in range(len(self)):
            yield ElectrodeBandSample(float(self.timestamps[i]), self.values[i], self.bad[i])

    def replace(self, **changes) -> "Recording":
        kw = dict(id=self.id, modality=self.modality, label=self.label,
                  timestamps=self.timestamps, values=self.values, bad=self.bad, meta=self.meta)
        kw.update(changes)
        return Recording(**kw)

    def to_dict(self) -> dict:
        # NaN is not valid JSON, so bad entries are serialized as null
        vals = np.where(self.bad, np.nan, self.values)
        return {
            "id": self.id,
            "modality": self.modality.value,
            "label": int(self.label),
            "meta": self.meta.to_dict(),
            "timestamps": self.timestamps.tolist(),
            "values": [[[None if np.isnan(v) else float(v) for v in row] for row in s] for s in vals],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Recording":
        raw = np.array([[[np.nan if v is None else v for v in row] for row in s] for s in d["values"]],
                       dtype=np.float64).reshape(-1, N_BANDS, N_ELECTRODES)
        return cls(id=d["id"], modality=Modality(d["modality"]),
                   label=ConcentrationLabel(d["label"]),
                   timestamps=np.asarray(d["timestamps"], dtype=np.float64),
                   values=raw, bad=~np.isfinite(raw),
                   meta=AcquisitionMeta(**d.get("meta", {})))
