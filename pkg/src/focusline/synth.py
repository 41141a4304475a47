"""Deterministic synthetic band-power sessions with known class structure.

Each band follows a mean-reverting AR(1) process around a class-specific
level, shared by the four electrodes up to a small constant per-channel
offset. Short dropout runs are marked bad, like bad-contact stretches in a
real headband export.
"""

from __future__ import annotations

import dataclasses
import socket
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ingest import encode_osc_band_update, encode_osc_message
from .types import (AcquisitionMeta, Band, ConcentrationLabel, Modality, N_BANDS, N_CLASSES,
                    N_ELECTRODES, Recording, ValidationError)

# rows: fully / moderately / not concentrated; columns: delta..gamma
DEFAULT_SIGNATURES = (
    (0.1, 0.0, 0.2, 0.8, 0.6),
    (0.2, 0.2, 0.4, 0.5, 0.3),
    (0.4, 0.5, 0.6, 0.2, 0.1),
)


@dataclass(frozen=True)
class SynthConfig:
    recordings_per_class: int = 2
    duration_s: float = 300.0
    rate_hz: float = 10.0
    class_signatures: tuple[tuple[float, ...], ...] = DEFAULT_SIGNATURES
    separability: float = 1.0
    noise_sigma: float = 0.1
    ar_phi: float = 0.9
    electrode_jitter_sigma: float = 0.02
    dropout_prob: float = 0.005
    modality: Modality = Modality.non_vr
    seed: int = 0

    def __post_init__(self):
        sig = np.asarray(self.class_signatures, dtype=float)
        if sig.shape != (N_CLASSES, N_BANDS):
            raise ValidationError(f"class_signatures must be {N_CLASSES}x{N_BANDS}")
        if self.recordings_per_class < 1:
            raise ValidationError("recordings_per_class must be at least 1")
        if not (self.duration_s > 0 and self.rate_hz > 0):
            raise ValidationError("duration_s and rate_hz must be positive")
        if self.separability < 0 or self.noise_sigma < 0 or self.electrode_jitter_sigma < 0:
            raise ValidationError("separability and sigmas must be non-negative")
        if not 0 <= self.ar_phi < 1:
            raise ValidationError("ar_phi must lie in [0, 1)")
        if not 0 <= self.dropout_prob <= 1:
            raise ValidationError("dropout_prob must lie in [0, 1]")

    def replace(self, **changes) -> "SynthConfig":
        return dataclasses.replace(self, **changes)


PRESETS = {
    "easy": SynthConfig(),
    "hard": SynthConfig(separability=0.25, noise_sigma=0.2),
    "noiseless": SynthConfig(noise_sigma=0.0, electrode_jitter_sigma=0.0, dropout_prob=0.0),
}


def preset(name: str, **overrides) -> SynthConfig:
    try:
        cfg = PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return cfg.replace(**overrides)


def _dropout_mask(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    bad = np.zeros((n, N_BANDS, N_ELECTRODES), dtype=bool)
    if p <= 0:
        return bad
    starts = rng.random((n, N_BANDS, N_ELECTRODES)) < p
    lengths = rng.integers(3, 11, size=starts.shape)
    for t, b, e in zip(*np.nonzero(starts)):
        bad[t:t + lengths[t, b, e], b, e] = True
    return bad


def generate_one(cfg: SynthConfig, label: int, index: int) -> Recording:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index]))
    n = int(round(cfg.duration_s * cfg.rate_hz))
    mu = np.asarray(cfg.class_signatures, dtype=float)[label] * cfg.separability
    eps = rng.normal(0.0, cfg.noise_sigma, size=(n, N_BANDS)) if cfg.noise_sigma > 0 \
        else np.zeros((n, N_BANDS))
    x = np.empty((n, N_BANDS))
    dev = eps[0] / np.sqrt(1.0 - cfg.ar_phi ** 2)
    x[0] = mu + dev
    for t in range(1, n):
        dev = cfg.ar_phi * dev + eps[t]
        x[t] = mu + dev
    offsets = rng.normal(0.0, cfg.electrode_jitter_sigma, size=(N_BANDS, N_ELECTRODES)) \
        if cfg.electrode_jitter_sigma > 0 else np.zeros((N_BANDS, N_ELECTRODES))
    values = x[:, :, None] + offsets[None]
    bad = _dropout_mask(rng, n, cfg.dropout_prob)
    values[bad] = np.nan
    return Recording(id=f"synth-{index:02d}-{ConcentrationLabel(label).name}",
                     modality=cfg.modality, label=ConcentrationLabel(label),
                     timestamps=np.arange(n) / cfg.rate_hz, values=values, bad=bad,
                     meta=AcquisitionMeta(device="synthetic"))


def generate(cfg: SynthConfig = SynthConfig()) -> list[Recording]:
    """All sessions, class-major: label 0 recordings first, then 1, then 2."""
    recs = []
    for label in range(N_CLASSES):
        for j in range(cfg.recordings_per_class):
            recs.append(generate_one(cfg, label, label * cfg.recordings_per_class + j))
    return recs


def stream_osc(cfg: SynthConfig, port: int, realtime_factor: float = 1.0, *,
               host: str = "127.0.0.1", recordings: Sequence[int] | None = None,
               inject_unknown: bool = False) -> int:
    """Send generated sessions as OSC band updates over UDP.

    Each sample becomes five datagrams (delta..gamma) sent back to back,
    paced at ``rate_hz * realtime_factor`` samples per second. Bad entries
    are sent as NaN. Returns the number of datagrams sent.
    """
    if not realtime_factor > 0:
        raise ValidationError("realtime_factor must be positive")
    recs = generate(cfg)
    if recordings is not None:
        recs = [recs[i] for i in recordings]
    noise = encode_osc_message("/muse/elements/horseshoe", ",ffff", 1.0, 2.0, 2.0, 1.0)
    period = 1.0 / (cfg.rate_hz * realtime_factor)
    sent = 0
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        start = time.monotonic()
        k = 0
        for rec in recs:
            vals = np.where(rec.bad, np.nan, rec.values)
            for i in range(len(rec)):
                delay = start + k * period - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                for b in Band:
                    sock.sendto(encode_osc_band_update(b, vals[i, b]), (host, port))
                    sent += 1
                    if inject_unknown and b == Band.theta:
                        sock.sendto(noise, (host, port))
                        sent += 1
                k += 1
    return sent
