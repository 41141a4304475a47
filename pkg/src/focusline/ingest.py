"""Session ingestion: CSV exports and live OSC band-power streams over UDP."""

from __future__ import annotations

import csv
import io
import logging
import math
import queue
import socket
import struct
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import BinaryIO, Iterable

import numpy as np

from .types import (AcquisitionMeta, Band, ConcentrationLabel, DecodeError, Electrode,
                    EmptyRecordingError, FormatError, Modality, N_BANDS, N_ELECTRODES,
                    Recording, ValidationError)

log = logging.getLogger(__name__)

TIMESTAMP_COLUMN = "TimeStamp"
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S.%f"
BAND_COLUMNS = [f"{b.title}_{e.name}" for b in Band for e in Electrode]

OSC_ADDRESS_TEMPLATE = "/muse/elements/{}_absolute"
OSC_TYPE_TAGS = ",ffff"
_BAND_BY_ADDRESS = {OSC_ADDRESS_TEMPLATE.format(b.name): b for b in Band}


# -- CSV -------------------------------------------------------------------

def _parse_timestamp(text: str, row: int) -> datetime:
    try:
        return datetime.strptime(text.strip(), TIMESTAMP_FORMAT)
    except ValueError:
        raise FormatError(f"row {row}: timestamp {text!r} is not YYYY-MM-DD HH:MM:SS.mmm") from None


def _parse_cell(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        return math.nan
    return v if math.isfinite(v) else math.nan


def parse_session_csv(data: bytes | BinaryIO, *, label: ConcentrationLabel | int,
                      modality: Modality | str = Modality.non_vr, recording_id: str = "session",
                      meta: AcquisitionMeta | None = None) -> Recording:
    """Parse a band-power CSV export into a :class:`Recording`.

    The file must have a ``TimeStamp`` column and one ``{Band}_{Electrode}``
    column per band/electrode pair. Extra columns are ignored. Empty or
    non-numeric cells become bad entries. Label and modality are not part of
    the file and must be supplied by the caller.
    """
    raw = data if isinstance(data, bytes) else data.read()
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise FormatError(f"input is not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise FormatError("missing header row")
    header = [h.strip() for h in header]
    index = {name: i for i, name in enumerate(header)}
    for col in [TIMESTAMP_COLUMN] + BAND_COLUMNS:
        if col not in index:
            raise FormatError(f"missing required column {col}")
    ts_col = index[TIMESTAMP_COLUMN]
    band_cols = [index[c] for c in BAND_COLUMNS]

    stamps: list[datetime] = []
    rows: list[list[float]] = []
    for rownum, fields in enumerate(reader, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) < len(header):
            fields = fields + [""] * (len(header) - len(fields))
        stamp = _parse_timestamp(fields[ts_col], rownum)
        if stamps and stamp < stamps[-1]:
            raise FormatError(f"row {rownum}: timestamp goes backwards")
        stamps.append(stamp)
        rows.append([_parse_cell(fields[c]) for c in band_cols])
    if not rows:
        raise EmptyRecordingError("CSV has no data rows")

    t0 = stamps[0]
    timestamps = np.array([(s - t0).total_seconds() for s in stamps])
    values = np.array(rows, dtype=np.float64).reshape(-1, N_BANDS, N_ELECTRODES)
    return Recording(id=recording_id, modality=Modality(modality), label=ConcentrationLabel(label),
                     timestamps=timestamps, values=values, bad=np.isnan(values),
                     meta=meta or AcquisitionMeta())


def load_session_csv(path: str | Path, **kwargs) -> Recording:
    path = Path(path)
    kwargs.setdefault("recording_id", path.stem)
    return parse_session_csv(path.read_bytes(), **kwargs)


def format_session_csv(rec: Recording, start: datetime = datetime(2024, 1, 1)) -> str:
    """Render a recording in the export layout accepted by :func:`parse_session_csv`.

    Timestamps are written with millisecond resolution.
    """
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([TIMESTAMP_COLUMN] + BAND_COLUMNS)
    for t, vals, bad in zip(rec.timestamps, rec.values, rec.bad):
        stamp = start + timedelta(milliseconds=int(round(t * 1000)))
        cells = ["" if b else repr(float(v)) for v, b in zip(vals.ravel(), bad.ravel())]
        w.writerow([stamp.strftime(TIMESTAMP_FORMAT)[:-3]] + cells)
    return out.getvalue()


# -- OSC -------------------------------------------------------------------

@dataclass(frozen=True)
class BandUpdate:
    band: Band
    values: np.ndarray  # float64, electrode order TP9, AF7, AF8, TP10
    bad: np.ndarray


def _osc_string(s: str) -> bytes:
    b = s.encode("ascii") + b"\0"
    return b + b"\0" * (-len(b) % 4)


def encode_osc_band_update(band: Band, values: Iterable[float]) -> bytes:
    vals = [float(v) for v in values]
    if len(vals) != N_ELECTRODES:
        raise ValidationError(f"expected {N_ELECTRODES} electrode values, got {len(vals)}")
    return (_osc_string(OSC_ADDRESS_TEMPLATE.format(Band(band).name)) + _osc_string(OSC_TYPE_TAGS)
            + struct.pack(">4f", *vals))


def encode_osc_message(address: str, type_tags: str, *args) -> bytes:
    """Generic OSC 1.0 encoder for int32/float32/string arguments."""
    payload = b""
    for tag, arg in zip(type_tags.lstrip(","), args):
        if tag == "f":
            payload += struct.pack(">f", arg)
        elif tag == "i":
            payload += struct.pack(">i", arg)
        elif tag == "s":
            payload += _osc_string(arg)
        else:
            raise ValidationError(f"unsupported OSC type tag {tag!r}")
    return _osc_string(address) + _osc_string(type_tags) + payload


def _read_osc_string(data: bytes, offset: int, what: str) -> tuple[str, int]:
    end = data.find(b"\0", offset)
    if end < 0:
        raise DecodeError(f"truncated datagram: unterminated {what}")
    nxt = offset + ((end - offset) // 4 + 1) * 4
    if nxt > len(data):
        raise DecodeError(f"truncated datagram: {what} padding")
    try:
        return data[offset:end].decode("ascii"), nxt
    except UnicodeDecodeError:
        raise DecodeError(f"{what} is not ASCII") from None


def decode_osc_band_update(datagram: bytes) -> BandUpdate | None:
    """Decode one OSC band-power message.

    Returns ``None`` for addresses other than ``/muse/elements/<band>_absolute``.
    NaN or infinite arguments are flagged bad.
    """
    address, off = _read_osc_string(datagram, 0, "address")
    if not address.startswith("/"):
        raise DecodeError(f"invalid OSC address {address!r}")
    band = _BAND_BY_ADDRESS.get(address)
    if band is None:
        return None
    if off >= len(datagram) or datagram[off:off + 1] != b",":
        raise DecodeError("missing type tag string")
    tags, off = _read_osc_string(datagram, off, "type tags")
    if tags != OSC_TYPE_TAGS:
        raise DecodeError(f"{address}: expected type tags {OSC_TYPE_TAGS!r}, got {tags!r}")
    if len(datagram) - off < 16:
        raise DecodeError(f"truncated datagram: {len(datagram) - off} argument bytes, need 16")
    values = np.array(struct.unpack_from(">4f", datagram, off), dtype=np.float64)
    return BandUpdate(band, values, ~np.isfinite(values))


# -- live assembly -----------------------------------------------------------

class UpdateAssembler:
    """Turn a stream of timed band updates into electrode-band samples.

    A sample is emitted as soon as every band has been refreshed since the
    previous emit, or when ``1 / assembly_rate_hz`` seconds have passed with
    at least one fresh band. Bands without a fresh update carry their last
    received values.
    """

    def __init__(self, assembly_rate_hz: float):
        if not assembly_rate_hz > 0:
            raise ValidationError("assembly_rate_hz must be positive")
        self.interval = 1.0 / assembly_rate_hz
        self._values = np.full((N_BANDS, N_ELECTRODES), np.nan)
        self._bad = np.ones((N_BANDS, N_ELECTRODES), dtype=bool)
        self._seen = np.zeros(N_BANDS, dtype=bool)
        self._fresh = np.zeros(N_BANDS, dtype=bool)
        self._t0: float | None = None
        self._last_emit: float | None = None
        self.n_updates = 0
        self.timestamps: list[float] = []
        self.values: list[np.ndarray] = []
        self.bad: list[np.ndarray] = []

    def _emit(self, t: float):
        self.timestamps.append(t - self._t0)
        self.values.append(self._values.copy())
        self.bad.append(self._bad.copy())
        self._fresh[:] = False
        self._last_emit = t

    def tick(self, t: float):
        if (self._last_emit is not None and self._seen.all() and self._fresh.any()
                and t - self._last_emit >= self.interval):
            self._emit(t)

    def push(self, update: BandUpdate, t: float):
        if self._t0 is None:
            self._t0 = self._last_emit = t
        self.tick(t)
        self._values[update.band] = update.values
        self._bad[update.band] = update.bad
        self._seen[update.band] = True
        self._fresh[update.band] = True
        self.n_updates += 1
        if self._fresh.all():
            self._emit(t)

    def to_recording(self, **kwargs) -> Recording:
        if self.n_updates == 0 or not self.timestamps:
            raise EmptyRecordingError("no complete band samples were received")
        return Recording(timestamps=np.array(self.timestamps), values=np.array(self.values),
                         bad=np.array(self.bad), **kwargs)


class OscListener:
    """UDP receiver feeding a bounded queue, consumed by an :class:`UpdateAssembler`.

    The socket is bound on construction, so ``port=0`` picks a free port that
    can be read back from :attr:`port` before senders start.
    """

    def __init__(self, port: int, host: str = "127.0.0.1", queue_size: int = 65536):
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_RCVBUF, 1 << 22)
            self.sock.bind((host, port))
        except OSError:
            self.sock.close()
            raise
        self.sock.settimeout(0.05)
        self.port = self.sock.getsockname()[1]
        self.queue: queue.Queue[tuple[float, bytes]] = queue.Queue(maxsize=queue_size)
        self._stop = threading.Event()
        self.n_decode_errors = 0

    def _receive(self):
        while not self._stop.is_set():
            try:
                data, _ = self.sock.recvfrom(65535)
            except socket.timeout:
                continue
            except OSError:
                break
            item = (time.monotonic(), data)
            while not self._stop.is_set():
                try:
                    self.queue.put(item, timeout=0.05)
                    break
                except queue.Full:
                    continue

    def collect(self, duration: float, assembly_rate_hz: float = 10.0, *,
                label: ConcentrationLabel | int = ConcentrationLabel.fully_concentrated,
                modality: Modality | str = Modality.non_vr, recording_id: str = "live",
                meta: AcquisitionMeta | None = None) -> Recording:
        if not duration > 0:
            raise ValidationError("duration must be positive")
        assembler = UpdateAssembler(assembly_rate_hz)
        worker = threading.Thread(target=self._receive, daemon=True)
        worker.start()
        deadline = time.monotonic() + duration
        try:
            while True:
                now = time.monotonic()
                if now >= deadline:
                    break
                try:
                    t, data = self.queue.get(timeout=min(0.05, deadline - now))
                except queue.Empty:
                    assembler.tick(time.monotonic())
                    continue
                try:
                    update = decode_osc_band_update(data)
                except DecodeError as exc:
                    self.n_decode_errors += 1
                    log.warning("dropping malformed datagram: %s", exc)
                    continue
                if update is not None:
                    assembler.push(update, t)
        finally:
            self._stop.set()
            worker.join()
        if self.n_decode_errors:
            log.warning("%d malformed datagrams dropped", self.n_decode_errors)
        return assembler.to_recording(id=recording_id, label=ConcentrationLabel(label),
                                      modality=Modality(modality), meta=meta or AcquisitionMeta())

    def close(self):
        self._stop.set()
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def listen_udp(port: int, duration: float, assembly_rate_hz: float = 10.0, *,
               host: str = "127.0.0.1", **kwargs) -> Recording:
    """Collect band updates on ``host:port`` for ``duration`` seconds."""
    with OscListener(port, host) as listener:
        return listener.collect(duration, assembly_rate_hz, **kwargs)
