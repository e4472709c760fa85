"""On-disk interchange formats.

Spectrum CSV: '#'-prefixed key=value metadata lines, one 'omega_hz,psd'
column-header line, then comma-separated rows printed with %.17g (so a
write/read round trip is value-exact and repeated runs are byte-identical).
The omega_hz column holds ordinary frequency in Hz.

Time-series binary: little-endian header magic 'BSTS', version uint32,
sample_rate float64, count uint64, followed by count float64 samples.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np

from .errors import DataError
from .estimate import Spectrum
from .synth import TimeSeries

__all__ = [
    "write_spectrum_csv",
    "read_spectrum_csv",
    "write_timeseries",
    "read_timeseries",
]

_MAGIC = b"BSTS"
_VERSION = 1
_HEADER = struct.Struct("<4sIdQ")
_COLUMNS = "omega_hz,psd"


def write_spectrum_csv(path, spectrum: Spectrum, extra_meta=None) -> None:
    """Write a spectrum with sorted metadata; deterministic byte-for-byte."""
    meta = {"n_averages": spectrum.n_averages}
    for key, val in spectrum.provenance.items():
        if isinstance(val, (str, int, float, bool)):
            meta[f"provenance.{key}"] = val
    if extra_meta:
        meta.update(extra_meta)
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}={meta[key]}\n")
    buf.write(_COLUMNS + "\n")
    for f, s in zip(spectrum.frequencies_hz, spectrum.psd):
        buf.write(f"{f:.17g},{s:.17g}\n")
    Path(path).write_text(buf.getvalue())


def read_spectrum_csv(path) -> Spectrum:
    """Parse a spectrum CSV; malformed rows or non-finite bins -> DataError."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read spectrum file {path}: {exc}") from exc
    meta = {}
    body_start = None
    for i, line in enumerate(lines):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            entry = text.lstrip("#").strip()
            if "=" in entry:
                key, val = entry.split("=", 1)
                meta[key.strip()] = val.strip()
            continue
        if text.replace(" ", "") != _COLUMNS:
            raise DataError(
                f"{path}: expected column header '{_COLUMNS}', got {text!r} (line {i + 1})"
            )
        body_start = i + 1
        break
    if body_start is None:
        raise DataError(f"{path}: no column header found")
    freqs, psd = [], []
    for lineno, line in enumerate(lines[body_start:], start=body_start + 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split(",")
        if len(parts) != 2:
            raise DataError(f"{path}: row at line {lineno} has {len(parts)} fields, want 2")
        try:
            freqs.append(float(parts[0]))
            psd.append(float(parts[1]))
        except ValueError as exc:
            raise DataError(f"{path}: unparseable number at line {lineno}") from exc
    if not freqs:
        raise DataError(f"{path}: no data rows")
    n_avg = int(float(meta.pop("n_averages", 1)))
    provenance = {"source": str(path)}
    provenance.update(meta)
    return Spectrum(
        frequencies_hz=np.array(freqs),
        psd=np.array(psd),
        n_averages=n_avg,
        provenance=provenance,
    )


def write_timeseries(path, ts: TimeSeries) -> None:
    """Write the binary record header + float64 little-endian samples."""
    samples = np.ascontiguousarray(ts.samples, dtype="<f8")
    header = _HEADER.pack(_MAGIC, _VERSION, float(ts.sample_rate), samples.size)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(samples.tobytes())


def read_timeseries(path) -> TimeSeries:
    """Read a binary record; bad magic/version/truncation -> DataError."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read time-series file {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise DataError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, rate, count = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, not a time-series record")
    if version != _VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    expect = _HEADER.size + 8 * count
    if len(raw) != expect:
        raise DataError(f"{path}: expected {expect} bytes for {count} samples, got {len(raw)}")
    samples = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(float)
    return TimeSeries(
        sample_rate=rate, samples=samples, seed=0, truth={"source": str(path)}
    )
