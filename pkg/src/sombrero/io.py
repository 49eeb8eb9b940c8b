"""Binary field snapshots and text time series.

Snapshot layout (all little-endian)::

    offset size  field
    0      5     magic b"SOMB1"
    5      4     uint32 endianness marker 0x01020304
    9      1     uint8 representation (0 position, 1 momentum)
    10     4     uint32 nx
    14     4     uint32 ny
    18     8     float64 Lx
    26     8     float64 Ly
    34     8     float64 tau
    42     4     uint32 component count (1 or 2)
    46     ...   payload: component-major, row-major [ix, iy], each value
                 a (real, imag) pair of float64

Series files are tab-separated text with one header row; floats are
written with 17 significant digits so they parse back to identical doubles.
"""
from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

from .grid import GridSpec, Rep, SpinorField

MAGIC = b"SOMB1"
ENDIAN_MARKER = 0x01020304
_HEADER = struct.Struct("<5sIBIIdddI")
HEADER_SIZE = _HEADER.size

SERIES_COLUMNS = ("tau", "P1", "P2", "u", "v", "w", "r_abs", "gamma_wrapped",
                  "gamma_unwrapped", "n_x", "n_y", "norm", "energy", "flags")

_REP_CODE = {Rep.POSITION: 0, Rep.MOMENTUM: 1}
_CODE_REP = {v: k for k, v in _REP_CODE.items()}


class SnapshotFormatError(ValueError):
    pass


class SeriesFormatError(ValueError):
    pass


def encode_snapshot(f: SpinorField, tau: float = 0.0) -> bytes:
    g = f.grid
    head = _HEADER.pack(MAGIC, ENDIAN_MARKER, _REP_CODE[f.rep], g.nx, g.ny, float(g.Lx),
                        float(g.Ly), float(tau), f.ncomp)
    return head + np.ascontiguousarray(f.data, dtype="<c16").tobytes()


def decode_snapshot(buf: bytes) -> tuple[SpinorField, float]:
    if len(buf) < HEADER_SIZE:
        raise SnapshotFormatError(f"header truncated: expected {HEADER_SIZE} bytes, got {len(buf)}")
    magic, marker, rep, nx, ny, lx, ly, tau, ncomp = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    if marker != ENDIAN_MARKER:
        raise SnapshotFormatError(f"bad endianness marker {marker:#010x}")
    if rep not in _CODE_REP:
        raise SnapshotFormatError(f"bad representation flag {rep}")
    if ncomp not in (1, 2):
        raise SnapshotFormatError(f"bad component count {ncomp}")
    if not (math.isfinite(tau) and math.isfinite(lx) and math.isfinite(ly)):
        raise SnapshotFormatError("non-finite header value")
    try:
        grid = GridSpec(nx, ny, lx, ly)
    except ValueError as e:
        raise SnapshotFormatError(f"bad grid in header: {e}") from None
    expected = 2 * ncomp * nx * ny * 8
    actual = len(buf) - HEADER_SIZE
    if actual != expected:
        raise SnapshotFormatError(f"payload length mismatch: expected {expected} bytes, got {actual}")
    data = np.frombuffer(buf, dtype="<c16", offset=HEADER_SIZE).reshape(ncomp, nx, ny)
    return SpinorField(grid, _CODE_REP[rep], data.astype(complex)), tau


def write_snapshot(f: SpinorField, path, tau: float = 0.0) -> None:
    Path(path).write_bytes(encode_snapshot(f, tau))


def read_snapshot(path) -> tuple[SpinorField, float]:
    return decode_snapshot(Path(path).read_bytes())


# ------------------------------------------------------------------ series


def _fmt(x) -> str:
    if isinstance(x, str):
        return x if x else "-"
    return format(float(x), ".17g")


def write_series(path, rows, columns=SERIES_COLUMNS) -> None:
    """Write rows (mappings or sequences aligned with ``columns``).

    A missing numeric value is written as ``nan``; the ``flags`` column holds a
    ``|``-joined string, ``-`` when empty.
    """
    columns = tuple(columns)
    if not columns or columns[0] != "tau":
        raise SeriesFormatError("first column must be 'tau'")
    lines = ["\t".join(columns)]
    last = -math.inf
    for row in rows:
        if isinstance(row, dict):
            vals = [row.get(c, "" if c == "flags" else math.nan) for c in columns]
        else:
            vals = list(row)
        if len(vals) != len(columns):
            raise SeriesFormatError(f"row has {len(vals)} values, expected {len(columns)}")
        if not float(vals[0]) > last:
            raise SeriesFormatError("tau must be strictly increasing")
        last = float(vals[0])
        lines.append("\t".join(_fmt(v) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_series(path) -> dict:
    """Columns as float arrays (``flags`` as a list of strings)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines:
        raise SeriesFormatError("empty series file")
    cols = lines[0].split("\t")
    if cols[0] != "tau":
        raise SeriesFormatError("first column must be 'tau'")
    raw = {c: [] for c in cols}
    for n, ln in enumerate(lines[1:], start=2):
        parts = ln.split("\t")
        if len(parts) != len(cols):
            raise SeriesFormatError(f"line {n}: {len(parts)} fields, expected {len(cols)}")
        for c, p in zip(cols, parts):
            raw[c].append(p)
    out = {}
    for c in cols:
        if c == "flags":
            out[c] = ["" if p == "-" else p for p in raw[c]]
            continue
        try:
            out[c] = np.array([float(p) for p in raw[c]])
        except ValueError as e:
            raise SeriesFormatError(f"column {c}: {e}") from None
    if np.any(np.diff(out["tau"]) <= 0):
        raise SeriesFormatError("tau is not strictly increasing")
    return out
