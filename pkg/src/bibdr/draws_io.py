"""Posterior-draw serialization: long-format CSV and a columnar binary.

CSV layout: header ``iteration,parameter,index,value`` with one row per
scalar draw, floats printed with 17 significant digits so a write/read
round trip is bit-exact.

Binary layout (little-endian throughout):

    bytes 0-3    magic ``BIBD``
    bytes 4-5    format version, uint16 (currently 1)
    bytes 6-9    number of retained draws, uint32
    bytes 10-13  number of columns, uint32
    bytes 14-15  reserved, zero
    then per column: name length uint16, UTF-8 name, then the column as
    float64 values (one per draw), columns in file order.
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from .errors import SchemaError

MAGIC = b"BIBD"
VERSION = 1
_HEADER = struct.Struct("<4sHII2x")
CSV_HEADER = ["iteration", "parameter", "index", "value"]


def format_float(x: float) -> str:
    """Round-trip-exact float64 serialization: 17 significant digits."""
    return f"{float(x):.17g}"


def _columns(params: dict) -> dict:
    """Flatten a name -> (n_draws,) or (n_draws, d) dict into scalar columns."""
    out = {}
    for name, arr in params.items():
        arr = np.asarray(arr, dtype=float)
        if arr.ndim == 1:
            out[f"{name}[0]"] = arr
        elif arr.ndim == 2:
            for j in range(arr.shape[1]):
                out[f"{name}[{j}]"] = arr[:, j]
        else:
            raise SchemaError(f"parameter {name!r} has ndim {arr.ndim}; "
                              "only scalar or vector parameters are stored")
    return out


def write_draws_csv(path, params: dict) -> None:
    """Long-format CSV, deterministic byte-for-byte for equal inputs."""
    cols = _columns(params)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for name, col in cols.items():
            base, idx = name[:-1].rsplit("[", 1)
            for it, v in enumerate(col):
                w.writerow([it, base, idx, format_float(v)])


def read_draws_csv(path) -> dict:
    """Inverse of :func:`write_draws_csv`; returns name -> (n_draws, d)."""
    series = {}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header != CSV_HEADER:
            raise SchemaError(f"bad CSV header {header!r}")
        for row in rd:
            if len(row) != 4:
                raise SchemaError(f"bad CSV row {row!r}")
            _, name, idx, value = row
            series.setdefault(name, {}).setdefault(int(idx), []).append(
                float(value))
    out = {}
    for name, by_idx in series.items():
        d = max(by_idx) + 1
        n = len(by_idx[0])
        arr = np.empty((n, d))
        for j in range(d):
            if j not in by_idx or len(by_idx[j]) != n:
                raise SchemaError(f"ragged draws for parameter {name!r}")
            arr[:, j] = by_idx[j]
        out[name] = arr
    return out


def write_draws_bin(path, params: dict) -> None:
    """Columnar binary with the 16-byte header documented in the module."""
    cols = _columns(params)
    n_draws = {c.size for c in cols.values()}
    if len(n_draws) > 1:
        raise SchemaError("parameters have unequal draw counts")
    n = n_draws.pop() if n_draws else 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, len(cols)))
        for name, col in cols.items():
            enc = name.encode("utf-8")
            fh.write(struct.pack("<H", len(enc)))
            fh.write(enc)
            fh.write(np.ascontiguousarray(col, dtype="<f8").tobytes())


def read_draws_bin(path) -> dict:
    """Inverse of :func:`write_draws_bin`; returns name -> (n_draws, d)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise SchemaError("truncated header")
        magic, version, n, ncols, = _HEADER.unpack(head)
        if magic != MAGIC:
            raise SchemaError(f"bad magic {magic!r}")
        if version != VERSION:
            raise SchemaError(f"unsupported format version {version}")
        cols = {}
        for _ in range(ncols):
            (ln,) = struct.unpack("<H", fh.read(2))
            name = fh.read(ln).decode("utf-8")
            buf = fh.read(8 * n)
            if len(buf) != 8 * n:
                raise SchemaError(f"truncated column {name!r}")
            cols[name] = np.frombuffer(buf, dtype="<f8")
    out = {}
    for name, col in cols.items():
        base, idx = name[:-1].rsplit("[", 1)
        out.setdefault(base, {})[int(idx)] = col
    result = {}
    for base, by_idx in out.items():
        d = max(by_idx) + 1
        arr = np.empty((n, d))
        for j in range(d):
            if j not in by_idx:
                raise SchemaError(f"missing column {base}[{j}]")
            arr[:, j] = by_idx[j]
        result[base] = arr
    return result
