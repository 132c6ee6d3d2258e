"""Output formats: CSV with round-trip doubles and the OSM1 binary field table.

OSM1 layout (little-endian throughout):

    b"OSM1" | uint32 header length | UTF-8 JSON header | column data

The header lists ``columns`` (names), ``rows`` and free-form ``meta``. Every
column is ``rows`` IEEE doubles; a complex array ``f`` is stored as the two
columns ``f.re`` and ``f.im``.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"OSM1"


def fmt(v) -> str:
    """17 significant digits, enough to read back the exact double."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_table(path, columns: dict, meta: dict | None = None) -> Path:
    """Write named 1-D arrays (real or complex, equal length) as an OSM1 table."""
    names, data = [], []
    rows = None
    for name, arr in columns.items():
        arr = np.asarray(arr)
        if arr.ndim != 1:
            raise ValueError(f"column {name!r} must be one-dimensional")
        if rows is None:
            rows = arr.size
        elif arr.size != rows:
            raise ValueError(f"column {name!r} has {arr.size} rows, expected {rows}")
        if np.iscomplexobj(arr):
            names += [f"{name}.re", f"{name}.im"]
            data += [arr.real, arr.imag]
        else:
            names.append(name)
            data.append(arr)
    header = json.dumps({"columns": names, "rows": rows or 0, "meta": meta or {}}, sort_keys=True).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for col in data:
            fh.write(np.ascontiguousarray(col, dtype="<f8").tobytes())
    return path


def read_table(path) -> tuple[dict, dict]:
    """Columns (complex pairs recombined) and the metadata of an OSM1 table."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not an OSM1 table")
    (n,) = struct.unpack("<I", raw[4:8])
    header = json.loads(raw[8:8 + n])
    rows = header["rows"]
    out, offset = {}, 8 + n
    for name in header["columns"]:
        out[name] = np.frombuffer(raw, dtype="<f8", count=rows, offset=offset).copy()
        offset += 8 * rows
    for name in [c[:-3] for c in header["columns"] if c.endswith(".re")]:
        if f"{name}.im" in out:
            out[name] = out.pop(f"{name}.re") + 1j * out.pop(f"{name}.im")
    return out, header["meta"]
