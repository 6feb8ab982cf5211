"""On-disk formats: WIG1 snapshots, CSV series and marginals, JSON documents.

WIG1 layout (little-endian): magic b"WIG1", int64 nx, int64 np, float64
x_min, x_max, p_min, p_max, hbar, time, then nx*np float64 samples, row-major
with x as the slow index.
"""
from __future__ import annotations

import csv
import json
import math
import struct
from pathlib import Path

import numpy as np

from .phase_space import PhaseSpaceGrid, WignerField, marginals, moments

__all__ = [
    "SnapshotFormatError",
    "write_snapshot",
    "read_snapshot",
    "write_marginals_csv",
    "write_moments_csv",
    "write_series_csv",
    "read_series_csv",
    "write_json",
    "read_json",
    "jsonable",
]

MAGIC = b"WIG1"
HEADER = struct.Struct("<4sqq6d")


class SnapshotFormatError(ValueError):
    pass


def write_snapshot(path, w: WignerField) -> Path:
    g = w.grid
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, g.nx, g.np, *g.x_extent, *g.p_extent, g.hbar, w.time))
        fh.write(np.ascontiguousarray(w.values, dtype="<f8").tobytes())
    return path


def read_snapshot(path) -> WignerField:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise SnapshotFormatError("file shorter than the WIG1 header")
    magic, nx, np_, x0, x1, p0, p1, hbar, t = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    expected = HEADER.size + 8 * nx * np_
    if len(data) != expected:
        raise SnapshotFormatError(f"expected {expected} bytes, found {len(data)}")
    grid = PhaseSpaceGrid(int(nx), int(np_), (x0, x1), (p0, p1), hbar)
    values = np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(nx, np_)
    return WignerField(grid, values, t)


def write_marginals_csv(path, w: WignerField) -> Path:
    px, pp = marginals(w)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["axis", "coordinate", "density"])
        for c, v in zip(w.grid.x, px):
            out.writerow(["x", repr(float(c)), repr(float(v))])
        for c, v in zip(w.grid.p, pp):
            out.writerow(["p", repr(float(c)), repr(float(v))])
    return path


def write_moments_csv(path, w: WignerField) -> Path:
    m = moments(w)
    cov = m["covariance"]
    path = Path(path)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "mean_x", "mean_p", "var_x", "var_p", "cov_xp"])
        out.writerow([repr(float(v)) for v in (w.time, m["mean_x"], m["mean_p"], cov[0, 0], cov[1, 1], cov[0, 1])])
    return path


def write_series_csv(path, columns, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(columns)
        for row in rows:
            out.writerow([repr(float(v)) for v in row])
    return path


def read_series_csv(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = [[] for _ in header]
        for row in reader:
            for i, v in enumerate(row):
                cols[i].append(float(v))
    return {h: np.asarray(c) for h, c in zip(header, cols)}


def jsonable(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())
