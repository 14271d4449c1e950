"""Reader/writer for the F2D binary field format.

A record is one UTF-8 JSON header line terminated by ``\\n`` followed by
``nx*ny`` little-endian float64 values in row-major order.  Vector fields
are two consecutive records in one file.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .fields import GridSpec, ScalarField2D, VectorField2D


class F2DFormatError(ValueError):
    pass


def _header(grid: GridSpec) -> bytes:
    h = {
        "nx": grid.nx,
        "ny": grid.ny,
        "lx": grid.lx,
        "ly": grid.ly,
        "ox": grid.ox,
        "oy": grid.oy,
        "dtype": "f64",
        "layout": "row-major",
        "periodic": grid.periodic,
    }
    return (json.dumps(h) + "\n").encode("utf-8")


def write_record(fh: BinaryIO, grid: GridSpec, values: np.ndarray) -> None:
    fh.write(_header(grid))
    fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_record(fh: BinaryIO) -> tuple[GridSpec, np.ndarray] | None:
    line = fh.readline()
    if not line:
        return None
    if not line.endswith(b"\n"):
        raise F2DFormatError("truncated header line")
    try:
        h = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise F2DFormatError(f"bad header: {exc}") from exc
    if h.get("dtype", "f64") != "f64" or h.get("layout", "row-major") != "row-major":
        raise F2DFormatError(f"unsupported dtype/layout in header {h}")
    try:
        grid = GridSpec(
            int(h["nx"]),
            int(h["ny"]),
            float(h["lx"]),
            float(h["ly"]),
            float(h.get("ox", 0.0)),
            float(h.get("oy", 0.0)),
            periodic=bool(h.get("periodic", True)),
        )
    except KeyError as exc:
        raise F2DFormatError(f"header missing {exc}") from exc
    nbytes = 8 * grid.nx * grid.ny
    buf = fh.read(nbytes)
    if len(buf) != nbytes:
        raise F2DFormatError(f"expected {nbytes} payload bytes, got {len(buf)}")
    return grid, np.frombuffer(buf, dtype="<f8").reshape(grid.shape).astype(np.float64)


def save_scalar(path, fld: ScalarField2D) -> None:
    with open(path, "wb") as fh:
        write_record(fh, fld.grid, fld.values)


def save_vector(path, fld: VectorField2D) -> None:
    with open(path, "wb") as fh:
        write_record(fh, fld.grid, fld.u1)
        write_record(fh, fld.grid, fld.u2)


def load_records(path) -> list[tuple[GridSpec, np.ndarray]]:
    out = []
    with open(Path(path), "rb") as fh:
        while (rec := read_record(fh)) is not None:
            out.append(rec)
    if not out:
        raise F2DFormatError(f"{path}: no records")
    return out


def load_scalar(path) -> ScalarField2D:
    grid, values = load_records(path)[0]
    return ScalarField2D(grid, values)


def load_vector(path) -> VectorField2D:
    recs = load_records(path)
    if len(recs) < 2:
        raise F2DFormatError(f"{path}: vector field needs two records")
    (g1, a), (g2, b) = recs[:2]
    if g1 != g2:
        raise F2DFormatError(f"{path}: component grids differ")
    return VectorField2D(g1, a, b)
