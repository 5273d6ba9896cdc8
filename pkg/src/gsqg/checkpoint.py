"""Field checkpoints: a magic line, a JSON header line, then little-endian float64 data."""
from __future__ import annotations

import json

import numpy as np

from .errors import ParameterError
from .spectral import Grid2D, ScalarField2D

MAGIC = b"GSQGFIELD\n"
SCHEMA_VERSION = 1


def write_checkpoint(path, field: ScalarField2D, representation="physical", meta=None) -> None:
    g = field.grid
    if representation == "physical":
        data = np.ascontiguousarray(field.physical, dtype="<f8")
    elif representation == "spectral":
        data = np.ascontiguousarray(field.spectral.view(float).astype("<f8"))
    else:
        raise ParameterError(f"unknown representation {representation!r}")
    header = {"schema_version": SCHEMA_VERSION, "n": g.n, "L": g.L,
              "representation": representation, "endianness": "little",
              "dtype": "float64", "shape": list(data.shape), "meta": meta or {}}
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(data.tobytes(order="C"))


def read_checkpoint(path):
    """Return ``(field, header)``."""
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise ParameterError(f"{path} is not a field checkpoint")
        header = json.loads(fh.readline())
        raw = fh.read()
    dtype = "<f8" if header.get("endianness", "little") == "little" else ">f8"
    data = np.frombuffer(raw, dtype=dtype).reshape(header["shape"]).astype(float)
    grid = Grid2D(int(header["n"]), float(header["L"]))
    if header["representation"] == "physical":
        field = ScalarField2D(grid, physical=data)
    else:
        field = ScalarField2D(grid, spectral=np.ascontiguousarray(data).view(complex))
    return field, header


def export_csv(path, field: ScalarField2D) -> None:
    """Physical values as ``x1,x2,value`` rows (debugging aid)."""
    g = field.grid
    X, Y = g.mesh
    rows = np.column_stack([X.ravel(), Y.ravel(), field.physical.ravel()])
    np.savetxt(path, rows, delimiter=",", header="x1,x2,value", comments="", fmt="%.17g")
