"""Simulation output writers: legacy VTK and benchmark CSV.

VTK output is one legacy structured-points ASCII file per retained
block plus a plain-text manifest indexing them, with cell centers as
points.  Density is zero at solid cells by convention.

The CSV schema is fixed by CSV_COLUMNS.  Logical columns (config,
counters, model predictions) come first and are byte-deterministic for
a given run configuration and seed; the trailing WALLCLOCK_COLUMNS
carry measured times and are the only columns allowed to differ
between repeat runs.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

CSV_COLUMNS = [
    "run_id",
    "geometry",
    "stencil",
    "layout",
    "pattern",
    "driver",
    "block_size",
    "porosity",
    "blocks",
    "cells",
    "fluid_cells",
    "steps",
    "workers",
    "seed",
    "cells_visited",
    "pdf_accesses",
    "idx_reads",
    "values_exchanged",
    "messages",
    "pdf_elements",
    "idx_elements",
    "model_bytes_per_update",
]

#: Measured wall-clock columns; kept last so the deterministic prefix
#: of each row can be compared byte for byte.
WALLCLOCK_COLUMNS = ["elapsed_s", "updates_per_s"]


def write_csv_records(records: list[dict], path) -> None:
    """Write benchmark rows against the fixed schema; missing keys
    become empty fields, unknown keys are rejected."""
    columns = CSV_COLUMNS + WALLCLOCK_COLUMNS
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for rec in records:
            unknown = set(rec) - set(columns)
            if unknown:
                raise ValueError(f"unknown CSV fields {sorted(unknown)}")
            writer.writerow({k: _fmt(rec.get(k, "")) for k in columns})


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)


def _vtk_header(title: str, dims3, origin3) -> list[str]:
    nx, ny, nz = dims3
    return [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {nx} {ny} {nz}",
        f"ORIGIN {origin3[0] + 0.5:g} {origin3[1] + 0.5:g} {origin3[2] + 0.5:g}",
        "SPACING 1 1 1",
        f"POINT_DATA {nx * ny * nz}",
    ]


def _as3(t, fill=0):
    return tuple(t) + (fill,) * (3 - len(t))


def write_vtk(domain, prefix) -> list[Path]:
    """Write density and velocity per block; returns written paths with
    the manifest first."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = []
    manifest_lines = ["# bid grid_pos origin dims file"]
    for bid in sorted(domain.blocks):
        block = domain.blocks[bid]
        rho, u = block.engine.macroscopic_fields()
        dim = len(block.flags.dims)
        fpath = prefix.with_name(f"{prefix.name}.block{bid:04d}.vtk")
        lines = _vtk_header(
            f"block {bid} density/velocity",
            _as3(block.flags.dims, fill=1),
            _as3(block.origin),
        )
        lines.append("SCALARS density double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(format(v, ".12g") for v in rho.reshape(-1))
        lines.append("VECTORS velocity double")
        uflat = u.reshape(-1, dim)
        for row in uflat:
            v3 = _as3(tuple(row), fill=0.0)
            lines.append(f"{v3[0]:.12g} {v3[1]:.12g} {v3[2]:.12g}")
        fpath.write_text("\n".join(lines) + "\n")
        paths.append(fpath)
        manifest_lines.append(
            f"{bid} {','.join(map(str, block.grid_pos))} "
            f"{','.join(map(str, block.origin))} "
            f"{','.join(map(str, block.flags.dims))} {fpath.name}"
        )
    mpath = prefix.with_name(prefix.name + ".manifest.txt")
    mpath.write_text("\n".join(manifest_lines) + "\n")
    return [mpath] + paths


def write_mask_vtk(mask, path) -> Path:
    """Solid-indicator preview of a voxel mask as one VTK file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = _vtk_header("voxel mask", _as3(mask.dims, fill=1), (0,) * 3)
    lines.append("SCALARS solid int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(int(v)) for v in mask.solid.reshape(-1))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_vtk_scalars(path, name: str) -> np.ndarray:
    """Parse one scalar field back out of a legacy ASCII file (x fastest);
    enough for tests and previews, not a general VTK reader."""
    lines = Path(path).read_text().splitlines()
    dims = None
    for i, line in enumerate(lines):
        if line.startswith("DIMENSIONS"):
            dims = tuple(int(x) for x in line.split()[1:4])
        if line.startswith(f"SCALARS {name} "):
            n = dims[0] * dims[1] * dims[2]
            vals = [float(x) for x in lines[i + 2 : i + 2 + n]]
            return np.asarray(vals).reshape(dims[::-1])
    raise ValueError(f"no SCALARS {name} in {path}")


def read_vtk_vectors(path, name: str) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    dims = None
    for i, line in enumerate(lines):
        if line.startswith("DIMENSIONS"):
            dims = tuple(int(x) for x in line.split()[1:4])
        if line.startswith(f"VECTORS {name} "):
            n = dims[0] * dims[1] * dims[2]
            vals = [[float(x) for x in row.split()] for row in lines[i + 1 : i + 1 + n]]
            return np.asarray(vals).reshape(dims[::-1] + (3,))
    raise ValueError(f"no VECTORS {name} in {path}")
