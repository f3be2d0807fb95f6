"""Artifact writers: legacy-ASCII VTK, deterministic CSV, npz checkpoints.

Byte layouts are documented in docs/formats.md.  All numeric formatting goes
through one shortest-roundtrip formatter so identical runs produce identical
bytes on one platform.
"""

from __future__ import annotations

import os

import numpy as np

from .fields import ScalarField, VectorField
from .grid import Grid


def fmt(x) -> str:
    """Shortest decimal that round-trips a float64 (repr), C locale."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: str, header: list, rows: list) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) if not isinstance(x, str) else x
                              for x in row) + "\n")


def cell_centered_velocity(v: VectorField):
    """Average the staggered components onto the cell centers."""
    uc = 0.5 * (v.u + np.roll(v.u, -1, 0))
    vc = 0.5 * (v.v + np.roll(v.v, -1, 1))
    wc = 0.5 * (v.w[:, :, :-1] + v.w[:, :, 1:])
    return uc, vc, wc


def write_vtk(path: str, grid: Grid, scalars: dict | None = None,
              vectors: dict | None = None) -> None:
    """Legacy ASCII VTK structured-points file with cell-centered data.

    Data are written as POINT_DATA on the lattice of cell centers (x fastest,
    then y, then z, matching the VTK convention).
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    nx, ny, nz = grid.n_x, grid.n_y, grid.n_z
    with open(path, "w", newline="\n") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("slipchannel cell-centered snapshot\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {nx} {ny} {nz}\n")
        fh.write(f"ORIGIN {fmt(grid.h_x / 2)} {fmt(grid.h_y / 2)} {fmt(grid.h_z / 2)}\n")
        fh.write(f"SPACING {fmt(grid.h_x)} {fmt(grid.h_y)} {fmt(grid.h_z)}\n")
        fh.write(f"POINT_DATA {nx * ny * nz}\n")
        for name, field in (scalars or {}).items():
            data = field.data if isinstance(field, ScalarField) else field
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for k in range(nz):
                for j in range(ny):
                    fh.write(" ".join(fmt(x) for x in data[:, j, k]) + "\n")
        for name, vec in (vectors or {}).items():
            uc, vc, wc = cell_centered_velocity(vec)
            fh.write(f"VECTORS {name} double\n")
            for k in range(nz):
                for j in range(ny):
                    for i in range(nx):
                        fh.write(f"{fmt(uc[i, j, k])} {fmt(vc[i, j, k])} "
                                 f"{fmt(wc[i, j, k])}\n")


def write_profile_csv(path: str, grid: Grid, profiles: dict) -> None:
    """1D z-profiles (x,y-averaged or sampled) as columns against z centers."""
    header = ["z"] + list(profiles)
    zc = grid.centers_z()
    rows = [[zc[k]] + [profiles[name][k] for name in profiles]
            for k in range(grid.n_z)]
    write_csv(path, header, rows)


def save_velocity_series(path: str, grid: Grid, times, velocities) -> None:
    arrays = {"times": np.asarray(times),
              "meta": np.array([grid.n_x, grid.n_y, grid.n_z]),
              "lengths": np.array([grid.L_x, grid.L_y, grid.H])}
    for n, v in enumerate(velocities):
        arrays[f"u_{n:05d}"] = v.u
        arrays[f"v_{n:05d}"] = v.v
        arrays[f"w_{n:05d}"] = v.w
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    np.savez_compressed(path, **arrays)


def load_velocity_series(path: str):
    from .grid import build_grid
    data = np.load(path)
    nx, ny, nz = (int(v) for v in data["meta"])
    lx, ly, h = (float(v) for v in data["lengths"])
    grid = build_grid(nx, ny, nz, lx, ly, h)
    times = data["times"]
    velocities = []
    for n in range(len(times)):
        velocities.append(VectorField(grid, data[f"u_{n:05d}"],
                                      data[f"v_{n:05d}"], data[f"w_{n:05d}"]))
    return grid, times, velocities
