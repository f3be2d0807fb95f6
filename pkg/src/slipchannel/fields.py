"""Discrete fields bound to a staggered channel grid.

Fields are immutable after construction (the backing arrays are marked
read-only), so every operation in the package is a pure function and safe to
evaluate concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .grid import Grid

DEFAULT_TOL_DIV = 1e-10


class Position(Enum):
    CENTER = "center"
    FACE_X = "face_x"
    FACE_Y = "face_y"
    FACE_Z = "face_z"
    EDGE_XY = "edge_xy"   # z-edges, shape (nx, ny, nz)
    EDGE_XZ = "edge_xz"   # y-edges, shape (nx, ny, nz+1)
    EDGE_YZ = "edge_yz"   # x-edges, shape (nx, ny, nz+1)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ScalarField:
    """Cell-centered scalar, shape (nx, ny, nz)."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != self.grid.shape_centers:
            raise ValueError(f"scalar shape {self.data.shape} does not match "
                             f"grid centers {self.grid.shape_centers}")
        object.__setattr__(self, "data", _freeze(self.data))

    def mean(self) -> float:
        return float(self.data.mean())

    def shifted(self, c: float) -> "ScalarField":
        return ScalarField(self.grid, self.data + c)

    def zero_mean(self) -> "ScalarField":
        return self.shifted(-self.mean())

    def __add__(self, other):
        return ScalarField(self.grid, self.data + other.data)

    def __sub__(self, other):
        return ScalarField(self.grid, self.data - other.data)

    def __mul__(self, a: float):
        return ScalarField(self.grid, a * self.data)

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField:
    """Face-staggered velocity-like field.

    u, v carry shape (nx, ny, nz); w carries (nx, ny, nz+1) with the wall
    planes explicit.  `tangential` asserts exactly-zero wall planes of w,
    `solenoidal` asserts max |div| <= tol_div.
    """

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    tangential: bool = field(default=False)
    solenoidal: bool = field(default=False)
    tol_div: float = field(default=DEFAULT_TOL_DIV, compare=False)

    def __post_init__(self):
        g = self.grid
        if self.u.shape != g.shape_u or self.v.shape != g.shape_v \
                or self.w.shape != g.shape_w:
            raise ValueError("component shapes do not match the staggered layout")
        object.__setattr__(self, "u", _freeze(self.u))
        object.__setattr__(self, "v", _freeze(self.v))
        object.__setattr__(self, "w", _freeze(self.w))
        if self.tangential:
            if np.any(self.w[:, :, 0] != 0.0) or np.any(self.w[:, :, -1] != 0.0):
                raise ValueError("tangential field has nonzero wall-normal DOFs")
        if self.solenoidal:
            d = divergence_array(self)
            worst = float(np.abs(d).max())
            scale = max(1.0, float(max(np.abs(self.u).max(initial=0.0),
                                       np.abs(self.v).max(initial=0.0),
                                       np.abs(self.w).max(initial=0.0))))
            if worst > self.tol_div * scale:
                raise ValueError(f"field flagged solenoidal has max |div| = {worst:.3e}")

    # vector-space operations ---------------------------------------------

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.grid, self.u + other.u, self.v + other.v,
                           self.w + other.w)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.grid, self.u - other.u, self.v - other.v,
                           self.w - other.w)

    def __mul__(self, a: float) -> "VectorField":
        return VectorField(self.grid, a * self.u, a * self.v, a * self.w,
                           tangential=self.tangential, solenoidal=self.solenoidal)

    __rmul__ = __mul__

    def with_flags(self, tangential=None, solenoidal=None, tol_div=None) -> "VectorField":
        return VectorField(
            self.grid, self.u, self.v, self.w,
            tangential=self.tangential if tangential is None else tangential,
            solenoidal=self.solenoidal if solenoidal is None else solenoidal,
            tol_div=self.tol_div if tol_div is None else tol_div)

    # packing to/from the tangential DOF vector ----------------------------

    def to_dofs(self) -> np.ndarray:
        """Flatten to the tangential DOF vector (wall-normal w dropped)."""
        return np.concatenate([self.u.ravel(), self.v.ravel(),
                               self.w[:, :, 1:-1].ravel()])

    @staticmethod
    def from_dofs(grid: Grid, x: np.ndarray, **flags) -> "VectorField":
        n = grid.n_x * grid.n_y * grid.n_z
        m = grid.n_x * grid.n_y * (grid.n_z - 1)
        if x.shape != (2 * n + m,):
            raise ValueError("DOF vector length does not match grid")
        u = x[:n].reshape(grid.shape_u)
        v = x[n:2 * n].reshape(grid.shape_v)
        w = np.zeros(grid.shape_w)
        w[:, :, 1:-1] = x[2 * n:].reshape((grid.n_x, grid.n_y, grid.n_z - 1))
        return VectorField(grid, u, v, w, tangential=True, **flags)


@dataclass(frozen=True)
class TensorField:
    """Nine staggered gradient-like entries with their natural positions.

    entries[(i, j)] approximates d v_i / d x_j; diagonal entries live at
    centers, off-diagonal ones on the shared edge positions.
    """

    grid: Grid
    entries: dict

    POSITIONS = {
        ("x", "x"): Position.CENTER, ("y", "y"): Position.CENTER,
        ("z", "z"): Position.CENTER,
        ("x", "y"): Position.EDGE_XY, ("y", "x"): Position.EDGE_XY,
        ("x", "z"): Position.EDGE_XZ, ("z", "x"): Position.EDGE_XZ,
        ("y", "z"): Position.EDGE_YZ, ("z", "y"): Position.EDGE_YZ,
    }

    def position(self, key) -> Position:
        return self.POSITIONS[key]

    def weights(self, key) -> np.ndarray:
        return position_weights(self.grid, self.position(key))


def position_weights(grid: Grid, pos: Position) -> np.ndarray:
    """Quadrature weight array for a staggered position.

    Interior positions carry the cell volume; edge planes sitting on the
    walls carry half of it (trapezoid closure in z).
    """
    vc = grid.cell_volume
    if pos in (Position.CENTER, Position.FACE_X, Position.FACE_Y, Position.EDGE_XY):
        return np.full((grid.n_x, grid.n_y, grid.n_z), vc)
    if pos is Position.FACE_Z:
        w = np.full(grid.shape_w, vc)
        w[:, :, 0] = 0.5 * vc
        w[:, :, -1] = 0.5 * vc
        return w
    if pos in (Position.EDGE_XZ, Position.EDGE_YZ):
        w = np.full((grid.n_x, grid.n_y, grid.n_z + 1), vc)
        w[:, :, 0] = 0.5 * vc
        w[:, :, -1] = 0.5 * vc
        return w
    raise ValueError(f"unknown position {pos}")


# -- samplers -------------------------------------------------------------

def scalar_from_function(grid: Grid, f) -> ScalarField:
    """Sample f(x, y, z) at cell centers."""
    X, Y, Z = grid.meshgrid(grid.centers_x(), grid.centers_y(), grid.centers_z())
    return ScalarField(grid, f(X, Y, Z))


def vector_from_functions(grid: Grid, fu, fv, fw, **flags) -> VectorField:
    """Sample component callables at their native face positions."""
    cx, cy, cz = grid.centers_x(), grid.centers_y(), grid.centers_z()
    fx, fy, fz = grid.faces_x(), grid.faces_y(), grid.faces_z()
    Xu, Yu, Zu = grid.meshgrid(fx, cy, cz)
    Xv, Yv, Zv = grid.meshgrid(cx, fy, cz)
    Xw, Yw, Zw = grid.meshgrid(cx, cy, fz)
    return VectorField(grid, fu(Xu, Yu, Zu), fv(Xv, Yv, Zv), fw(Xw, Yw, Zw), **flags)


def zero_scalar(grid: Grid) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.shape_centers))


def zero_vector(grid: Grid, **flags) -> VectorField:
    flags.setdefault("tangential", True)
    flags.setdefault("solenoidal", True)
    return VectorField(grid, np.zeros(grid.shape_u), np.zeros(grid.shape_v),
                       np.zeros(grid.shape_w), **flags)


def curl_of_potential(grid: Grid, ax, ay, az, **flags) -> VectorField:
    """Exactly solenoidal face field as the discrete curl of an edge potential.

    ax, ay, az are callables sampled on the Yee edge positions; the resulting
    face field satisfies div_h(curl_h A) = 0 to machine precision.  If ax and
    ay vanish on the wall planes z=0, H the field is also tangential.
    """
    hx, hy, hz = grid.h_x, grid.h_y, grid.h_z
    cx, cy, cz = grid.centers_x(), grid.centers_y(), grid.centers_z()
    fx, fy, fz = grid.faces_x(), grid.faces_y(), grid.faces_z()
    # Ax on x-edges ((i+1/2)hx, j hy, k hz); Ay on y-edges (i hx, (j+1/2)hy, k hz);
    # Az on z-edges (i hx, j hy, (k+1/2)hz).
    Ax = ax(*grid.meshgrid(cx, fy, fz))
    Ay = ay(*grid.meshgrid(fx, cy, fz))
    Az = az(*grid.meshgrid(fx, fy, cz))
    u = (np.roll(Az, -1, axis=1) - Az) / hy - (Ay[:, :, 1:] - Ay[:, :, :-1]) / hz
    v = (Ax[:, :, 1:] - Ax[:, :, :-1]) / hz - (np.roll(Az, -1, axis=0) - Az) / hx
    w = (np.roll(Ay, -1, axis=0) - Ay) / hx - (np.roll(Ax, -1, axis=1) - Ax) / hy
    if flags.get("tangential"):
        # Profiles meant to vanish on the walls leave rounding dust there
        # (e.g. sin(pi*H)^2); snap it so the exact-zero invariant holds.
        scale = max(1.0, float(np.abs(w).max()))
        dust = max(float(np.abs(w[:, :, 0]).max()), float(np.abs(w[:, :, -1]).max()))
        if dust > 1e-12 * scale:
            raise ValueError("potential does not produce a tangential field "
                             f"(wall curl = {dust:.3e})")
        w[:, :, 0] = 0.0
        w[:, :, -1] = 0.0
    return VectorField(grid, u, v, w, **flags)


# -- divergence kept here so flag validation does not import calculus ------

def divergence_array(v: VectorField) -> np.ndarray:
    g = v.grid
    du = (np.roll(v.u, -1, axis=0) - v.u) / g.h_x
    dv = (np.roll(v.v, -1, axis=1) - v.v) / g.h_y
    dw = (v.w[:, :, 1:] - v.w[:, :, :-1]) / g.h_z
    return du + dv + dw
