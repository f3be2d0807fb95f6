"""Discrete differential calculus, quadrature and traces on channel fields."""

from __future__ import annotations

import numpy as np

from .fields import (Position, ScalarField, TensorField, VectorField,
                     divergence_array, position_weights)
from .grid import Grid
from .stencils import operator_cache


# -- first-order operators ---------------------------------------------------

def divergence(v: VectorField) -> ScalarField:
    return ScalarField(v.grid, divergence_array(v))


def gradient(q: ScalarField, wall: str = "one_sided") -> VectorField:
    """Staggered gradient of a cell scalar onto the faces.

    wall="one_sided" fills the wall-normal entries with the second-order
    one-sided derivative (field semantics); wall="zero_flux" leaves them zero
    (the exact negative adjoint of the divergence on tangential fields, used
    by all projection machinery).
    """
    g = q.grid
    p = q.data
    gu = (p - np.roll(p, 1, axis=0)) / g.h_x
    gv = (p - np.roll(p, 1, axis=1)) / g.h_y
    gw = np.zeros(g.shape_w)
    gw[:, :, 1:-1] = (p[:, :, 1:] - p[:, :, :-1]) / g.h_z
    if wall == "one_sided":
        h = g.h_z
        gw[:, :, 0] = (-2.0 * p[:, :, 0] + 3.0 * p[:, :, 1] - p[:, :, 2]) / h
        gw[:, :, -1] = (2.0 * p[:, :, -1] - 3.0 * p[:, :, -2] + p[:, :, -3]) / h
    elif wall != "zero_flux":
        raise ValueError(f"unknown wall treatment {wall!r}")
    return VectorField(g, gu, gv, gw, tangential=(wall == "zero_flux"))


def laplacian(q: ScalarField, wall: str = "one_sided") -> ScalarField:
    """Scalar Laplacian, literally divergence(gradient(.)) for any wall option."""
    return divergence(gradient(q, wall=wall))


def sym_gradient(v: VectorField) -> TensorField:
    """Symmetric part of the staggered velocity gradient, entrywise."""
    cache = operator_cache(v.grid)
    x = v.to_dofs()
    e = cache.grad_entries
    g = v.grid
    shapes = {
        Position.CENTER: g.shape_centers,
        Position.EDGE_XY: (g.n_x, g.n_y, g.n_z),
        Position.EDGE_XZ: (g.n_x, g.n_y, g.n_z + 1),
        Position.EDGE_YZ: (g.n_x, g.n_y, g.n_z + 1),
    }
    entries = {}
    for (i, j), pos in TensorField.POSITIONS.items():
        d = 0.5 * ((e[(i, j)] @ x) + (e[(j, i)] @ x))
        entries[(i, j)] = d.reshape(shapes[pos])
    return TensorField(v.grid, entries)


def gradient_tensor(v: VectorField) -> TensorField:
    """Full staggered velocity gradient (entry (i, j) = d v_i / d x_j)."""
    cache = operator_cache(v.grid)
    x = v.to_dofs()
    e = cache.grad_entries
    g = v.grid
    shapes = {
        Position.CENTER: g.shape_centers,
        Position.EDGE_XY: (g.n_x, g.n_y, g.n_z),
        Position.EDGE_XZ: (g.n_x, g.n_y, g.n_z + 1),
        Position.EDGE_YZ: (g.n_x, g.n_y, g.n_z + 1),
    }
    entries = {}
    for (i, j), pos in TensorField.POSITIONS.items():
        entries[(i, j)] = (e[(i, j)] @ x).reshape(shapes[pos])
    return TensorField(v.grid, entries)


def advect(v: VectorField, w: VectorField) -> VectorField:
    """(v . grad) w interpolated to the faces of w (plain advective form)."""
    cache = operator_cache(v.grid)
    vals = cache.advection_matrix(v.to_dofs(), form="advective") @ w.to_dofs()
    return VectorField.from_dofs(v.grid, vals)


def vector_laplacian(v: VectorField) -> VectorField:
    """Componentwise Laplacian (diagnostic; one-sided walls)."""
    cache = operator_cache(v.grid)
    return VectorField.from_dofs(v.grid, cache.vec_laplacian @ v.to_dofs())


def diff(field, kind: str, other=None, wall: str = "one_sided"):
    """Dispatch entry point for the discrete differential operators."""
    if kind == "gradient":
        return gradient(field, wall=wall)
    if kind == "divergence":
        return divergence(field)
    if kind == "laplacian":
        if isinstance(field, VectorField):
            return vector_laplacian(field)
        return laplacian(field, wall=wall)
    if kind == "sym_gradient":
        return sym_gradient(field)
    if kind == "advection":
        if other is None:
            raise ValueError("advection needs the transported field: diff(v, 'advection', w)")
        return advect(field, other)
    raise ValueError(f"unknown operator kind {kind!r}")


# -- quadrature ---------------------------------------------------------------

def integrate(field, region: str = "volume") -> float:
    """Midpoint quadrature over the channel volume or the two wall surfaces.

    Volume: plain integral of a ScalarField.  Wall surfaces: for a
    ScalarField, the integral of its extrapolated wall trace; for a
    VectorField, the integral of |trace v|^2 over both walls (the quantity
    entering the friction term).
    """
    if region == "volume":
        if isinstance(field, ScalarField):
            return float(field.data.sum() * field.grid.cell_volume)
        raise TypeError("volume integration expects a ScalarField")
    if region == "wall_surfaces":
        g = field.grid
        ds = g.wall_area_element
        if isinstance(field, ScalarField):
            bottom = 1.5 * field.data[:, :, 0] - 0.5 * field.data[:, :, 1]
            top = 1.5 * field.data[:, :, -1] - 0.5 * field.data[:, :, -2]
            return float((bottom.sum() + top.sum()) * ds)
        if isinstance(field, VectorField):
            total = 0.0
            for wall in ("bottom", "top"):
                tr = trace(field, wall)
                total += float((tr["u"] ** 2 + tr["v"] ** 2 + tr["w"] ** 2).sum() * ds)
            return total
    raise ValueError(f"unknown region {region!r}")


def dot(a: VectorField, b: VectorField) -> float:
    """L2 inner product of two face fields (wall-face halves for w)."""
    ww = position_weights(a.grid, Position.FACE_Z)
    vc = a.grid.cell_volume
    return float((a.u * b.u).sum() * vc + (a.v * b.v).sum() * vc
                 + (a.w * b.w * ww).sum())


def norm(field, q: float = 2, space: str = "Lq") -> float:
    """L^q or W^{1,q} norm by DOF quadrature (q = inf gives the max)."""
    if not (q >= 1):
        raise ValueError(f"q must satisfy q >= 1, got {q}")
    if space == "Lq":
        return _lq(field, q)
    if space == "W1q":
        if isinstance(field, ScalarField):
            return _lq(field, q) + _lq(gradient(field), q)
        return _lq(field, q) + _tensor_lq(gradient_tensor(field), q)
    raise ValueError(f"unknown space {space!r}")


def _lq(field, q) -> float:
    if isinstance(field, ScalarField):
        pieces = [(field.data, np.full(field.data.shape, field.grid.cell_volume))]
    else:
        g = field.grid
        vc = np.full(g.shape_u, g.cell_volume)
        pieces = [(field.u, vc), (field.v, vc),
                  (field.w, position_weights(g, Position.FACE_Z))]
    if np.isinf(q):
        return max(float(np.abs(a).max()) for a, _ in pieces)
    acc = sum(float((np.abs(a) ** q * w).sum()) for a, w in pieces)
    return acc ** (1.0 / q)


def _tensor_lq(t: TensorField, q) -> float:
    if np.isinf(q):
        return max(float(np.abs(a).max()) for a in t.entries.values())
    acc = 0.0
    for key, a in t.entries.items():
        acc += float((np.abs(a) ** q * t.weights(key)).sum())
    return acc ** (1.0 / q)


def grad_norm_l2(v: VectorField) -> float:
    """||grad v||_2 over all nine staggered entries."""
    return _tensor_lq(gradient_tensor(v), 2)


# -- traces --------------------------------------------------------------------

def trace(v: VectorField, wall: str) -> dict:
    """Wall trace: tangential components by second-order extrapolation,
    normal component read from the wall face DOFs."""
    if wall == "bottom":
        u = 1.5 * v.u[:, :, 0] - 0.5 * v.u[:, :, 1]
        vv = 1.5 * v.v[:, :, 0] - 0.5 * v.v[:, :, 1]
        w = v.w[:, :, 0].copy()
    elif wall == "top":
        u = 1.5 * v.u[:, :, -1] - 0.5 * v.u[:, :, -2]
        vv = 1.5 * v.v[:, :, -1] - 0.5 * v.v[:, :, -2]
        w = v.w[:, :, -1].copy()
    else:
        raise ValueError(f"wall must be 'bottom' or 'top', got {wall!r}")
    return {"u": u, "v": vv, "w": w}


# -- measurement Laplacians ------------------------------------------------------

def interior_laplacian_defect(q: ScalarField, margin: int = 2,
                              spacing: int = 1) -> float:
    """max |Laplacian q| over cells at least `margin` cells from the walls.

    spacing=1 uses the compact 7-point stencil; spacing=2 uses the same
    stencil at doubled spacing, an independent consistent Laplacian that is
    not the operator any reconstruction in this package inverts.
    """
    g = q.grid
    s = spacing
    p = q.data
    lap = ((np.roll(p, -s, 0) - 2 * p + np.roll(p, s, 0)) / (s * g.h_x) ** 2
           + (np.roll(p, -s, 1) - 2 * p + np.roll(p, s, 1)) / (s * g.h_y) ** 2)
    zpart = np.zeros_like(p)
    zpart[:, :, s:-s] = (p[:, :, 2 * s:] - 2 * p[:, :, s:-s] + p[:, :, :-2 * s]) \
        / (s * g.h_z) ** 2
    lap = lap + zpart
    lo = max(margin, s)
    band = lap[:, :, lo:g.n_z - lo]
    if band.size == 0:
        raise ValueError("margin leaves no interior cells")
    return float(np.abs(band).max())
