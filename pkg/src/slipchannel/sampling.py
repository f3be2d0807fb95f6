"""Seeded smooth random fields for probes, checks and ensembles.

Coefficients are drawn for a fixed set of low wavenumbers, so the same seed
produces the same continuum field on every grid; refinement studies then see
pure discretization differences.
"""

from __future__ import annotations

import numpy as np

from .fields import ScalarField, VectorField, curl_of_potential
from .grid import Grid

_MODES = ((1, 0), (0, 1), (1, 1), (2, 1), (1, 2))


def _fourier_xy(grid: Grid, rng) -> tuple:
    """Random trigonometric polynomial in (x, y); returns a closure."""
    amps = rng.standard_normal(len(_MODES) * 2).reshape(len(_MODES), 2)
    phx = rng.uniform(0, 2 * np.pi, len(_MODES))
    phy = rng.uniform(0, 2 * np.pi, len(_MODES))

    def f(x, y):
        acc = 0.0
        for (kx, ky), (a, b), px, py in zip(_MODES, amps, phx, phy):
            acc = acc + a * np.cos(2 * np.pi * kx * x / grid.L_x + px) \
                      * np.cos(2 * np.pi * ky * y / grid.L_y + py) \
                      + b * np.sin(2 * np.pi * kx * x / grid.L_x + py) \
                      * np.sin(2 * np.pi * ky * y / grid.L_y + px)
        return acc
    return f


def _wall_window(grid: Grid):
    """Quartic profile with exact zeros on both walls."""
    H = grid.H

    def s(z):
        t = z / H
        return 16.0 * (t * (1.0 - t)) ** 2
    return s


def _z_profile(grid: Grid, rng):
    c = rng.standard_normal(3)

    def f(z):
        t = z / grid.H
        return c[0] + c[1] * np.cos(np.pi * t) + c[2] * np.cos(2 * np.pi * t)
    return f


def random_tangential(grid: Grid, rng) -> VectorField:
    """Smooth random tangential field (exact zero wall-normal DOFs)."""
    fu_xy, fv_xy, fw_xy = (_fourier_xy(grid, rng) for _ in range(3))
    gu, gv = _z_profile(grid, rng), _z_profile(grid, rng)
    win = _wall_window(grid)
    cx, cy, cz = grid.centers_x(), grid.centers_y(), grid.centers_z()
    fx, fy, fz = grid.faces_x(), grid.faces_y(), grid.faces_z()
    Xu, Yu, Zu = grid.meshgrid(fx, cy, cz)
    Xv, Yv, Zv = grid.meshgrid(cx, fy, cz)
    Xw, Yw, Zw = grid.meshgrid(cx, cy, fz)
    return VectorField(grid,
                       fu_xy(Xu, Yu) * gu(Zu),
                       fv_xy(Xv, Yv) * gv(Zv),
                       fw_xy(Xw, Yw) * win(Zw),
                       tangential=True)


def random_solenoidal(grid: Grid, rng) -> VectorField:
    """Smooth random field that is exactly divergence free and tangential.

    Built as the discrete curl of an edge potential whose horizontal
    components vanish on the walls.
    """
    fax, fay, faz = (_fourier_xy(grid, rng) for _ in range(3))
    gz = _z_profile(grid, rng)
    win = _wall_window(grid)
    return curl_of_potential(
        grid,
        lambda x, y, z: fax(x, y) * win(z),
        lambda x, y, z: fay(x, y) * win(z),
        lambda x, y, z: faz(x, y) * gz(z),
        tangential=True, solenoidal=True)


def interior_window(grid: Grid, margin_cells: int = 3):
    """C2 window equal to 1 deep inside, exactly 0 within `margin_cells` of a wall."""
    a = margin_cells * grid.h_z
    b = min(2.0 * a, 0.45 * grid.H)
    if b <= a:
        raise ValueError("grid too coarse for the requested interior margin")

    def smooth(t):
        t = np.clip(t, 0.0, 1.0)
        return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)

    def win(z):
        rise = smooth((z - a) / (b - a))
        fall = smooth((grid.H - a - z) / (b - a))
        out = rise * fall
        return np.where((z <= a) | (z >= grid.H - a), 0.0, out)
    return win


def random_interior_scalar(grid: Grid, rng, margin_cells: int = 3) -> ScalarField:
    """Smooth random scalar supported strictly away from the walls."""
    f_xy = _fourier_xy(grid, rng)
    gz = _z_profile(grid, rng)
    win = interior_window(grid, margin_cells)
    X, Y, Z = grid.meshgrid(grid.centers_x(), grid.centers_y(), grid.centers_z())
    return ScalarField(grid, f_xy(X, Y) * gz(Z) * win(Z))
