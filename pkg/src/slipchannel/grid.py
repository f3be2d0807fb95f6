"""Staggered (MAC) discretization of a 3D channel.

The channel is periodic in x and y and bounded by two flat walls at z=0 and
z=H.  Scalars live at cell centers, velocity components on cell faces:

  - centers  (nx, ny, nz)    at ((i+1/2)hx, (j+1/2)hy, (k+1/2)hz)
  - u faces  (nx, ny, nz)    at (i hx,      (j+1/2)hy, (k+1/2)hz)
  - v faces  (nx, ny, nz)    at ((i+1/2)hx, j hy,      (k+1/2)hz)
  - w faces  (nx, ny, nz+1)  at ((i+1/2)hx, (j+1/2)hy, k hz)

w[..., 0] and w[..., nz] sit on the walls; a tangential field keeps them at
exactly zero.  This staggering makes the discrete divergence and gradient
exact negative adjoints on tangential fields, so the discrete Helmholtz
decomposition is exactly L2-orthogonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_CELLS = 4


@dataclass(frozen=True)
class Grid:
    """Uniform staggered channel grid (periodic x,y; walls at z=0 and z=H)."""

    n_x: int
    n_y: int
    n_z: int
    L_x: float
    L_y: float
    H: float

    @property
    def h_x(self) -> float:
        return self.L_x / self.n_x

    @property
    def h_y(self) -> float:
        return self.L_y / self.n_y

    @property
    def h_z(self) -> float:
        return self.H / self.n_z

    @property
    def cell_volume(self) -> float:
        return self.h_x * self.h_y * self.h_z

    @property
    def wall_area_element(self) -> float:
        return self.h_x * self.h_y

    @property
    def volume(self) -> float:
        return self.L_x * self.L_y * self.H

    @property
    def n_cells(self) -> int:
        return self.n_x * self.n_y * self.n_z

    @property
    def shape_centers(self):
        return (self.n_x, self.n_y, self.n_z)

    @property
    def shape_u(self):
        return (self.n_x, self.n_y, self.n_z)

    @property
    def shape_v(self):
        return (self.n_x, self.n_y, self.n_z)

    @property
    def shape_w(self):
        return (self.n_x, self.n_y, self.n_z + 1)

    @property
    def n_tangential(self) -> int:
        """Number of tangential velocity DOFs (wall-normal w excluded)."""
        n = self.n_x * self.n_y
        return 2 * n * self.n_z + n * (self.n_z - 1)

    # coordinate arrays -------------------------------------------------

    def centers_x(self):
        return (np.arange(self.n_x) + 0.5) * self.h_x

    def centers_y(self):
        return (np.arange(self.n_y) + 0.5) * self.h_y

    def centers_z(self):
        return (np.arange(self.n_z) + 0.5) * self.h_z

    def faces_x(self):
        return np.arange(self.n_x) * self.h_x

    def faces_y(self):
        return np.arange(self.n_y) * self.h_y

    def faces_z(self):
        return np.arange(self.n_z + 1) * self.h_z

    def meshgrid(self, xs, ys, zs):
        return np.meshgrid(xs, ys, zs, indexing="ij")

    def refine(self, factor: int = 2) -> "Grid":
        """Same channel with every cell count multiplied by `factor`."""
        return Grid(self.n_x * factor, self.n_y * factor, self.n_z * factor,
                    self.L_x, self.L_y, self.H)


@dataclass(frozen=True)
class BoundaryData:
    """Viscosity and wall friction coefficient of the slip condition.

    nu > 0 is the kinematic viscosity; gamma >= 0 couples the tangential
    boundary stress to the tangential velocity at both walls.
    """

    nu: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"viscosity must be positive, got nu={self.nu}")
        if self.gamma < 0:
            raise ValueError(f"friction must be nonnegative, got gamma={self.gamma}")


def build_grid(n_x: int, n_y: int, n_z: int,
               L_x: float, L_y: float, H: float) -> Grid:
    """Construct a channel grid, validating counts and lengths.

    Counts below 4 are rejected: the wide interior stencils and the
    one-sided wall closures need at least that many layers.
    """
    for name, n in (("n_x", n_x), ("n_y", n_y), ("n_z", n_z)):
        if int(n) != n or n < MIN_CELLS:
            raise ValueError(f"count below minimum: {name}={n} (need >= {MIN_CELLS})")
    for name, length in (("L_x", L_x), ("L_y", L_y), ("H", H)):
        if not length > 0:
            raise ValueError(f"length must be positive: {name}={length}")
    return Grid(int(n_x), int(n_y), int(n_z), float(L_x), float(L_y), float(H))
