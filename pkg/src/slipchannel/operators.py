"""The slip Stokes form, skew convection, resolvents and the Stokes evolution.

The viscous slip form is assembled as a Gram matrix (symmetric PSD by
construction); convection is discretized in the skew form
b(v, w, phi) = 1/2 [T(v, w, phi) - T(v, phi, w)], so that b(v, w, w) = 0
holds to machine precision for every v.  Divergence constraints are enforced
through symmetric saddle systems factorized once per operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .calculus import norm
from .errors import SolveError
from .fields import ScalarField, VectorField
from .grid import BoundaryData, Grid
from .spaces import Functional, MetricContext
from .stencils import operator_cache


class SlipStokesOperator:
    """Bilinear slip form <A v, phi> = 2 nu (grad v)_s:(grad phi)_s + gamma wall."""

    def __init__(self, grid: Grid, bc: BoundaryData):
        self.grid = grid
        self.bc = bc
        self.cache = operator_cache(grid)
        self.matrix = self.cache.slip_form(bc.nu, bc.gamma)
        self._lu = {}

    def apply(self, v: VectorField) -> Functional:
        return Functional(self.grid, self.matrix @ v.to_dofs())

    def energy(self, v: VectorField) -> float:
        x = v.to_dofs()
        return float(x @ (self.matrix @ x))

    def _shifted_lu(self, k: float):
        if k not in self._lu:
            if k == 0.0 and self.bc.gamma == 0.0:
                raise SolveError(
                    "A alone is singular for gamma=0 (rigid translations); "
                    "use k > 0 or gamma > 0")
            m = self.matrix + k * self.cache.vc * sp.identity(self.cache.n_tan)
            self._lu[k] = spla.splu(sp.csc_matrix(m))
        return self._lu[k]


def apply_A(op: SlipStokesOperator, v: VectorField) -> Functional:
    return op.apply(v)


def apply_B(grid: Grid, v: VectorField, w: VectorField) -> Functional:
    """Covector of the skew convection form b(v, w, .)."""
    cache = operator_cache(grid)
    return Functional(grid, cache.skew_advection_cov(v.to_dofs(), w.to_dofs()))


def resolvent(op: SlipStokesOperator, g, k: float) -> VectorField:
    """Solve <(A + k I) v, phi> = pairing(g, phi) for all tangential phi."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    cov = g.cov if isinstance(g, Functional) else (op.cache.vc * g.to_dofs())
    x = op._shifted_lu(float(k)).solve(cov)
    return VectorField.from_dofs(op.grid, x)


# -- divergence-constrained solves ----------------------------------------------

class SaddleSolver:
    """LU of [[K, G], [G^T, 0]] with one pinned pressure DOF.

    K acts on tangential DOFs, G is the pressure-gradient covector matrix
    with its first column dropped (the constraint it encodes is implied by
    the remaining ones for tangential fields).
    """

    def __init__(self, cache, k_mat):
        self.cache = cache
        g = cache.grad_cov[:, 1:]
        z = sp.csr_matrix((g.shape[1], g.shape[1]))
        self.n = cache.n_tan
        self.lu = spla.splu(sp.bmat([[k_mat, g], [g.T, z]], format="csc"))

    def solve(self, rhs_cov: np.ndarray):
        rhs = np.concatenate([rhs_cov, np.zeros(self.cache.nc - 1)])
        sol = self.lu.solve(rhs)
        mult = np.zeros(self.cache.nc)
        mult[1:] = sol[self.n:]
        return sol[:self.n], mult


def yosida(op: SlipStokesOperator, v: VectorField, k: float,
           _memo={}) -> VectorField:
    """Resolvent smoothing (I + A_sigma / k)^{-1} v on the solenoidal subspace."""
    if not k > 0:
        raise ValueError("k must be positive")
    key = (id(op), float(k))
    if key not in _memo:
        m = op.cache.vc * sp.identity(op.cache.n_tan)
        _memo[key] = SaddleSolver(op.cache, sp.csc_matrix(m + op.matrix / float(k)))
    x, _ = _memo[key].solve(op.cache.vc * v.to_dofs())
    return VectorField.from_dofs(op.grid, x, solenoidal=True)


# -- unsteady Stokes ---------------------------------------------------------------

@dataclass
class StokesEvolutionResult:
    """Implicit-Euler Stokes trajectory with its pressure and norm ledgers."""

    grid: Grid
    bc: BoundaryData
    dt: float
    times: np.ndarray
    velocities: list
    pressures: list
    norms: dict

    def velocity(self, n: int) -> VectorField:
        return self.velocities[n]


def unsteady_stokes(grid: Grid, bc: BoundaryData, forcing, u0: VectorField,
                    dt: float, n_steps: int, lebesgue_q: float = 2.0) -> StokesEvolutionResult:
    """March du/dt + A u = P g with implicit Euler under the div constraint.

    `forcing` maps a step index to a tangential VectorField (or None for
    zero).  Every iterate is exactly divergence free with zero wall-normal
    DOFs; per-step norms of du/dt, u (second order) and the pressure are
    recorded for the maximal-regularity-style ledger.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    op = SlipStokesOperator(grid, bc)
    cache = op.cache
    solver = SaddleSolver(cache, sp.csc_matrix(
        cache.vc * sp.identity(cache.n_tan) + dt * op.matrix))
    u = u0
    velocities = [u0]
    pressures = [ScalarField(grid, np.zeros(grid.shape_centers))]
    nt, n2, np1 = [], [], []
    for n in range(n_steps):
        g_n = forcing(n) if forcing is not None else None
        rhs = cache.vc * u.to_dofs()
        if g_n is not None:
            rhs = rhs + dt * cache.vc * g_n.to_dofs()
        x, mult = solver.solve(rhs)
        u_next = VectorField.from_dofs(grid, x, solenoidal=True)
        pi = ScalarField(grid, (mult / dt).reshape(grid.shape_centers)).zero_mean()
        dudt = VectorField.from_dofs(grid, (u_next.to_dofs() - u.to_dofs()) / dt)
        nt.append(norm(dudt, lebesgue_q))
        n2.append(w2q_norm(u_next, lebesgue_q))
        np1.append(norm(pi, lebesgue_q, "W1q"))
        velocities.append(u_next)
        pressures.append(pi)
        u = u_next
    return StokesEvolutionResult(
        grid, bc, dt, np.arange(n_steps + 1) * dt, velocities, pressures,
        {"dt_u_q": np.array(nt), "u_2q": np.array(n2), "pi_1q": np.array(np1)})


def w2q_norm(v: VectorField, q: float) -> float:
    """Discrete W^{2,q} norm: field + gradient + pure second differences."""
    base = norm(v, q, "W1q")
    g = v.grid
    hx2, hy2, hz2 = g.h_x ** 2, g.h_y ** 2, g.h_z ** 2
    pieces = []
    for arr, axis_h in ((v.u, (hx2, hy2, hz2)), (v.v, (hx2, hy2, hz2)),
                        (v.w, (hx2, hy2, hz2))):
        for ax in (0, 1):
            pieces.append((np.roll(arr, -1, ax) - 2 * arr + np.roll(arr, 1, ax))
                          / axis_h[ax])
        d2z = np.zeros_like(arr)
        d2z[:, :, 1:-1] = (arr[:, :, 2:] - 2 * arr[:, :, 1:-1] + arr[:, :, :-2]) / axis_h[2]
        d2z[:, :, 0] = (2 * arr[:, :, 0] - 5 * arr[:, :, 1] + 4 * arr[:, :, 2]
                        - arr[:, :, 3]) / axis_h[2]
        d2z[:, :, -1] = (2 * arr[:, :, -1] - 5 * arr[:, :, -2] + 4 * arr[:, :, -3]
                         - arr[:, :, -4]) / axis_h[2]
        pieces.append(d2z)
    vc = v.grid.cell_volume
    if np.isinf(q):
        second = max(float(np.abs(p).max()) for p in pieces)
    else:
        second = sum(float((np.abs(p) ** q).sum() * vc) for p in pieces) ** (1.0 / q)
    return base + second


# -- exponent bookkeeping -----------------------------------------------------------

def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        if x.is_integer():
            return Fraction(int(x))
        raise ValueError(
            f"{x!r} is a non-integer float; pass a Fraction or a string like '4/3' "
            "so the exponent identity can be checked exactly")
    raise TypeError(f"cannot interpret exponent {x!r}")


def maximal_regularity_exponents_ok(r, q) -> bool:
    """Exact check of 1 < q < 3/2, 1 < r < 2 and 2/r + 3/q = 4."""
    r, q = _as_fraction(r), _as_fraction(q)
    if not (1 < q < Fraction(3, 2) and 1 < r < 2):
        return False
    return 2 / r + 3 / q == 4
