"""Discrete dual-space machinery for the tangential velocity space.

A Functional is a covector over the tangential DOFs (quadrature weights
folded in).  The MetricContext carries the H1-type metric operator
K0 = A0 + I (slip form at nu=1, gamma=0 plus the L2 identity), its
factorization, and the saddle factorization behind the orthogonal projection
whose kernel is the discrete solenoidal tangential subspace.  Its dual
projection maps onto the annihilator of that subspace, and every annihilator
is realized by a cell pressure through one Neumann Poisson solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AnnihilatorError, MeanValueError, SolveError
from .fields import ScalarField, VectorField, _freeze
from .grid import Grid
from .poisson import solve_neumann, solve_neumann_cg
from .sampling import random_solenoidal, random_tangential
from .stencils import operator_cache


@dataclass(frozen=True)
class Functional:
    """Element of the dual of the tangential velocity space."""

    grid: Grid
    cov: np.ndarray
    annihilator: bool = field(default=False)

    def __post_init__(self):
        n = operator_cache(self.grid).n_tan
        if self.cov.shape != (n,):
            raise ValueError(f"covector length {self.cov.shape} != {n}")
        object.__setattr__(self, "cov", _freeze(self.cov))

    def pair(self, phi: VectorField) -> float:
        return float(self.cov @ phi.to_dofs())

    def __add__(self, other):
        return Functional(self.grid, self.cov + other.cov,
                          annihilator=self.annihilator and other.annihilator)

    def __sub__(self, other):
        return Functional(self.grid, self.cov - other.cov,
                          annihilator=self.annihilator and other.annihilator)

    def __mul__(self, a: float):
        return Functional(self.grid, a * self.cov, annihilator=self.annihilator)

    __rmul__ = __mul__


@dataclass(frozen=True)
class CellBox:
    """Half-open cell-index box used for subdomains (Omega_0, Bogovskii)."""

    i0: int
    i1: int
    j0: int
    j1: int
    k0: int
    k1: int

    @staticmethod
    def full(grid: Grid) -> "CellBox":
        return CellBox(0, grid.n_x, 0, grid.n_y, 0, grid.n_z)

    def mask(self, grid: Grid) -> np.ndarray:
        m = np.zeros(grid.shape_centers, dtype=bool)
        m[self.i0:self.i1, self.j0:self.j1, self.k0:self.k1] = True
        return m

    def mean(self, q: ScalarField) -> float:
        return float(q.data[self.mask(q.grid)].mean())


class MetricContext:
    """Shared, read-only solver state for one grid."""

    def __init__(self, grid: Grid, solver_tol: float = 1e-10, n_samples: int = 8,
                 seed: int = 20250809):
        self.grid = grid
        self.cache = operator_cache(grid)
        self.solver_tol = solver_tol
        cache = self.cache
        self.k0 = sp.csr_matrix(cache.slip_form(1.0, 0.0)
                                + cache.vc * sp.identity(cache.n_tan))
        self._k0_lu = None
        self._kkt_lu = None
        rng = np.random.default_rng(seed)
        self.solenoidal_samples = tuple(random_solenoidal(grid, rng)
                                        for _ in range(n_samples))
        self.tangential_samples = tuple(random_tangential(grid, rng)
                                        for _ in range(n_samples))

    # factorizations -------------------------------------------------------

    @property
    def k0_lu(self):
        if self._k0_lu is None:
            self._k0_lu = spla.splu(sp.csc_matrix(self.k0))
        return self._k0_lu

    @property
    def kkt_lu(self):
        """LU of [[K0, C^T], [C, 0]] with C = div minus one redundant row."""
        if self._kkt_lu is None:
            c = self.cache.div[1:, :]
            z = sp.csr_matrix((c.shape[0], c.shape[0]))
            kkt = sp.bmat([[self.k0, c.T], [c, z]], format="csc")
            self._kkt_lu = spla.splu(kkt)
        return self._kkt_lu

    def solve_k0(self, cov: np.ndarray) -> np.ndarray:
        return self.k0_lu.solve(cov)

    def h1_norm(self, v: VectorField) -> float:
        """Norm of the H1-type metric <(A0+I)v, v>."""
        x = v.to_dofs()
        return float(np.sqrt(max(x @ (self.k0 @ x), 0.0)))


_CTX = {}


def metric_context(grid: Grid, **kw) -> MetricContext:
    key = (grid, tuple(sorted(kw.items())))
    if key not in _CTX:
        _CTX[key] = MetricContext(grid, **kw)
    return _CTX[key]


# -- embeddings and norms -----------------------------------------------------

def embed(g: VectorField) -> Functional:
    """L2 embedding: pairing(embed(g), phi) = integral of g . phi."""
    cache = operator_cache(g.grid)
    return Functional(g.grid, cache.vc * g.to_dofs())


def dual_norm(ctx: MetricContext, f: Functional) -> float:
    """Negative-order norm sqrt(<f, (A0+I)^{-1} f>)."""
    x = ctx.solve_k0(f.cov)
    return float(np.sqrt(max(f.cov @ x, 0.0)))


def dual_inner(ctx: MetricContext, f: Functional, g: Functional) -> float:
    return float(f.cov @ ctx.solve_k0(g.cov))


# -- projections ---------------------------------------------------------------

def project_h1_complement(ctx: MetricContext, psi: VectorField) -> VectorField:
    """Orthogonal projection (in the A0+I metric) with solenoidal kernel.

    Solves `minimize ||psi - v||_{A0+I} over solenoidal tangential v` and
    returns psi - v*; discrete gradients of interior scalars are fixed
    points, solenoidal fields map to zero.
    """
    x = psi.to_dofs()
    v = _closest_solenoidal(ctx, x)
    return VectorField.from_dofs(ctx.grid, x - v)


def project_h1_onto_solenoidal(ctx: MetricContext, psi: VectorField) -> VectorField:
    """The complementary projection: nearest solenoidal tangential field."""
    return VectorField.from_dofs(ctx.grid, _closest_solenoidal(ctx, psi.to_dofs()),
                                 solenoidal=True)


def _closest_solenoidal(ctx: MetricContext, x: np.ndarray) -> np.ndarray:
    n = ctx.cache.n_tan
    rhs = np.concatenate([ctx.k0 @ x, np.zeros(ctx.cache.nc - 1)])
    sol = ctx.kkt_lu.solve(rhs)
    return sol[:n]


def project_dual_annihilator(ctx: MetricContext, f: Functional) -> Functional:
    """Dual orthogonal projection onto the annihilator of solenoidal fields.

    Realized through the primal projection conjugated with (A0+I); the
    conjugation identity E (A0+I)^{-1} = (A0+I)^{-1} E_dual holds by
    construction and is re-verified in the tests.
    """
    x = ctx.solve_k0(f.cov)
    e = x - _closest_solenoidal(ctx, x)
    return Functional(ctx.grid, ctx.k0 @ e, annihilator=True)


def annihilator_defect(ctx: MetricContext, f: Functional) -> float:
    """Relative pairing defect of f against sample solenoidal fields."""
    scale = dual_norm(ctx, f)
    if scale == 0.0:
        return 0.0
    worst = 0.0
    for phi in ctx.solenoidal_samples:
        worst = max(worst, abs(f.pair(phi)) / (scale * ctx.h1_norm(phi)))
    return worst


# -- pressure representation of annihilators (one Poisson solve) ---------------

def pressure_from_functional(ctx: MetricContext, f: Functional,
                             omega0: CellBox | None = None,
                             check: bool = True, rel_tol: float = 0.05,
                             method: str = "fft"):
    """Cell pressure p with pairing(f, psi) = -integral p div psi.

    p is unique once its mean over omega0 (default: the whole channel) is
    pinned to zero; the least-squares normal equations reduce to one Neumann
    Poisson solve.  `check` enforces that f has no solenoidal content
    (relative defect above rel_tol raises AnnihilatorError); discretization
    level defects of consistently embedded gradients pass.
    """
    grid = ctx.grid
    cache = ctx.cache
    if check and not f.annihilator:
        defect = annihilator_defect(ctx, f)
        if defect > rel_tol:
            raise AnnihilatorError(
                f"functional has solenoidal content (relative defect {defect:.3e}); "
                "pass an annihilator, e.g. the dual projection of this functional")
    rhs = (cache.div @ (f.cov / cache.vc)).reshape(grid.shape_centers)
    if method == "fft":
        p, _ = solve_neumann(grid, rhs)
    elif method == "cg":
        rng = np.random.default_rng(1234)
        x0 = rng.standard_normal(grid.shape_centers)
        p = solve_neumann_cg(grid, rhs, x0=x0, tol=1e-13)
    else:
        raise ValueError(f"unknown method {method!r}")
    box = omega0 if omega0 is not None else CellBox.full(grid)
    pf = ScalarField(grid, p)
    return pf.shifted(-box.mean(pf))


def reconstruction_defect(ctx: MetricContext, f: Functional, p: ScalarField) -> float:
    """Relative defect of pairing(f, psi) + integral p div psi over samples."""
    cache = ctx.cache
    resid_cov = f.cov - cache.grad_cov @ p.data.ravel()
    worst = 0.0
    scale = max(dual_norm(ctx, f), 1e-300)
    for phi in ctx.tangential_samples:
        worst = max(worst, abs(float(resid_cov @ phi.to_dofs()))
                    / (scale * ctx.h1_norm(phi)))
    return worst


# -- Bogovskii-type divergence inverse -----------------------------------------

def bogovskii(ctx: MetricContext, g: ScalarField, box: CellBox | None = None,
              tol_mv: float = 1e-10):
    """Vector field psi with div psi = g on the box, psi = 0 outside.

    Constrained least squares: minimize the H1 metric of psi subject to the
    divergence constraint and zero boundary DOFs.  Returns (psi, c) with the
    realized bound c = ||psi||_{1,2} / ||g||_2.
    """
    grid = ctx.grid
    cache = ctx.cache
    if box is None:
        box = CellBox.full(grid)
    mask = box.mask(grid)
    gvals = g.data[mask]
    vol = float(mask.sum()) * cache.vc
    mean = float(gvals.sum()) * cache.vc / vol
    scale = max(float(np.abs(g.data).max()), 1e-300)
    if abs(mean) > tol_mv * scale:
        raise MeanValueError(f"mean-value not zero on the subdomain: {mean:.3e}")

    dof_idx = _interior_face_dofs(grid, box)
    cell_idx = np.flatnonzero(mask.ravel())
    k_sub = sp.csc_matrix(ctx.k0[dof_idx][:, dof_idx])
    c_sub = cache.div[cell_idx][:, dof_idx]
    c_sub = c_sub[1:, :]  # one redundant constraint (total flux is zero)
    z = sp.csr_matrix((c_sub.shape[0], c_sub.shape[0]))
    kkt = sp.bmat([[k_sub, c_sub.T], [c_sub, z]], format="csc")
    rhs = np.concatenate([np.zeros(len(dof_idx)), g.data.ravel()[cell_idx][1:]])
    try:
        sol = spla.splu(kkt).solve(rhs)
    except RuntimeError as exc:  # pragma: no cover - singular subdomain
        raise SolveError(f"Bogovskii saddle solve failed: {exc}") from exc
    x = np.zeros(cache.n_tan)
    x[dof_idx] = sol[:len(dof_idx)]
    psi = VectorField.from_dofs(grid, x)
    gl2 = float(np.sqrt((g.data[mask] ** 2).sum() * cache.vc))
    c = ctx.h1_norm(psi) / max(gl2, 1e-300)
    return psi, c


def _interior_face_dofs(grid: Grid, box: CellBox) -> np.ndarray:
    """Tangential DOF indices strictly interior to the cell box."""
    nx, ny, nz = grid.n_x, grid.n_y, grid.n_z
    nu = nx * ny * nz
    spans_x = (box.i0 == 0 and box.i1 == nx)
    spans_y = (box.j0 == 0 and box.j1 == ny)

    def face_range(lo, hi, n, spans):
        if spans:
            return np.arange(n)
        return np.arange(lo + 1, hi)

    iu = face_range(box.i0, box.i1, nx, spans_x)
    ju = np.arange(box.j0, box.j1)
    ku = np.arange(box.k0, box.k1)
    u_idx = ((iu[:, None, None] * ny + ju[None, :, None]) * nz
             + ku[None, None, :]).ravel()

    iv = np.arange(box.i0, box.i1)
    jv = face_range(box.j0, box.j1, ny, spans_y)
    v_idx = nu + ((iv[:, None, None] * ny + jv[None, :, None]) * nz
                  + ku[None, None, :]).ravel()

    kw = np.arange(box.k0 + 1, box.k1)      # interior w levels, walls excluded
    w_idx = 2 * nu + ((iv[:, None, None] * ny + ju[None, :, None]) * (nz - 1)
                      + (kw[None, None, :] - 1)).ravel()
    return np.concatenate([u_idx, v_idx, w_idx])
