"""Direct Poisson solver for the channel: periodic in x,y, Neumann in z.

The cell-centered Laplacian with zero-flux wall closure diagonalizes under
FFT in the periodic directions; each Fourier mode leaves a tridiagonal
system in z solved by a vectorized Thomas sweep.  The solve is direct
(machine-precision residual) and bitwise deterministic, which the Helmholtz
projection and the dual-space pressure reconstruction lean on.
"""

from __future__ import annotations

import numpy as np

from .errors import SolveError
from .fields import ScalarField, VectorField
from .grid import Grid


def neumann_laplacian_array(grid: Grid, p: np.ndarray) -> np.ndarray:
    """Cell Laplacian with periodic x,y and zero-flux walls (div o grad)."""
    hx2, hy2, hz2 = grid.h_x ** 2, grid.h_y ** 2, grid.h_z ** 2
    lap = ((np.roll(p, -1, 0) - 2 * p + np.roll(p, 1, 0)) / hx2
           + (np.roll(p, -1, 1) - 2 * p + np.roll(p, 1, 1)) / hy2)
    z = np.zeros_like(p)
    z[:, :, 1:-1] = (p[:, :, 2:] - 2 * p[:, :, 1:-1] + p[:, :, :-2]) / hz2
    z[:, :, 0] = (p[:, :, 1] - p[:, :, 0]) / hz2
    z[:, :, -1] = (p[:, :, -2] - p[:, :, -1]) / hz2
    return lap + z


def solve_neumann(grid: Grid, rhs: np.ndarray):
    """Solve the Neumann Poisson problem; returns (psi, compatibility_defect).

    The right side is projected onto mean zero (the solvability condition);
    the projected-away mean is reported as the compatibility defect.  The
    returned solution has zero mean.
    """
    if rhs.shape != grid.shape_centers:
        raise ValueError("rhs must be cell-centered")
    compat = float(rhs.mean())
    r = rhs - compat
    nx, ny, nz = grid.n_x, grid.n_y, grid.n_z
    rhat = np.fft.rfft2(r, axes=(0, 1))
    lam_x = -4.0 * np.sin(np.pi * np.arange(nx) / nx) ** 2 / grid.h_x ** 2
    lam_y = -4.0 * np.sin(np.pi * np.arange(rhat.shape[1]) / ny) ** 2 / grid.h_y ** 2
    lam = lam_x[:, None] + lam_y[None, :]

    inv_h2 = 1.0 / grid.h_z ** 2
    diag = np.empty(rhat.shape)
    diag[...] = -2.0 * inv_h2 + lam[..., None]
    diag[..., 0] = -inv_h2 + lam
    diag[..., -1] = -inv_h2 + lam
    # The (0,0) mode is the singular Neumann system; replacing its first
    # diagonal entry keeps rows 1.. intact, and the dropped row is implied
    # by the compatibility projection, so the sweep returns a valid solution
    # in an arbitrary gauge.
    diag[0, 0, 0] = -2.0 * inv_h2

    # Thomas sweep, vectorized over the Fourier modes.
    cp = np.empty(rhat.shape[:2] + (nz - 1,))
    dp = np.empty(rhat.shape, dtype=complex)
    cp[..., 0] = inv_h2 / diag[..., 0]
    dp[..., 0] = rhat[..., 0] / diag[..., 0]
    for k in range(1, nz):
        denom = diag[..., k] - inv_h2 * cp[..., k - 1]
        if k < nz - 1:
            cp[..., k] = inv_h2 / denom
        dp[..., k] = (rhat[..., k] - inv_h2 * dp[..., k - 1]) / denom
    psi_hat = np.empty_like(dp)
    psi_hat[..., -1] = dp[..., -1]
    for k in range(nz - 2, -1, -1):
        psi_hat[..., k] = dp[..., k] - cp[..., k] * psi_hat[..., k + 1]

    psi = np.fft.irfft2(psi_hat, s=(nx, ny), axes=(0, 1))
    psi -= psi.mean()
    return psi, compat


def solve_neumann_cg(grid: Grid, rhs: np.ndarray, x0=None, tol=1e-12,
                     maxiter=20000):
    """Mean-deflated conjugate gradients on the same Neumann problem.

    Exists to cross-check uniqueness of reconstructions against the direct
    path from an arbitrary (seeded) initial guess.
    """
    r0 = rhs - rhs.mean()
    b = r0.ravel()
    shape = grid.shape_centers

    def apply(x):
        x = x - x.mean()
        return neumann_laplacian_array(grid, x.reshape(shape)).ravel()

    x = np.zeros_like(b) if x0 is None else (x0.ravel() - x0.mean())
    r = b - apply(x)
    p = r.copy()
    rs = float(r @ r)
    bnorm = max(float(np.sqrt(b @ b)), 1e-300)
    for _ in range(maxiter):
        if np.sqrt(rs) <= tol * bnorm:
            break
        ap = apply(p)
        alpha = rs / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    else:
        raise SolveError("Neumann CG did not converge", residual=np.sqrt(rs) / bnorm)
    x = x - x.mean()
    return x.reshape(shape)


def helmholtz_project(g: VectorField, tol_div: float = 1e-10):
    """Split g into a solenoidal tangential part and a gradient part.

    One Neumann Poisson solve with boundary data g.n at the walls.  The
    returned g_sigma has exactly zero wall-normal DOFs, machine-level
    divergence and is L2-orthogonal to the gradient part.
    """
    grid = g.grid
    # Divergence of g with the prescribed wall fluxes stripped.
    du = (np.roll(g.u, -1, 0) - g.u) / grid.h_x
    dv = (np.roll(g.v, -1, 1) - g.v) / grid.h_y
    w0 = g.w.copy()
    w0[:, :, 0] = 0.0
    w0[:, :, -1] = 0.0
    dw = (w0[:, :, 1:] - w0[:, :, :-1]) / grid.h_z
    rhs = du + dv + dw

    psi, _ = solve_neumann(grid, rhs)
    gu = (psi - np.roll(psi, 1, 0)) / grid.h_x
    gv = (psi - np.roll(psi, 1, 1)) / grid.h_y
    gw = np.zeros(grid.shape_w)
    gw[:, :, 1:-1] = (psi[:, :, 1:] - psi[:, :, :-1]) / grid.h_z
    gw[:, :, 0] = g.w[:, :, 0]
    gw[:, :, -1] = g.w[:, :, -1]
    grad_psi = VectorField(grid, gu, gv, gw)
    g_sigma = VectorField(grid, g.u - gu, g.v - gv, g.w - gw,
                          tangential=True, solenoidal=True, tol_div=tol_div)
    return g_sigma, grad_psi, ScalarField(grid, psi)
