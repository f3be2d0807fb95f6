"""Closed-form and independently discretized references for the channel.

These are the oracles the scenario library and the test-suite compare
against: the Robin-wall Poiseuille profile, the transcendental Robin
eigenvalue problem of the 1D shear operator, and a node-based 1D heat
integrator that shares no code with the staggered solver.
"""

from __future__ import annotations

import numpy as np


def poiseuille_profile(z, force: float, nu: float, gamma: float, H: float):
    """Steady shear profile driven by a uniform body force under slip walls.

    Solves nu u'' = -force with nu u'(0) = gamma u(0) and
    -nu u'(H) = gamma u(H); for gamma = 0 the profile is defined only up to
    a constant and a ValueError is raised.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive for a unique profile")
    return (force / (2.0 * nu)) * z * (H - z) + force * H / (2.0 * gamma)


def robin_eigenvalues(nu: float, gamma: float, H: float, count: int = 1):
    """Decay rates of the 1D shear operator -nu d^2/dz^2 with Robin walls.

    Eigenfunctions are cos(kappa z - delta) with tan(delta) = gamma/(nu kappa)
    and kappa H = 2 delta + m pi.  Returns [(rate, kappa, delta), ...] for the
    lowest nontrivial modes (rate = nu kappa^2); the constant mode of the
    gamma = 0 case is skipped.
    """
    out = []
    m = 0
    while len(out) < count:
        kappa = _solve_branch(nu, gamma, H, m)
        m += 1
        if kappa is None or kappa <= 1e-12:
            continue
        delta = np.arctan2(gamma, nu * kappa)
        out.append((nu * kappa ** 2, kappa, delta))
    return out


def _solve_branch(nu, gamma, H, m):
    def f(kappa):
        return kappa * H - 2.0 * np.arctan2(gamma, nu * kappa) - m * np.pi

    lo, hi = 1e-12, (m + 1) * np.pi / H + 2.0 * np.pi / H
    while f(hi) < 0:
        hi *= 2.0
    if f(lo) > 0:
        return None
    if f(lo) >= 0 and m == 0:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    kappa = 0.5 * (lo + hi)
    return kappa if kappa > 1e-10 else None


def robin_eigenfunction(kappa: float, delta: float):
    def u(z):
        return np.cos(kappa * z - delta)
    return u


def heat1d_robin(u0, nu: float, gamma: float, H: float, t_end: float,
                 n_nodes: int = 2001, n_steps: int = 4000):
    """Node-based implicit 1D heat solve with Robin walls (independent oracle).

    Integrates u_t = nu u_zz with nu u'(0) = gamma u(0) and
    -nu u'(H) = gamma u(H) on a fine node grid; returns (z_nodes, u_final).
    The discretization (vertex-centered, ghost-node Robin closure) shares
    nothing with the staggered channel solver.
    """
    z = np.linspace(0.0, H, n_nodes)
    h = z[1] - z[0]
    dt = t_end / n_steps
    u = np.asarray(u0(z), dtype=float)

    n = n_nodes
    main = np.full(n, 1.0 + 2.0 * nu * dt / h ** 2)
    off = np.full(n - 1, -nu * dt / h ** 2)
    # Robin ghosts: u_{-1} = u_1 - 2 h (gamma/nu) u_0 (and mirrored at z=H)
    main[0] = 1.0 + 2.0 * nu * dt / h ** 2 + 2.0 * gamma * dt / h
    main[-1] = main[0]
    upper = off.copy()
    lower = off.copy()
    upper[0] = -2.0 * nu * dt / h ** 2
    lower[-1] = -2.0 * nu * dt / h ** 2

    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1, :] = main
    ab[2, :-1] = lower
    from scipy.linalg import solve_banded
    for _ in range(n_steps):
        u = solve_banded((1, 1), ab, u)
    return z, u
