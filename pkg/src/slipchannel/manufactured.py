"""Manufactured pressure fields with symbolically generated derivatives.

The probe machinery needs the gradient, Hessian and third derivatives of
smooth test pressures; differentiating by hand invites sign slips, so the
catalog is built once with sympy and lambdified to vectorized callables.
"""

from __future__ import annotations

import numpy as np
import sympy as sym

from .interior import AnalyticPressure

_X, _Y, _Z = sym.symbols("x y z")


def _build(name: str, expr) -> AnalyticPressure:
    g = [sym.diff(expr, v) for v in (_X, _Y, _Z)]
    h = [[sym.diff(gi, v) for v in (_X, _Y, _Z)] for gi in g]
    lap = sum(h[i][i] for i in range(3))
    lg = [sym.diff(lap, v) for v in (_X, _Y, _Z)]

    f_p = sym.lambdify((_X, _Y, _Z), expr, "numpy")
    f_g = [sym.lambdify((_X, _Y, _Z), gi, "numpy") for gi in g]
    f_h = [[sym.lambdify((_X, _Y, _Z), h[i][j], "numpy") for j in range(3)]
           for i in range(3)]
    f_lg = [sym.lambdify((_X, _Y, _Z), e, "numpy") for e in lg]

    def p(pts):
        pts = np.atleast_2d(pts)
        return _vec(f_p, pts)

    def grad(pts):
        pts = np.atleast_2d(pts)
        return np.stack([_vec(f, pts) for f in f_g], axis=-1)

    def hess(pts):
        pts = np.atleast_2d(pts)
        rows = [np.stack([_vec(f_h[i][j], pts) for j in range(3)], axis=-1)
                for i in range(3)]
        return np.stack(rows, axis=-2)

    def lap_grad(pts):
        pts = np.atleast_2d(pts)
        return np.stack([_vec(f, pts) for f in f_lg], axis=-1)

    return AnalyticPressure(name, p, grad, hess, lap_grad)


def _vec(f, pts):
    out = f(pts[:, 0], pts[:, 1], pts[:, 2])
    return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()


def linear_pressure(a) -> AnalyticPressure:
    ax, ay, az = (sym.Float(v) for v in a)
    return _build("linear", ax * _X + ay * _Y + az * _Z)


def gaussian_pressure(center, width: float = 0.2) -> AnalyticPressure:
    cx, cy, cz = (sym.Float(v) for v in center)
    r2 = (_X - cx) ** 2 + (_Y - cy) ** 2 + (_Z - cz) ** 2
    return _build("gaussian", sym.exp(-r2 / (2 * sym.Float(width) ** 2)))


def manufactured_pressures() -> list:
    """Ten fixed smooth pressures spanning polynomial, trig and localized shapes."""
    two_pi = 2 * sym.pi
    catalog = [
        ("linear_x", 1.3 * _X - 0.4 * _Y + 0.7 * _Z),
        ("quadratic", 0.5 * (_X - 0.4) ** 2 - 0.3 * (_Z - 0.5) ** 2 + _X * _Y),
        ("cubic", (_X - 0.5) ** 3 + (_Y - 0.5) * (_Z - 0.5) ** 2),
        ("trig_xy", sym.sin(two_pi * _X) * sym.cos(two_pi * _Y)),
        ("trig_xz", sym.cos(two_pi * _X) * sym.cos(sym.pi * _Z)),
        ("trig_mix", sym.sin(two_pi * _X + 0.3) * sym.sin(two_pi * _Y + 1.1)
         * sym.cos(sym.pi * _Z)),
        ("gauss_center", sym.exp(-(((_X - 0.5) ** 2 + (_Y - 0.5) ** 2
                                    + (_Z - 0.5) ** 2) / 0.08))),
        ("gauss_offset", sym.exp(-(((_X - 0.6) ** 2 + (_Y - 0.35) ** 2
                                    + (_Z - 0.55) ** 2) / 0.05))),
        ("poly_trig", (_Z - 0.5) ** 2 * sym.sin(two_pi * _X)),
        ("harmonic", sym.exp(two_pi * (_Z - 0.5)) * sym.sin(two_pi * _X)),
    ]
    return [_build(name, expr) for name, expr in catalog]
