"""Least-squares line and circle fits for planar point sets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize


@dataclass
class LineFit:
    point: np.ndarray
    direction: np.ndarray
    rms: float
    max_residual: float


@dataclass
class CircleFit:
    center: np.ndarray
    radius: float
    rms: float
    max_residual: float


def fit_line(xy) -> LineFit:
    """Total least squares line through planar points."""
    xy = np.asarray(xy, dtype=float)
    c = xy.mean(axis=0)
    _, _, vt = np.linalg.svd(xy - c, full_matrices=False)
    d = vt[0]
    normal = np.array([-d[1], d[0]])
    r = (xy - c) @ normal
    return LineFit(c, d, float(np.sqrt(np.mean(r**2))), float(np.max(np.abs(r))))


def fit_circle(xy) -> CircleFit:
    """Geometric circle fit, seeded by the algebraic (Kasa) solution."""
    xy = np.asarray(xy, dtype=float)
    x, y = xy[:, 0], xy[:, 1]
    # x^2 + y^2 = 2 a x + 2 b y + c
    A = np.column_stack([2 * x, 2 * y, np.ones_like(x)])
    sol, *_ = np.linalg.lstsq(A, x**2 + y**2, rcond=None)
    a, b, c = sol
    r0 = np.sqrt(max(c + a * a + b * b, 1e-300))

    def resid(p):
        return np.hypot(x - p[0], y - p[1]) - p[2]

    res = optimize.least_squares(resid, [a, b, r0], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    cx, cy, r = res.x
    e = resid(res.x)
    return CircleFit(np.array([cx, cy]), float(abs(r)),
                     float(np.sqrt(np.mean(e**2))), float(np.max(np.abs(e))))
