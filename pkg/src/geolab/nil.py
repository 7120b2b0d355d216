"""The Heisenberg group with the left-invariant metric dx^2 + dy^2 + (dz - x dy)^2.

Group law ``(x, y, z) . (a, b, c) = (x + a, y + b, z + c + x b)``.  Along a
geodesic ``w = z' - x y'`` is conserved; the projection to the ``(x, y)``
plane is a point (``w`` only), a line (``w = 0``) or a circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from . import core
from .core import CurveSample, TangentVector
from .errors import GeolabError
from .fitting import fit_circle, fit_line

POINT_EXTENT = 1e-9
LINE_TOL = 1e-5
CIRCLE_RATIO = 0.1
CIRCLE_MAX_RADIUS = 1e6


@dataclass(frozen=True)
class NilElement:
    x: float
    y: float
    z: float

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    def to_dict(self):
        return {"x": float(self.x), "y": float(self.y), "z": float(self.z)}


def nil_mul(g, h):
    """Group product, vectorised over leading axes of array inputs."""
    if isinstance(g, NilElement) and isinstance(h, NilElement):
        return NilElement(g.x + h.x, g.y + h.y, g.z + h.z + g.x * h.y)
    g, h = np.asarray(tuple(g), float), np.asarray(h, float)
    out = g + h
    out[..., 2] += g[..., 0] * h[..., 1]
    return out


def nil_inv(g):
    if isinstance(g, NilElement):
        return NilElement(-g.x, -g.y, -g.z + g.x * g.y)
    g = np.asarray(g, float)
    return np.stack([-g[..., 0], -g[..., 1], -g[..., 2] + g[..., 0] * g[..., 1]], axis=-1)


def left_translation(g, p):
    return nil_mul(g, p)


def rotation(angle: float, p):
    """Rotation about the ``z`` axis (an isometry fixing the identity)."""
    p = np.asarray(tuple(p), float)
    c, s = math.cos(angle), math.sin(angle)
    x, y = p[..., 0], p[..., 1]
    zs = p[..., 2] - 0.5 * x * y  # coordinate in which rotations act linearly
    x2, y2 = c * x - s * y, s * x + c * y
    return np.stack([x2, y2, zs + 0.5 * x2 * y2], axis=-1)


def vertical_momentum(points, velocities) -> np.ndarray:
    P, V = np.atleast_2d(points), np.atleast_2d(velocities)
    return V[:, 2] - P[:, 0] * V[:, 1]


def nil_geodesic(point, velocity, t_end: float, n_steps=None) -> CurveSample:
    return core.geodesic_integrate("nil", TangentVector(point, velocity), t_end, n_steps)


# ---------------------------------------------------------------------------
# classification


@dataclass
class NilClassification:
    kind: str
    residual: float
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    line_point: Optional[np.ndarray] = None
    line_direction: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        def arr(a):
            return None if a is None else [float(c) for c in a]
        return {"kind": self.kind, "residual": float(self.residual),
                "center": arr(self.center),
                "radius": None if self.radius is None else float(self.radius),
                "line_point": arr(self.line_point), "line_direction": arr(self.line_direction),
                "diagnostics": self.diagnostics}


def classify_nil_geodesic(sample: CurveSample) -> NilClassification:
    """Vertical, parabolic (line projection) or slant (circle projection).

    A circle is preferred when its RMS residual is below a tenth of the line
    fit's and its radius is below ``CIRCLE_MAX_RADIUS``.
    """
    xy = sample.points[:, :2]
    if np.max(np.ptp(xy, axis=0)) < POINT_EXTENT:
        return NilClassification("vertical", float(np.max(np.ptp(xy, axis=0))))
    line = fit_line(xy)
    circ = fit_circle(xy)
    diag = {"line_rms": line.rms, "circle_rms": circ.rms, "circle_radius": circ.radius}
    if circ.rms < CIRCLE_RATIO * line.rms and circ.radius < CIRCLE_MAX_RADIUS:
        return NilClassification("slant", circ.max_residual, center=circ.center,
                                 radius=circ.radius, diagnostics=diag)
    if line.max_residual < LINE_TOL:
        return NilClassification("parabolic", line.max_residual, line_point=line.point,
                                 line_direction=line.direction, diagnostics=diag)
    raise GeolabError(f"neither a line nor a circle fits the projection "
                      f"(line rms {line.rms:.3g}, circle rms {circ.rms:.3g}); integration error")


def pass_heights(sample: CurveSample, center, point_xy=None) -> np.ndarray:
    """Heights at which the geodesic passes over ``point_xy`` on its projected circle.

    ``point_xy`` defaults to the projection of the first sample.  Passes are
    located by interpolating the unwrapped polar angle about ``center``.
    """
    P = sample.points
    c = np.asarray(center, float)
    phi = np.unwrap(np.arctan2(P[:, 1] - c[1], P[:, 0] - c[0]))
    if point_xy is None:
        target = phi[0]
    else:
        target = math.atan2(point_xy[1] - c[1], point_xy[0] - c[0])
    t = sample.params
    f = CubicSpline(t, phi - target)
    z = CubicSpline(t, P[:, 2])
    lo, hi = phi.min() - target, phi.max() - target
    ks = np.arange(math.ceil(lo / (2 * math.pi) - 1e-12), math.floor(hi / (2 * math.pi) + 1e-12) + 1)
    heights = []
    for k in ks:
        roots = f.solve(2 * math.pi * k, extrapolate=False)
        heights.extend(z(roots))
    return np.array(sorted(heights) if phi[-1] >= phi[0] else sorted(heights, reverse=True))


def wrap_heights(sample: CurveSample, center) -> np.ndarray:
    """Heights at successive returns to the starting angle of the projected circle."""
    h = pass_heights(sample, center)
    z0 = sample.points[0, 2]
    i = int(np.argmin(np.abs(h - z0)))
    return h[i:] if abs(h[-1] - z0) >= abs(h[0] - z0) else h[: i + 1][::-1]


def wrap_displacement(w: float) -> float:
    """Height gained per turn by a unit-speed slant with vertical momentum ``w``."""
    return math.copysign(math.pi * (1 + 1 / (w * w)), w)


def slant_with_displacement(displacement: float, heading: float = 0.0) -> np.ndarray:
    """Unit initial velocity at the identity whose slant gains ``displacement`` per turn."""
    D = abs(displacement)
    if D <= 2 * math.pi:
        raise ValueError("unit-speed slants gain more than 2*pi per turn")
    w = math.copysign(1 / math.sqrt(D / math.pi - 1), displacement)
    s = math.sqrt(1 - w * w)
    return np.array([s * math.cos(heading), s * math.sin(heading), w])


def slant_intersections(s1: CurveSample, s2: CurveSample, tol: float = 1e-7) -> int:
    """Number of common points of two sampled slants that start at the same point.

    The projected circles meet at the start point and at most one more point;
    at each, passes of the two geodesics are matched by height.
    """
    c1 = classify_nil_geodesic(s1)
    c2 = classify_nil_geodesic(s2)
    if c1.kind != "slant" or c2.kind != "slant":
        raise ValueError("both samples must be slants")
    common = [s1.points[0, :2]]
    other = _second_circle_point(c1.center, c1.radius, c2.center, c2.radius, common[0])
    if other is not None:
        common.append(other)
    count = 0
    for q in common:
        h1 = pass_heights(s1, c1.center, q)
        h2 = pass_heights(s2, c2.center, q)
        count += int(np.sum(np.min(np.abs(h1[:, None] - h2[None, :]), axis=1) < tol)) \
            if len(h1) and len(h2) else 0
    return count


def _second_circle_point(c1, r1, c2, r2, known):
    d = np.asarray(c2) - np.asarray(c1)
    L = float(np.linalg.norm(d))
    if L < 1e-12:
        return None
    # reflect the known intersection across the line of centres
    e = d / L
    k = np.asarray(known) - c1
    proj = c1 + (k @ e) * e
    q = 2 * proj - np.asarray(known)
    if np.linalg.norm(q - known) < 1e-9:
        return None
    return q
