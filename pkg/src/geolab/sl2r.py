"""The universal cover of the unit tangent bundle of H^2.

Points are ``(u, v, theta)``: a half-plane base point and the unwrapped angle
``theta`` of a unit vector, measured counterclockwise from the ``+u`` axis of
the coordinate frame.  The metric is the Sasaki metric

    (du^2 + dv^2) / v^2 + (dtheta + du / v)^2

so fibres have length 2*pi and horizontal curves (``dtheta = -du / v``) are
exactly the Levi-Civita parallel transports of the half-plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import core
from . import hyperbolic as hyp
from .core import CurveSample, TangentVector
from .errors import DegenerateInputError, GeolabError
from .shooting import Surface

VERTICAL_EXTENT = 1e-9
HORIZONTAL_K = 1e-3


@dataclass(frozen=True)
class SLPoint:
    base: hyp.H2Point
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "base", hyp.convert(hyp.as_point(self.base), "halfplane"))
        if not math.isfinite(self.angle):
            raise ValueError("angle must be finite")

    @classmethod
    def from_coords(cls, c):
        return cls(hyp.H2Point("halfplane", (float(c[0]), float(c[1]))), float(c[2]))

    @property
    def coords(self) -> np.ndarray:
        u, v = self.base.coords
        return np.array([u, v, self.angle])

    def to_dict(self):
        u, v = self.base.coords
        return {"u": float(u), "v": float(v), "theta": float(self.angle)}


def _sl(p) -> SLPoint:
    return p if isinstance(p, SLPoint) else SLPoint.from_coords(p)


def project(p) -> hyp.H2Point:
    return _sl(p).base


@dataclass(frozen=True)
class WindingMap:
    """Adds ``c`` to the fibre angle of every point."""

    c: float

    def __call__(self, p) -> SLPoint:
        return winding_map(self.c, p)

    def compose(self, other: "WindingMap") -> "WindingMap":
        return WindingMap(self.c + other.c)


def winding_map(c: float, p) -> SLPoint:
    p = _sl(p)
    return SLPoint(p.base, p.angle + c)


def mobius_lift(m: hyp.MobiusMap, p) -> SLPoint:
    """Isometry of the cover induced by the differential of a half-plane isometry.

    Orientation-preserving maps rotate the angle by ``arg M'(z)``; the
    reflection ``u -> -u`` sends ``theta`` to ``pi - theta``.
    """
    p = _sl(p)
    w = p.base.w
    theta = p.angle
    if m.reversing:
        theta = math.pi - theta
    theta = theta + float(m.derivative_angle(w))
    return SLPoint(hyp.H2Point.from_complex(complex(m(w))), theta)


# ---------------------------------------------------------------------------
# parallel transport


def transport_angle(p, q) -> float:
    """Angle change of a parallel vector carried along the geodesic ``p -> q``.

    Along a vertical line the angle is constant; along a semicircle it gains
    the change of the polar angle about the semicircle's centre.
    """
    a, b = hyp.as_point(p).w, hyp.as_point(q).w
    if a == b or abs(a.real - b.real) <= 1e-14 * max(1.0, abs(a), abs(b)):
        return 0.0
    c = (abs(a) ** 2 - abs(b) ** 2) / (2 * (a.real - b.real))
    return float(np.angle(b - c) - np.angle(a - c))


def transport_angle_ode(p, q, n_steps: int = 2000) -> float:
    """Same as :func:`transport_angle`, by integrating the transport ODE in ``h2``."""
    p, q = hyp.as_point(p), hyp.as_point(q)
    x0 = np.array([p.w.real, p.w.imag])
    V = hyp.h2_log(p, q)
    w0 = np.array([x0[1], 0.0])
    _, _, w = core.parallel_transport("h2", x0, V, w0, 1.0, n_steps)
    return float(math.atan2(w[1], w[0]))


def parallel_transport_lift(x, y) -> SLPoint:
    """``t_x(y)``: carry the unit vector ``x`` to ``y`` along the base geodesic."""
    x = _sl(x)
    y = hyp.convert(hyp.as_point(y), "halfplane")
    return SLPoint(y, x.angle + transport_angle(x.base, y))


@dataclass
class HolonomyReport:
    vertices: list
    angles: list
    defect: float
    transport_defect: float
    rotation: float

    @property
    def difference(self) -> float:
        return self.transport_defect - self.defect

    def to_dict(self):
        return {"vertices": [[float(c) for c in v] for v in self.vertices],
                "angles": [float(a) for a in self.angles],
                "defect": float(self.defect),
                "transport_defect": float(self.transport_defect),
                "rotation": float(self.rotation),
                "difference": float(self.difference)}


def holonomy(triangle, method: str = "closed", n_steps: int = 2000) -> HolonomyReport:
    """Rotation of a vector carried around a geodesic triangle, against its angle defect.

    ``rotation`` is signed (negative for counterclockwise triangles in the
    ``(u, v)`` plane); ``transport_defect`` is its absolute value.
    """
    pts = [hyp.convert(hyp.as_point(p), "halfplane") for p in triangle]
    if len(pts) != 3:
        raise ValueError("a triangle has three vertices")
    ws = [p.w for p in pts]
    if len({complex(w) for w in ws}) < 3:
        raise DegenerateInputError("triangle has coincident vertices")
    if hyp.geodesic_between(pts[0], pts[1]).defect(ws[2]) < 1e-12:
        raise DegenerateInputError("triangle vertices are collinear")
    angles = hyp.triangle_angles(*pts)
    if sum(angles) >= math.pi:
        raise DegenerateInputError("triangle vertices are collinear")
    step = transport_angle if method == "closed" else (
        lambda a, b: transport_angle_ode(a, b, n_steps))
    if method not in ("closed", "ode"):
        raise ValueError("method must be 'closed' or 'ode'")
    rot = sum(step(pts[i], pts[(i + 1) % 3]) for i in range(3))
    rot = (rot + math.pi) % (2 * math.pi) - math.pi
    return HolonomyReport([tuple(p.coords) for p in pts], angles,
                          hyp.triangle_holonomy_target(angles), abs(rot), rot)


# ---------------------------------------------------------------------------
# geodesics


def sl_geodesic(point, velocity, t_end: float, n_steps=None) -> CurveSample:
    return core.geodesic_integrate("sl2r", TangentVector(point, velocity), t_end, n_steps)


def fiber_speed(points, velocities) -> np.ndarray:
    """Fibre component ``theta' + u' / v`` of chart velocities (conserved on geodesics)."""
    P, V = np.atleast_2d(points), np.atleast_2d(velocities)
    return V[:, 2] + V[:, 0] / P[:, 1]


def base_speed(points, velocities) -> np.ndarray:
    P, V = np.atleast_2d(points), np.atleast_2d(velocities)
    return np.hypot(V[:, 0], V[:, 1]) / P[:, 1]


@dataclass
class SLClassification:
    kind: str
    subkind: str = ""
    K: float = 0.0
    vertical_speed: float = 0.0
    vertical_speed_std: float = 0.0

    def to_dict(self):
        return {"kind": self.kind, "subkind": self.subkind, "K": self.K,
                "vertical_speed": self.vertical_speed,
                "vertical_speed_std": self.vertical_speed_std}


def classify_sl_geodesic(sample: CurveSample) -> SLClassification:
    """Sort a sampled geodesic into vertical, horizontal or slant.

    ``vertical_speed`` is the fibre component of the velocity per unit arc
    length of the projection to H^2.
    """
    P = sample.points
    proj = P[:, :2]
    if np.max(np.ptp(proj, axis=0)) < VERTICAL_EXTENT:
        return SLClassification("vertical", vertical_speed=math.inf)
    base = CurveSample(sample.params, proj, chart_id="h2")
    c = hyp.classify_curve(base, "halfplane")
    if c.kind == "not-constant-curvature":
        raise GeolabError(f"projected curvature is not constant (spread {c.spread:.3g}); "
                          "integration error")
    if sample.velocities is not None:
        vs = fiber_speed(P, sample.velocities) / base_speed(P, sample.velocities)
        mean, std = float(np.mean(vs)), float(np.std(vs))
    else:
        mean = std = float("nan")
    if c.K < HORIZONTAL_K:
        return SLClassification("horizontal", "geodesic", c.K, mean, std)
    return SLClassification("slant", c.kind, c.K, mean, std)


@dataclass
class SpeedLaw:
    slope: float
    intercept: float
    max_residual: float
    K: np.ndarray
    speed: np.ndarray


def slant_speed_law(classifications) -> SpeedLaw:
    """Least-squares affine fit of |vertical speed| against projected curvature."""
    K = np.array([c.K for c in classifications])
    s = np.abs(np.array([c.vertical_speed for c in classifications]))
    A = np.column_stack([K, np.ones_like(K)])
    (a, b), *_ = np.linalg.lstsq(A, s, rcond=None)
    r = s - (a * K + b)
    return SpeedLaw(float(a), float(b), float(np.max(np.abs(r))), K, s)


# ---------------------------------------------------------------------------
# the horizontal surface through a point


def horizontal_plane(x=(0.0, 1.0, 0.0), half_width: float = 1.0, grid: int = 10) -> Surface:
    """Image of ``t_x`` over a patch of H^2 around ``project(x)``.

    Parameters are the components of ``log_{project(x)}`` in an orthonormal
    frame; the patch is the square ``|a|, |b| <= half_width``.  The surface is
    the graph ``theta = f(u, v)``, so the first-order distance of ``q`` from it
    is ``|theta - f| / |d(theta - f)|`` with the norm taken in the inverse metric.
    """
    x = _sl(x)
    w0 = x.base.w

    def f(u, v):
        return x.angle + transport_angle(w0, complex(u, v))

    def offset(q):
        u, v, th = (float(c) for c in q)
        h = 1e-6 * max(1.0, v)
        fu = (f(u + h, v) - f(u - h, v)) / (2 * h)
        fv = (f(u, v + h) - f(u, v - h)) / (2 * h)
        dF = np.array([-fu, -fv, 1.0])
        ginv = np.linalg.inv(core.metric_tensor("sl2r", (u, v, th)))
        return abs(th - f(u, v)) / math.sqrt(dF @ ginv @ dF)

    def embed(ab):
        V = np.asarray(ab, dtype=float) * w0.imag
        if not V.any():
            return x.coords.copy()
        y = complex(hyp.h2_exp(w0, V, 1.0))
        return np.array([y.real, y.imag, x.angle + transport_angle(w0, y)])

    b = (-half_width, half_width)
    return Surface("sl2r", embed, (b, b), offset_fn=offset, name="sl2r horizontal plane", grid=grid,
                   meta={"basepoint": x.to_dict()})

