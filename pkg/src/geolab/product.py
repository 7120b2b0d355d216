"""Closed-form geodesics of the product geometries Cylinder, H^2 x R and S^2 x R.

The cylinder is ``S^1 x R`` with the circle coordinate read in ``R mod Z`` (so
circumference 1); the sphere has radius 1.  A product geodesic is a constant
speed geodesic (or a point) of the base factor paired with a constant speed
motion in the height coordinate.

Slope sign.  On the cylinder the slope of a slant geodesic is the height
gained per full turn when travelling in the direction of increasing circle
coordinate; that direction is what we call clockwise (``CLOCKWISE = +1``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence

import numpy as np

from . import hyperbolic as hyp
from .core import GeodesicSpec, get_chart, integrate_batch, segment_length
from .errors import DegenerateInputError, UnsupportedGeometryError
from .shooting import Surface

GEOMETRIES = ("cylinder", "h2xr", "s2xr")
CLOCKWISE = +1
RESONANCE_MAX_DENOMINATOR = 10**5
RESONANCE_TOL = 1e-12
INTERSECT_TOL = 1e-9


def _wrap(x):
    """Representative of ``x mod 1`` in ``[0, 1)``; keeps Fractions exact."""
    if isinstance(x, Rational):
        return Fraction(x) % 1
    return np.mod(x, 1.0)


def _wrap_signed(x):
    return (np.asarray(x, dtype=float) + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class CylinderPoint:
    circle: float
    height: float

    def __post_init__(self):
        object.__setattr__(self, "circle", _wrap(self.circle))

    def as_array(self):
        return np.array([float(self.circle), float(self.height)])


def _cyl(p):
    if isinstance(p, CylinderPoint):
        return p
    return CylinderPoint(p[0], p[1])


# ---------------------------------------------------------------------------
# geodesics


@dataclass(frozen=True)
class ProductGeodesic:
    """A geodesic of a product geometry.

    ``base_point``/``base_direction`` describe the base-factor geodesic:
      cylinder  circle coordinate ``s`` and direction ``+1`` or ``-1``
      h2xr      half-plane point ``(u, v)`` and a Euclidean direction
      s2xr      unit vector ``X`` and a unit tangent ``W`` orthogonal to it
    ``rise`` optionally carries an exact height gain per full turn of the base
    circle (cylinder, s2xr) for resonance tests.
    """

    geometry: str
    base_point: tuple
    base_direction: tuple
    base_speed: float
    vertical_speed: float
    height: float = 0.0
    rise: Optional[object] = None

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise UnsupportedGeometryError(f"{self.geometry} is not a product geometry")
        if self.base_speed == 0 and self.vertical_speed == 0:
            raise DegenerateInputError("base and vertical speed cannot both vanish")
        if self.base_speed < 0:
            raise ValueError("base_speed must be non-negative; orient with base_direction")

    @property
    def kind(self) -> str:
        if self.base_speed == 0:
            return "vertical"
        if self.vertical_speed == 0:
            return "horizontal"
        return "slant"

    @property
    def unit_speeds(self):
        a, b = float(self.base_speed), float(self.vertical_speed)
        n = math.hypot(a, b)
        return a / n, b / n

    @property
    def circumference(self) -> float:
        return {"cylinder": 1.0, "s2xr": 2 * math.pi}.get(self.geometry, math.inf)

    def heights(self, t):
        a, b = self.unit_speeds
        return float(self.height) + b * np.asarray(t, dtype=float)

    def base(self, t):
        """Base-factor position at times ``t`` (unwrapped for the cylinder)."""
        a, _ = self.unit_speeds
        t = np.asarray(t, dtype=float)
        if self.geometry == "cylinder":
            return float(self.base_point[0]) + self.base_direction[0] * a * t
        if self.geometry == "h2xr":
            p = complex(*self.base_point)
            if a == 0:
                return np.full(t.shape, p, dtype=complex)
            return hyp.h2_exp(p, np.asarray(self.base_direction, float) * p.imag, a * t)
        X = np.asarray(self.base_point, float)
        W = np.asarray(self.base_direction, float)
        s = a * t
        return np.cos(s)[..., None] * X + np.sin(s)[..., None] * W

    def __call__(self, t, unwrapped: bool = False):
        t = np.asarray(t, dtype=float)
        h = self.heights(t)
        b = self.base(t)
        if self.geometry == "cylinder":
            s = b if unwrapped else np.mod(b, 1.0)
            return np.stack([s, h], axis=-1)
        if self.geometry == "h2xr":
            return np.stack([b.real, b.imag, h], axis=-1)
        return np.concatenate([b, h[..., None]], axis=-1)

    def velocity(self, t):
        """Chart velocity at ``t`` (ambient for s2xr)."""
        t = np.asarray(t, dtype=float)
        a, bv = self.unit_speeds
        if self.geometry == "cylinder":
            v = np.empty(t.shape + (2,))
            v[..., 0] = self.base_direction[0] * a
            v[..., 1] = bv
            return v
        if self.geometry == "s2xr":
            X = np.asarray(self.base_point, float)
            W = np.asarray(self.base_direction, float)
            s = a * t
            Vb = a * (-np.sin(s)[..., None] * X + np.cos(s)[..., None] * W)
            return np.concatenate([Vb, np.full(t.shape + (1,), bv)], axis=-1)
        eps = 1e-6
        return (self(t + eps) - self(t - eps)) / (2 * eps)

    def initial_velocity(self) -> np.ndarray:
        if self.geometry == "h2xr":
            a, b = self.unit_speeds
            v = self.base_point[1]
            d = np.asarray(self.base_direction, float)
            return np.array([a * v * d[0], a * v * d[1], b])
        return self.velocity(0.0)

    def slope(self):
        """Height gained per full turn in the travel direction (inf for vertical)."""
        if self.kind == "vertical":
            return math.inf
        if self.kind == "horizontal":
            return 0
        if self.rise is not None:
            return self.rise
        if self.geometry == "h2xr":
            raise UnsupportedGeometryError("slope is defined for circle-fibred bases")
        return self.circumference * _ratio(self.vertical_speed, self.base_speed)

    def to_dict(self):
        def conv(x):
            if isinstance(x, Fraction):
                return str(x)
            if isinstance(x, (tuple, list, np.ndarray)):
                return [conv(y) for y in x]
            return float(x)
        return {"geometry": self.geometry, "class": self.kind,
                "base": {"point": conv(self.base_point), "direction": conv(self.base_direction)},
                "speeds": [conv(self.base_speed), conv(self.vertical_speed)],
                "height": conv(self.height)}

    @classmethod
    def from_dict(cls, d):
        def parse(x):
            if isinstance(x, str):
                return Fraction(x)
            if isinstance(x, list):
                return tuple(parse(y) for y in x)
            return x
        return cls(d["geometry"], parse(d["base"]["point"]), parse(d["base"]["direction"]),
                   parse(d["speeds"][0]), parse(d["speeds"][1]), parse(d.get("height", 0.0)))


def _ratio(num, den):
    if isinstance(num, Rational) and isinstance(den, Rational):
        return Fraction(num) / Fraction(den)
    return float(num) / float(den)


def _unit(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise DegenerateInputError("direction must be nonzero")
    return v / n


def product_geodesic(geometry: str, base_point, base_direction=None, base_speed=1.0,
                     vertical_speed=0.0, height=0.0, rise=None) -> ProductGeodesic:
    """Build a product geodesic, normalising the base direction."""
    if geometry not in GEOMETRIES:
        raise UnsupportedGeometryError(f"{geometry} is not a product geometry")
    if geometry == "cylinder":
        s = base_point[0] if isinstance(base_point, (tuple, list, np.ndarray)) else base_point
        d = 1 if base_direction is None else (1 if np.ravel(base_direction)[0] >= 0 else -1)
        if base_speed < 0:
            base_speed, d = -base_speed, -d
        return ProductGeodesic("cylinder", (s,), (d,), base_speed, vertical_speed, height, rise)
    if geometry == "h2xr":
        hyp.H2Point("halfplane", base_point)
        d = (0.0, 1.0) if base_direction is None else tuple(_unit(base_direction))
        return ProductGeodesic("h2xr", tuple(map(float, base_point)), d, base_speed,
                               vertical_speed, height, rise)
    X = _unit(base_point)
    if base_direction is None:
        W = np.cross(X, [0.0, 0.0, 1.0])
        if np.linalg.norm(W) < 1e-8:
            W = np.cross(X, [1.0, 0.0, 0.0])
    else:
        W = np.asarray(base_direction, dtype=float)
    W = _unit(W - np.dot(W, X) * X)
    return ProductGeodesic("s2xr", tuple(X), tuple(W), base_speed, vertical_speed, height, rise)


def slant_with_slope(geometry: str, base_point, base_direction=None, slope=1, height=0.0):
    """Slant geodesic whose height gain per full turn is ``slope`` (kept exact)."""
    if geometry not in ("cylinder", "s2xr"):
        raise UnsupportedGeometryError("slope is defined for circle-fibred bases")
    if slope == 0:
        raise ValueError("a slant needs nonzero slope")
    circ = 1.0 if geometry == "cylinder" else 2 * math.pi
    vs = slope if geometry == "cylinder" else float(slope) / circ
    g = product_geodesic(geometry, base_point, base_direction, 1, vs, height, rise=slope)
    if geometry == "cylinder" and g.base_direction[0] != CLOCKWISE:
        g = ProductGeodesic("cylinder", g.base_point, g.base_direction, 1, -vs, height, slope)
    return g


def cylinder_slope(g: ProductGeodesic):
    """0 for horizontal, inf for vertical, otherwise the signed rise per clockwise turn."""
    if g.geometry != "cylinder":
        raise UnsupportedGeometryError("cylinder_slope needs a cylinder geodesic")
    if g.kind == "vertical":
        return math.inf
    if g.kind == "horizontal":
        return 0
    if g.rise is not None:
        return g.rise
    return _ratio(g.vertical_speed, g.base_speed) * g.base_direction[0] * CLOCKWISE


# ---------------------------------------------------------------------------
# maps


def twisting_map(alpha, p):
    """``(r1, r2) -> (r1 + alpha r2 mod 1, r2)``."""
    p = _cyl(p)
    return CylinderPoint(p.circle + alpha * p.height, p.height)


def affine_r_map(a, b, p):
    """Affine map ``h -> a h + b`` of the height, base coordinates untouched."""
    if a == 0:
        raise DegenerateInputError("affine map with a = 0 is not a bijection")
    if isinstance(p, CylinderPoint):
        return CylinderPoint(p.circle, a * p.height + b)
    p = np.array(p, dtype=float)
    p[..., -1] = a * p[..., -1] + b
    return p


# ---------------------------------------------------------------------------
# guaranteed sets


@dataclass
class GuaranteedSet:
    """Intersection of all geodesics through a set of points.

    kind ``geodesic``: a whole geodesic ``geodesic``.
    kind ``lattice``: points ``geodesic(n * step)`` for integer ``n``; for the
    cylinder ``origin``/``offset`` give the same lattice exactly in unrolled
    coordinates.
    kind ``finite``: the listed ``points`` (``truncated`` when found by a
    bounded enumeration).
    """

    kind: str
    geometry: str
    geodesic: Optional[ProductGeodesic] = None
    step: float = 0.0
    origin: tuple = ()
    offset: tuple = ()
    points: list = field(default_factory=list)
    truncated: bool = False

    def lattice(self, n_max: int):
        if self.kind != "lattice":
            raise ValueError("not a lattice")
        if self.geometry == "cylinder":
            s0, h0 = self.origin
            ds, dh = self.offset
            return [(_wrap(s0 + n * ds), h0 + n * dh) for n in range(-n_max, n_max + 1)]
        ts = self.step * np.arange(-n_max, n_max + 1)
        return [tuple(x) for x in self.geodesic(ts)]

    def contains(self, p, tol=1e-9) -> bool:
        p = np.asarray([float(c) for c in (p.as_array() if isinstance(p, CylinderPoint) else p)])
        if self.kind == "finite":
            return any(_pdist(self.geometry, p, np.asarray(q, float)) < tol for q in self.points)
        if self.kind == "geodesic":
            return _on_geodesic(self.geodesic, p, tol)
        if self.geometry == "cylinder":
            s0, h0 = map(float, self.origin)
            ds, dh = map(float, self.offset)
            n = round((p[1] - h0) / dh)
            q = np.array([(s0 + n * ds) % 1.0, h0 + n * dh])
            return _pdist("cylinder", p, q) < tol
        _, b = self.geodesic.unit_speeds
        n = round((p[-1] - float(self.geodesic.height)) / (b * self.step))
        return _pdist(self.geometry, p, self.geodesic(n * self.step)) < tol


def _pdist(geometry, p, q):
    p, q = np.asarray(p, float), np.asarray(q, float)
    if geometry == "cylinder":
        return math.hypot(float(_wrap_signed(p[0] - q[0])), p[1] - q[1])
    return float(np.linalg.norm(p - q))


def _on_geodesic(g: ProductGeodesic, p, tol):
    p = np.asarray(p, float)
    if g.kind == "horizontal":
        if abs(p[-1] - float(g.height)) > tol:
            return False
        if g.geometry == "cylinder":
            return True
        if g.geometry == "s2xr":
            n = np.cross(g.base_point, g.base_direction)
            return abs(np.dot(n, p[:3])) < tol
        curve = _base_curve(g)
        return curve.defect(complex(p[0], p[1])) < tol
    _, b = g.unit_speeds
    t = (p[-1] - float(g.height)) / b
    return _pdist(g.geometry, p, g(t)) < tol


def _base_curve(g: ProductGeodesic) -> hyp.ConstantCurvatureCurve:
    u, v = g.base_point
    du, dv = g.base_direction
    if abs(du) < 1e-15:
        return hyp.ConstantCurvatureCurve("geodesic", {"ends": (u, math.inf)})
    c = u + v * dv / du
    R = math.hypot(u - c, v)
    return hyp.ConstantCurvatureCurve("geodesic", {"ends": (c - R, c + R)})


def _cylinder_pair(a: CylinderPoint, b: CylinderPoint):
    dh = b.height - a.height
    delta = _wrap(b.circle - a.circle)
    if dh == 0:
        if delta == 0:
            return GuaranteedSet("finite", "cylinder", points=[(a.circle, a.height)])
        g = product_geodesic("cylinder", a.circle, 1, 1, 0, a.height)
        return GuaranteedSet("geodesic", "cylinder", geodesic=g)
    # the geodesic of largest |slope| through a and b has the smallest unrolled offset
    ds = delta if delta <= Fraction(1, 2) else delta - 1
    if ds == 0:
        g = product_geodesic("cylinder", a.circle, 1, 0, 1, a.height)
    else:
        g = product_geodesic("cylinder", a.circle, 1 if ds > 0 else -1, abs(ds), dh, a.height)
    # parameter at which g reaches b
    step = float(dh) / g.unit_speeds[1]
    return GuaranteedSet("lattice", "cylinder", geodesic=g, step=step,
                         origin=(a.circle, a.height), offset=(ds, dh))


def _cylinder_candidates(p0, p1, wraps):
    """Directions (ds, dh) in the cover of every geodesic through p0 and p1."""
    dh = p1.height - p0.height
    delta = _wrap(p1.circle - p0.circle)
    out = []
    if dh == 0:
        if delta != 0:
            out.append((1, 0))
        return out
    if delta == 0:
        out.append((0, 1))
    for m in range(-wraps, wraps + 1):
        ds = delta + m
        if ds != 0:
            out.append((ds, dh))
    return out


def _on_line(p0, d, q, tol=1e-12):
    ds, dh = d
    x, y = q.circle - p0.circle, q.height - p0.height
    if dh == 0:
        return abs(float(y)) <= tol
    lam = y / dh
    r = x - lam * ds
    if isinstance(r, Fraction):
        return r.denominator == 1
    return abs(r - round(r)) <= tol


def guaranteed_set(points: Sequence, geometry: str, wraps: int = 50) -> GuaranteedSet:
    """Guaranteed set of a finite point set in the cylinder, S^2 or S^2 x R."""
    if geometry not in ("cylinder", "s2", "s2xr"):
        raise UnsupportedGeometryError(f"guaranteed sets are not implemented for {geometry}")
    if len(points) == 0:
        raise ValueError("need at least one point")
    if geometry == "cylinder":
        P = [_cyl(p) for p in points]
        uniq = []
        for p in P:
            if p not in uniq:
                uniq.append(p)
        if len(uniq) == 1:
            return GuaranteedSet("finite", "cylinder", points=[(uniq[0].circle, uniq[0].height)])
        if len(uniq) == 2:
            return _cylinder_pair(*uniq)
        return _cylinder_many(uniq, wraps)
    if geometry == "s2":
        return _sphere_set([_unit(p) for p in points])
    return _s2xr_set([np.asarray(p, dtype=float) for p in points])


def _cylinder_many(P, wraps):
    p0, p1 = P[0], P[1]
    # steepest lines first, so the enumerated wraps cover the widest height range
    cands = sorted((d for d in _cylinder_candidates(p0, p1, wraps)
                    if all(_on_line(p0, d, q) for q in P[2:])), key=lambda d: abs(d[0]))
    pts = [(p.circle, p.height) for p in P]
    if not cands:
        return GuaranteedSet("finite", "cylinder", points=pts)
    if len(cands) == 1:
        ds, dh = cands[0]
        if dh == 0:
            g = product_geodesic("cylinder", p0.circle, 1, 1, 0, p0.height)
        else:
            g = product_geodesic("cylinder", p0.circle, 1 if ds >= 0 else -1, abs(ds), dh,
                                 p0.height)
        return GuaranteedSet("geodesic", "cylinder", geodesic=g)
    # intersect the first two candidate lines over a bounded range of wraps
    (d1, e1), (d2, e2) = cands[0], cands[1]
    found = []
    det = -d1 * e2 + d2 * e1
    for k in range(-wraps, wraps + 1):
        # lam * (d1, e1) - mu * (d2, e2) = (k, 0)
        lam = Fraction(-k * e2) / det if isinstance(det, (int, Fraction)) else -k * e2 / det
        q = CylinderPoint(p0.circle + lam * d1, p0.height + lam * e1)
        if all(_on_line(p0, d, q) for d in cands[2:]):
            if q not in found:
                found.append(q)
    return GuaranteedSet("finite", "cylinder", points=[(q.circle, q.height) for q in found],
                         truncated=True)


def _tup(x):
    return tuple(float(c) + 0.0 for c in x)


def _sphere_set(P):
    x = P[0]
    others = [p for p in P[1:] if not np.allclose(p, x, atol=1e-12)]
    if not others:
        return GuaranteedSet("finite", "s2", points=[_tup(x), _tup(-x)])
    if all(np.allclose(p, -x, atol=1e-12) for p in others):
        return GuaranteedSet("finite", "s2", points=[_tup(x), _tup(-x)])
    y = next(p for p in others if not np.allclose(p, -x, atol=1e-12))
    n = _unit(np.cross(x, y))
    if all(abs(np.dot(n, p)) < 1e-10 for p in P):
        g = product_geodesic("s2xr", x, np.cross(n, x), 1, 0, 0.0)
        return GuaranteedSet("geodesic", "s2", geodesic=g)
    return GuaranteedSet("finite", "s2", points=[_tup(p) for p in P])


def _s2xr_set(P):
    if len(P) > 2:
        raise UnsupportedGeometryError("S^2 x R guaranteed sets are implemented for 1 or 2 points")
    a = P[0]
    if len(P) == 1 or np.allclose(P[0], P[1], atol=1e-12):
        return GuaranteedSet("finite", "s2xr", points=[_tup(a)])
    b = P[1]
    x, y = _unit(a[:3]), _unit(b[:3])
    dh = b[3] - a[3]
    antipodal = np.allclose(x, -y, atol=1e-12)
    same = np.allclose(x, y, atol=1e-12)
    if abs(dh) < 1e-15:
        if antipodal:
            return GuaranteedSet("finite", "s2xr", points=[_tup(a), _tup(b)])
        g = product_geodesic("s2xr", x, y - np.dot(x, y) * x, 1, 0, a[3])
        return GuaranteedSet("geodesic", "s2xr", geodesic=g)
    if same:
        g = product_geodesic("s2xr", x, None, 0, 1, a[3])
        return GuaranteedSet("lattice", "s2xr", geodesic=g, step=dh)
    if antipodal:
        W = product_geodesic("s2xr", x).base_direction
        theta = math.pi
    else:
        W = y - np.dot(x, y) * x
        theta = math.acos(float(np.clip(np.dot(x, y), -1, 1)))
    g = product_geodesic("s2xr", x, W, theta, dh, a[3])
    return GuaranteedSet("lattice", "s2xr", geodesic=g, step=math.hypot(theta, dh))


# ---------------------------------------------------------------------------
# intersection counting


def _resonance(ratio):
    """``"rational"``, ``"irrational"`` or ``"undetermined"`` for a ratio of rises."""
    if isinstance(ratio, Rational):
        return "rational", Fraction(ratio)
    f = Fraction(float(ratio)).limit_denominator(RESONANCE_MAX_DENOMINATOR)
    if abs(float(ratio) - float(f)) < RESONANCE_TOL:
        return "undetermined", f
    return "irrational", None


def _is_int(x, tol=INTERSECT_TOL):
    return abs(x - round(x)) < tol


def count_intersections(g1: ProductGeodesic, g2: ProductGeodesic, window=(-1000.0, 1000.0)):
    """Number of intersection points of two product geodesics.

    Returns an int (points with ``g1``'s parameter in ``window``), ``"infinite"``
    when infinitely many are certain, ``"undetermined"`` when a floating point
    rise ratio is indistinguishable from a rational, or ``"same"`` when the
    geodesics coincide.
    """
    if g1.geometry != g2.geometry:
        raise ValueError("geodesics live in different geometries")
    if _same_geodesic(g1, g2):
        return "same"
    if g1.geometry == "s2xr":
        return _count_s2xr(g1, g2, window)
    if g1.geometry == "cylinder":
        return _count_cylinder(g1, g2, window)
    return _count_h2xr(g1, g2, window)


def _same_geodesic(g1, g2):
    if g1.kind != g2.kind:
        return False
    probe = [0.0, 0.37, -1.3]
    return all(_on_geodesic(g1, g2(t), 1e-9) for t in probe)


def _in(t, window):
    return window[0] <= t <= window[1]


def _count_cylinder(g1, g2, window):
    k1, k2 = g1.kind, g2.kind
    if k1 == "vertical" and k2 == "vertical":
        return 0
    if "vertical" in (k1, k2) and "slant" in (k1, k2):
        return "infinite"
    if k1 == "horizontal" and k2 == "horizontal":
        return 0
    if {k1, k2} == {"horizontal", "vertical"}:
        h = g1.height if k1 == "horizontal" else g2.height
        t = float(h - g1.height) / g1.unit_speeds[1] if k1 != "horizontal" else 0.0
        return int(_in(t, window)) if k1 == "vertical" else 1
    if "horizontal" in (k1, k2):
        hz, sl = (g1, g2) if k1 == "horizontal" else (g2, g1)
        t = (float(hz.height) - float(sl.height)) / sl.unit_speeds[1]
        if sl is g1:
            return int(_in(t, window))
        return 1
    # two slants: parallel or infinitely many crossings
    if math.isclose(float(cylinder_slope(g1)), float(cylinder_slope(g2)), rel_tol=1e-12):
        return 0
    return "infinite"


def _count_h2xr(g1, g2, window):
    k1, k2 = g1.kind, g2.kind
    if k1 == "vertical" and k2 == "vertical":
        return 0
    if k1 == "vertical" or k2 == "vertical":
        vert, other = (g1, g2) if k1 == "vertical" else (g2, g1)
        p = complex(*vert.base_point)
        if _base_curve(other).defect(p) > INTERSECT_TOL:
            return 0
        t_other = _h2_param(other, p)
        h = float(other.heights(t_other))
        t1 = t_other if other is g1 else (h - float(g1.height)) / g1.unit_speeds[1]
        return int(_in(t1, window))
    c1, c2 = _base_curve(g1), _base_curve(g2)
    if _same_base(c1, c2):
        # both in the flat vertical plane over one geodesic
        s1 = _h2_arclength(g1, complex(*g1.base_point))
        s2 = _h2_arclength(g1, complex(*g2.base_point))
        o2 = 1.0 if np.dot(_h2_tangent(g1, complex(*g2.base_point)), g2.base_direction) > 0 else -1.0
        a1, b1 = g1.unit_speeds
        a2, b2 = g2.unit_speeds
        # s1 + a1 t1 = s2 + o2 a2 t2 ; h1 + b1 t1 = h2 + b2 t2
        A = np.array([[a1, -o2 * a2], [b1, -b2]])
        rhs = np.array([s2 - s1, float(g2.height) - float(g1.height)])
        if abs(np.linalg.det(A)) < 1e-14:
            return 0
        t1, _ = np.linalg.solve(A, rhs)
        return int(_in(t1, window))
    z = _geodesic_crossing(c1, c2)
    if z is None:
        return 0
    t1, t2 = _h2_param(g1, z), _h2_param(g2, z)
    if abs(float(g1.heights(t1)) - float(g2.heights(t2))) < INTERSECT_TOL:
        return int(_in(t1, window))
    return 0


def _same_base(c1, c2):
    a1, a2 = sorted(c1.params["ends"]), sorted(c2.params["ends"])
    return all((math.isinf(x) and math.isinf(y)) or abs(x - y) < 1e-12 for x, y in zip(a1, a2))


def _geodesic_crossing(c1, c2) -> Optional[complex]:
    def circle(c):
        a, b = c.params["ends"]
        if math.isinf(b) or math.isinf(a):
            return None, (b if math.isinf(a) else a)
        return (0.5 * (a + b), 0.5 * abs(b - a)), None

    C1, v1 = circle(c1)
    C2, v2 = circle(c2)
    if C1 is None and C2 is None:
        return None
    if C1 is None or C2 is None:
        (c, R), u = (C2, v1) if C1 is None else (C1, v2)
        h2 = R * R - (u - c) ** 2
        return complex(u, math.sqrt(h2)) if h2 > 0 else None
    (ca, Ra), (cb, Rb) = C1, C2
    if ca == cb:
        return None
    u = (Ra**2 - Rb**2 + cb**2 - ca**2) / (2 * (cb - ca))
    h2 = Ra**2 - (u - ca) ** 2
    return complex(u, math.sqrt(h2)) if h2 > 0 else None


def _h2_tangent(g, z):
    c = _base_curve(g)
    a, b = c.params["ends"]
    if math.isinf(b):
        t = np.array([0.0, 1.0])
    else:
        ctr = 0.5 * (a + b)
        t = np.array([-(z.imag), z.real - ctr])
        t /= np.linalg.norm(t)
    return t


def _h2_arclength(g, z):
    """Signed hyperbolic distance from g's base point to ``z`` along g's direction."""
    p = complex(*g.base_point)
    V = hyp.h2_log(p, z)
    d = hyp.distance(p, z)
    return d if np.dot(V, g.base_direction) >= 0 else -d


def _h2_param(g, z):
    return _h2_arclength(g, z) / g.unit_speeds[0]


def _circle_normal(g):
    return np.cross(g.base_point, g.base_direction)


def _count_s2xr(g1, g2, window):
    k1, k2 = g1.kind, g2.kind
    if k1 == "vertical" and k2 == "vertical":
        return 0
    if "vertical" in (k1, k2):
        vert, other = (g1, g2) if k1 == "vertical" else (g2, g1)
        on = abs(np.dot(_circle_normal(other), vert.base_point)) < INTERSECT_TOL
        if not on:
            return 0
        if other.kind == "slant":
            return "infinite"
        t1 = 0.0 if other is g1 else (float(other.height) - float(g1.height)) / g1.unit_speeds[1]
        return 1 if other is g1 else int(_in(t1, window))
    if k1 == "horizontal" and k2 == "horizontal":
        if abs(float(g1.height) - float(g2.height)) > INTERSECT_TOL:
            return 0
        return 2
    if "horizontal" in (k1, k2):
        hz, sl = (g1, g2) if k1 == "horizontal" else (g2, g1)
        t = (float(hz.height) - float(sl.height)) / sl.unit_speeds[1]
        x = sl.base(t)
        if abs(np.dot(_circle_normal(hz), x)) > INTERSECT_TOL:
            return 0
        if sl is g1:
            return int(_in(t, window))
        return 1
    n1, n2 = _circle_normal(g1), _circle_normal(g2)
    cross = np.cross(n1, n2)
    if np.linalg.norm(cross) < 1e-12:
        return _count_s2xr_cocircular(g1, g2, window)
    y = _unit(cross)
    S1, S2 = g1.slope(), g2.slope()
    kind, frac = _resonance(_ratio(S1, S2) if not (isinstance(S1, float) or isinstance(S2, float))
                            else float(S1) / float(S2))
    total = 0
    for pt, half in ((y, 0.0), (-y, 0.5)):
        A1 = _pass_height(g1, pt)
        A2 = _pass_height(g2, pt)
        f1, f2 = float(S1), float(S2)
        if kind == "undetermined":
            return "undetermined"
        if kind == "rational":
            p, q = frac.numerator, frac.denominator
            if _is_int(q * (A2 - A1) / f2):
                return "infinite"
            continue
        a1, b1 = g1.unit_speeds
        circ = 2 * math.pi
        # passes of g1 over pt: t = t0 + k * circ / a1
        t0 = (A1 - float(g1.height)) / b1
        klo = math.ceil((window[0] - t0) * a1 / circ - 1e-12)
        khi = math.floor((window[1] - t0) * a1 / circ + 1e-12)
        for k in range(klo, khi + 1):
            if _is_int((A1 + k * f1 - A2) / f2):
                total += 1
    return total


def _pass_height(g, pt):
    """Height of g at one of its passes over the base point ``pt``."""
    X = np.asarray(g.base_point)
    W = np.asarray(g.base_direction)
    phi = math.atan2(float(np.dot(pt, W)), float(np.dot(pt, X)))
    a, b = g.unit_speeds
    return float(g.height) + b * phi / a


def _count_s2xr_cocircular(g1, g2, window):
    n1, n2 = _circle_normal(g1), _circle_normal(g2)
    sigma = 1.0 if np.dot(n1, n2) > 0 else -1.0
    a1, b1 = g1.unit_speeds
    a2, b2 = g2.unit_speeds
    m1, m2 = b1 / a1, sigma * b2 / a2
    if math.isclose(m1, m2, rel_tol=1e-12, abs_tol=1e-15):
        return 0
    return "infinite"


# ---------------------------------------------------------------------------
# epsilon balls


def _ball_distance(g: ProductGeodesic, center, t):
    c = np.asarray(center, dtype=float)
    pts = g(t, unwrapped=False)
    if g.geometry == "cylinder":
        ds = _wrap_signed(pts[:, 0] - c[0])
        return np.hypot(ds, pts[:, 1] - c[1])
    if g.geometry == "s2xr":
        cosang = np.clip(pts[:, :3] @ _unit(c[:3]), -1.0, 1.0)
        return np.hypot(np.arccos(cosang), pts[:, 3] - c[3])
    w = pts[:, 0] + 1j * pts[:, 1]
    cw = complex(c[0], c[1])
    dh = np.arccosh(1 + np.abs(w - cw) ** 2 / (2 * w.imag * cw.imag))
    return np.hypot(dh, pts[:, 2] - c[2])


def _runs(inside, circular=False):
    if not inside.any():
        return 0
    if inside.all():
        return 1
    starts = int(np.sum(inside[1:] & ~inside[:-1])) + int(inside[0])
    if circular and inside[0] and inside[-1]:
        starts -= 1
    return starts


def epsilon_ball_components(g, center, eps: float, resolution: int = 400,
                            span: float = 10.0) -> int:
    """Connected components of ``{t : d(g(t), center) < eps}``.

    Product geodesics use closed-form distances; closed horizontal geodesics are
    scanned over one period.  A :class:`GeodesicSpec` is integrated over
    ``[-span, span]`` and distances come from a quadrature of the metric along
    the coordinate segment, which is accurate for balls much smaller than the
    injectivity scale.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if isinstance(g, GeodesicSpec):
        return _spec_components(g, center, eps, resolution, span)
    c = np.asarray(center, dtype=float)
    a, b = g.unit_speeds
    dt = eps / resolution
    circular = False
    if g.kind == "horizontal":
        if g.geometry in ("cylinder", "s2xr"):
            period = g.circumference / a
            ts = np.arange(0.0, period, dt)
            circular = True
        else:
            d0 = float(_ball_distance(g, c, np.array([0.0]))[0])
            T = (d0 + eps) / a + dt
            ts = np.arange(-T, T + dt, dt)
    else:
        lo = (c[-1] - eps - float(g.height)) / b
        hi = (c[-1] + eps - float(g.height)) / b
        lo, hi = min(lo, hi) - dt, max(lo, hi) + dt
        ts = np.arange(lo, hi + dt, dt)
    d = _ball_distance(g, c, ts)
    return _runs(d < eps, circular)


def _spec_components(spec: GeodesicSpec, center, eps, resolution, span):
    chart = get_chart(spec.chart_id)
    x0 = np.asarray(spec.point, float)
    v0 = np.asarray(spec.velocity, float)
    step = min(eps / 20.0, 1e-2)
    n = int(math.ceil(span / step))
    _, xf, _, okf = integrate_batch(chart, x0[None], v0[None], span, n)
    _, xb, _, okb = integrate_batch(chart, x0[None], -v0[None], span, n)
    path = np.concatenate([xb[: okb[0]][::-1, 0], xf[1: okf[0], 0]])
    d = segment_length(chart, path, np.broadcast_to(center, path.shape))
    return _runs(d < eps)


def slant_return_witness(eps: float) -> ProductGeodesic:
    """Slant geodesic of S^2 x R through ``((1,0,0), 0)`` re-entering the eps-ball.

    The height gain per turn is ``eps / 10``, so after one turn the geodesic is
    back within ``eps / 10`` of the base point.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    rise = eps / 10.0
    return slant_with_slope("s2xr", (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), rise, 0.0)


# ---------------------------------------------------------------------------
# totally geodesic planes of H^2 x R


def h2xr_horizontal_plane(height=0.0, bounds=((-1.0, 1.0), (0.5, 2.0)), grid=10) -> Surface:
    """Patch of ``H^2 x {height}`` parametrised by half-plane coordinates."""
    return Surface("h2xr", lambda ab: np.array([ab[0], ab[1], height]), bounds,
                   offset_fn=lambda q: abs(q[2] - height), name=f"h2xr horizontal h={height}",
                   grid=grid)


def h2xr_vertical_plane(axis_u=0.0, bounds=((-1.0, 1.0), (-1.0, 1.0)), grid=10) -> Surface:
    """Patch of ``gamma x R`` over the vertical geodesic ``u = axis_u``.

    Parameters are arc length ``s`` along ``gamma`` (``v = e^s``) and height.
    """
    def embed(ab):
        return np.array([axis_u, math.exp(ab[0]), ab[1]])

    def offset(q):
        return abs(math.asinh((q[0] - axis_u) / q[1]))

    return Surface("h2xr", embed, bounds, offset_fn=offset,
                   name=f"h2xr vertical u={axis_u}", grid=grid)
