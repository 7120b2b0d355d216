"""The hyperbolic plane: models, Mobius isometries, constant-curvature curves.

Internally points of the half-plane are complex numbers ``u + i v``.  The
Cayley map ``z = (w - i) / (w + i)`` sends the half-plane to the disk with
``i`` going to the origin, and the Klein model is ``k = 2 z / (1 + |z|^2)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import core
from .core import CurveSample
from .errors import DegenerateInputError, OutOfChartError
from .fitting import fit_line

MODELS = ("halfplane", "disk", "klein")
KIND_BAND = 1e-3
CONSTANCY_TOL = 1e-3
_D = np.diag([-1.0, 1.0])


# ---------------------------------------------------------------------------
# models


def halfplane_to_disk(w):
    w = np.asarray(w, dtype=complex)
    return (w - 1j) / (w + 1j)


def disk_to_halfplane(z):
    z = np.asarray(z, dtype=complex)
    return 1j * (1 + z) / (1 - z)


def disk_to_klein(z):
    z = np.asarray(z, dtype=complex)
    return 2 * z / (1 + np.abs(z) ** 2)


def klein_to_disk(k):
    k = np.asarray(k, dtype=complex)
    return k / (1 + np.sqrt(1 - np.abs(k) ** 2))


def to_halfplane(c, model):
    if model == "halfplane":
        return np.asarray(c, dtype=complex)
    if model == "disk":
        return disk_to_halfplane(c)
    if model == "klein":
        return disk_to_halfplane(klein_to_disk(c))
    raise ValueError(f"unknown model {model!r}")


def from_halfplane(w, model):
    if model == "halfplane":
        return np.asarray(w, dtype=complex)
    if model == "disk":
        return halfplane_to_disk(w)
    if model == "klein":
        return disk_to_klein(halfplane_to_disk(w))
    raise ValueError(f"unknown model {model!r}")


@dataclass(frozen=True)
class H2Point:
    model: str
    coords: tuple

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        u, v = (float(c) for c in self.coords)
        object.__setattr__(self, "coords", (u, v))
        if self.model == "halfplane" and not v > 0:
            raise OutOfChartError(f"half-plane points need v > 0, got {self.coords}")
        if self.model != "halfplane" and not u * u + v * v < 1:
            raise OutOfChartError(f"{self.model} points need norm < 1, got {self.coords}")

    @classmethod
    def from_complex(cls, w, model="halfplane"):
        return cls(model, (w.real, w.imag))

    @property
    def complex(self) -> complex:
        return complex(*self.coords)

    @property
    def w(self) -> complex:
        """Half-plane coordinate."""
        return complex(to_halfplane(self.complex, self.model))

    def to(self, model) -> "H2Point":
        return convert(self, model)


def as_point(p, model="halfplane") -> H2Point:
    if isinstance(p, H2Point):
        return p
    if isinstance(p, complex):
        return H2Point.from_complex(p, model)
    return H2Point(model, tuple(p))


def convert(p: H2Point, target: str) -> H2Point:
    if p.model == target:
        return p
    return H2Point.from_complex(complex(from_halfplane(p.w, target)), target)


def distance(p, q) -> float:
    a, b = as_point(p).w, as_point(q).w
    return float(np.arccosh(1 + abs(a - b) ** 2 / (2 * a.imag * b.imag)))


# ---------------------------------------------------------------------------
# isometries


@dataclass(frozen=True)
class MobiusMap:
    """``z -> M z`` on the half-plane, precomposed with ``z -> -conj(z)`` if reversing."""

    matrix: tuple
    reversing: bool = False

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float).reshape(2, 2)
        det = np.linalg.det(M)
        if det == 0:
            raise DegenerateInputError("Mobius matrix must be invertible")
        rev = self.reversing
        if det < 0:
            M = M @ _D
            rev = not rev
            det = -det
        M = M / math.sqrt(det)
        object.__setattr__(self, "matrix", tuple(map(tuple, M)))
        object.__setattr__(self, "reversing", bool(rev))

    @property
    def M(self) -> np.ndarray:
        return np.array(self.matrix)

    @classmethod
    def identity(cls):
        return cls(((1.0, 0.0), (0.0, 1.0)))

    @classmethod
    def reflection(cls):
        return cls(((1.0, 0.0), (0.0, 1.0)), reversing=True)

    @classmethod
    def rotation(cls, center, angle):
        """Rotation by ``angle`` about a half-plane point."""
        c = as_point(center).w
        T = np.array([[c.imag, c.real], [0.0, 1.0]])
        R = np.array([[math.cos(angle / 2), math.sin(angle / 2)],
                      [-math.sin(angle / 2), math.cos(angle / 2)]])
        return cls(T @ R @ np.linalg.inv(T))

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        if self.reversing:
            w = -np.conj(w)
        (a, b), (c, d) = self.matrix
        return (a * w + b) / (c * w + d)

    def derivative_angle(self, w):
        """Rotation angle of the differential at ``w`` (before any reflection)."""
        w = np.asarray(w, dtype=complex)
        if self.reversing:
            w = -np.conj(w)
        (a, b), (c, d) = self.matrix
        return -2.0 * np.angle(c * w + d)

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """``self o other``."""
        M2 = other.M
        if self.reversing:
            M2 = _D @ M2 @ _D
        return MobiusMap(self.M @ M2, self.reversing != other.reversing)

    def inverse(self) -> "MobiusMap":
        Mi = np.linalg.inv(self.M)
        if self.reversing:
            Mi = _D @ Mi @ _D
        return MobiusMap(Mi, self.reversing)


def mobius_apply(m: MobiusMap, p: H2Point) -> H2Point:
    p = as_point(p)
    w = complex(m(p.w))
    return H2Point.from_complex(complex(from_halfplane(w, p.model)), p.model)


# ---------------------------------------------------------------------------
# geodesics in closed form


def h2_log(p, q) -> np.ndarray:
    """Half-plane velocity at ``p`` of the geodesic reaching ``q`` at time 1."""
    a, b = as_point(p).w, as_point(q).w
    if a == b:
        return np.zeros(2)
    d = distance(p, q)
    if abs(a.real - b.real) <= 1e-14 * max(1.0, abs(a), abs(b)):
        e = np.array([0.0, 1.0 if b.imag > a.imag else -1.0])
    else:
        c = (abs(a) ** 2 - abs(b) ** 2) / (2 * (a.real - b.real))
        sa = np.angle(a - c)
        sb = np.angle(b - c)
        sign = 1.0 if sb > sa else -1.0
        e = sign * np.array([-math.sin(sa), math.cos(sa)])
    return d * a.imag * e


def h2_exp(p, V, t=1.0):
    """Point(s) ``exp_p(t V)`` of the half-plane, vectorised over ``t``."""
    w = as_point(p).w
    V = np.asarray(V, dtype=float)
    speed = math.hypot(*V) / w.imag
    t = np.asarray(t, dtype=float)
    if speed == 0:
        return np.full(t.shape, w, dtype=complex)
    phi = math.atan2(V[1], V[0])
    up = 1j * np.exp(speed * t)
    rot = MobiusMap.rotation(1j, phi - math.pi / 2)
    return w.imag * rot(up) + w.real


@dataclass(frozen=True)
class ConstantCurvatureCurve:
    """Geodesic, hypercycle, horocycle or circle of the half-plane.

    params by kind:
      geodesic    ends=(a, b) on the real axis (b may be inf)
      hypercycle  ends=(a, b) of the axis, distance d (signed side)
      horocycle   ideal=a (real or inf), point=(u, v) on the curve
      circle      center=(u, v), radius r
    """

    kind: str
    params: dict = field(default_factory=dict)

    @property
    def K(self) -> float:
        if self.kind == "geodesic":
            return 0.0
        if self.kind == "hypercycle":
            return abs(math.tanh(self.params["d"]))
        if self.kind == "horocycle":
            return 1.0
        if self.kind == "circle":
            return 1.0 / math.tanh(self.params["r"])
        raise ValueError(self.kind)

    def _frame(self):
        """Isometry taking the standard-position curve to this one."""
        k = self.kind
        if k in ("geodesic", "hypercycle"):
            a, b = self.params["ends"]
            if math.isinf(a):
                a, b = b, a
            if math.isinf(b):
                return MobiusMap(((1.0, a), (0.0, 1.0)))
            if b > a:
                return MobiusMap(((b, a), (1.0, 1.0)))
            return MobiusMap(((b, -a), (1.0, -1.0)))
        if k == "horocycle":
            a = self.params["ideal"]
            if math.isinf(a):
                return MobiusMap.identity()
            return MobiusMap(((a, -1.0), (1.0, 0.0)))
        if k == "circle":
            u, v = self.params["center"]
            return MobiusMap(((v, u), (0.0, 1.0)))
        raise ValueError(k)

    def _standard(self, t):
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "geodesic":
            return 1j * np.exp(t)
        if k == "hypercycle":
            d = self.params["d"]
            s = t / math.cosh(d)
            return np.exp(s) * complex(math.tanh(d), 1 / math.cosh(d))
        if k == "horocycle":
            w0 = self._frame().inverse()(complex(*self.params["point"]))
            return complex(w0) + complex(w0).imag * t
        if k == "circle":
            r = self.params["r"]
            psi = t / math.sinh(r)
            c, s = np.cos(psi / 2), np.sin(psi / 2)
            z = 1j * math.exp(r)
            return (c * z + s) / (-s * z + c)
        raise ValueError(k)

    def points(self, t, model="halfplane"):
        """Points at arc-length parameters ``t`` as complex numbers in ``model``."""
        return from_halfplane(self._frame()(self._standard(t)), model)

    def sample(self, n=200, t0=-1.0, t1=1.0, model="halfplane") -> CurveSample:
        t = np.linspace(t0, t1, n)
        z = self.points(t, model)
        chart = "h2" if model == "halfplane" else "h2disk"
        return CurveSample(t, np.column_stack([z.real, z.imag]), chart_id=chart,
                           meta={"kind": self.kind, "model": model})

    def defect(self, p) -> float:
        """Zero exactly when ``p`` lies on the curve."""
        w = complex(self._frame().inverse()(as_point(p).w))
        k = self.kind
        if k == "geodesic":
            return abs(math.asinh(w.real / w.imag))
        if k == "hypercycle":
            return abs(math.asinh(w.real / w.imag) - self.params["d"])
        if k == "horocycle":
            w0 = self._frame().inverse()(complex(*self.params["point"]))
            return abs(math.log(w.imag / complex(w0).imag))
        if k == "circle":
            return abs(distance(w, 1j) - self.params["r"])
        raise ValueError(k)

    def contains(self, p, tol=1e-10) -> bool:
        return self.defect(p) < tol

    def disk_form(self):
        """Geodesics in the disk: ``("diameter", angle)`` or ``("arc", center, radius)``."""
        if self.kind != "geodesic":
            raise ValueError("disk_form is defined for geodesics")
        e = [1.0 + 0j if math.isinf(a) else complex(halfplane_to_disk(a))
             for a in self.params["ends"]]
        if abs(e[0] + e[1]) < 1e-12:
            return ("diameter", float(np.angle(e[0])))
        half = abs(np.angle(e[1] / e[0])) / 2
        direction = (e[0] + e[1]) / abs(e[0] + e[1])
        return ("arc", complex(direction / math.cos(half)), math.tan(half))

    def to_json(self) -> str:
        def clean(x):
            if isinstance(x, (tuple, list)):
                return [clean(c) for c in x]
            return None if isinstance(x, float) and math.isinf(x) else x

        params = {k: clean(v) for k, v in self.params.items()}
        return json.dumps({"kind": self.kind, "params": params, "K": self.K}, sort_keys=True)


def geodesic_between(p, q) -> ConstantCurvatureCurve:
    """The unique geodesic through two distinct points (any model)."""
    a, b = as_point(p).w, as_point(q).w
    if abs(a - b) < 1e-15 * max(1.0, abs(a)):
        raise DegenerateInputError("geodesic_between needs two distinct points")
    if abs(a.real - b.real) <= 1e-13 * max(1.0, abs(a), abs(b)):
        return ConstantCurvatureCurve("geodesic", {"ends": (0.5 * (a.real + b.real), math.inf)})
    c = (abs(a) ** 2 - abs(b) ** 2) / (2 * (a.real - b.real))
    R = abs(a - c)
    return ConstantCurvatureCurve("geodesic", {"ends": (c - R, c + R)})


def hypercycle(axis: ConstantCurvatureCurve, d: float) -> ConstantCurvatureCurve:
    return ConstantCurvatureCurve("hypercycle", {"ends": axis.params["ends"], "d": float(d)})


def horocycle(ideal: float, point) -> ConstantCurvatureCurve:
    w = as_point(point).w
    return ConstantCurvatureCurve("horocycle", {"ideal": float(ideal), "point": (w.real, w.imag)})


def circle(center, r: float) -> ConstantCurvatureCurve:
    if r <= 0:
        raise DegenerateInputError("circle radius must be positive")
    w = as_point(center).w
    return ConstantCurvatureCurve("circle", {"center": (w.real, w.imag), "r": float(r)})


# ---------------------------------------------------------------------------
# classification of sampled curves


@dataclass
class CurveClassification:
    kind: str
    K: float
    K_values: list
    spread: float

    def to_dict(self):
        return {"kind": self.kind, "K": self.K, "K_values": list(self.K_values),
                "spread": self.spread}


def _arc_length(chart, pts):
    d = np.diff(pts, axis=0)
    mid = 0.5 * (pts[1:] + pts[:-1])
    return float(np.sum(core.norm(chart, mid, d)))


def kind_for_curvature(K: float) -> str:
    if K < KIND_BAND:
        return "geodesic"
    if abs(K - 1.0) < KIND_BAND:
        return "horocycle"
    return "hypercycle" if K < 1.0 else "circle"


def classify_curve(sample: CurveSample, model: Optional[str] = None, n_probe: int = 7,
                   tol: float = CONSTANCY_TOL) -> CurveClassification:
    """Classify a sampled curve of the hyperbolic plane by its geodesic curvature."""
    if model is None:
        model = sample.meta.get("model", "disk" if sample.chart_id == "h2disk" else "halfplane")
    if model == "klein":
        raise ValueError("the Klein model is not conformal; convert first")
    chart = "h2" if model == "halfplane" else "h2disk"
    if len(sample) < 20:
        raise ValueError("classify_curve needs at least 20 samples")
    if _arc_length(chart, sample.points) < 1.0 - 1e-9:
        raise ValueError("classify_curve needs samples spanning arc length >= 1")
    n_probe = max(n_probe, 5)
    t = sample.params
    probes = np.linspace(t[2], t[-3], n_probe)
    K = np.array([core.curve_geodesic_curvature(chart, sample, s) for s in probes])
    Km = float(np.median(K))
    spread = float(K.max() - K.min())
    if spread > tol * max(1.0, Km):
        kind = "not-constant-curvature"
    else:
        kind = kind_for_curvature(Km)
    return CurveClassification(kind, Km, K.tolist(), spread)


# ---------------------------------------------------------------------------
# Klein model and triangles


def klein_map(p) -> np.ndarray:
    """Klein-model coordinates of ``p`` as a point of the Euclidean unit disk."""
    k = complex(disk_to_klein(halfplane_to_disk(as_point(p).w)))
    return np.array([k.real, k.imag])


def collinearity_residual(xy) -> float:
    """Max distance of planar points from their total-least-squares line."""
    return fit_line(xy).max_residual


def triangle_holonomy_target(angles) -> float:
    """Angle defect ``pi - (a + b + c)`` of a hyperbolic triangle."""
    a = [float(x) for x in angles]
    if len(a) != 3 or min(a) <= 0:
        raise DegenerateInputError("need three positive angles")
    s = sum(a)
    if s >= math.pi:
        raise DegenerateInputError(f"angle sum {s} is not below pi")
    return math.pi - s


def triangle_angles(a, b, c):
    """Interior angles measured between the tangent directions of the sides."""
    pts = [as_point(x) for x in (a, b, c)]
    out = []
    for i in range(3):
        p, q, r = pts[i], pts[(i + 1) % 3], pts[(i + 2) % 3]
        t1, t2 = h2_log(p, q), h2_log(p, r)
        n1, n2 = np.linalg.norm(t1), np.linalg.norm(t2)
        if n1 == 0 or n2 == 0:
            raise DegenerateInputError("triangle has coincident vertices")
        cos = float(np.clip(t1 @ t2 / (n1 * n2), -1.0, 1.0))
        sin = abs(t1[0] * t2[1] - t1[1] * t2[0]) / (n1 * n2)
        out.append(math.atan2(sin, cos))
    return out
