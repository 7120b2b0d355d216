"""Sol: R^3 with ``(x, y, z) . (a, b, c) = (e^{-z} a + x, e^{z} b + y, c + z)``.

The left-invariant metric is ``e^{2z} dx^2 + e^{-2z} dy^2 + dz^2``.  The planes
``x = c`` and ``y = c`` are totally geodesic copies of H^2; the stabiliser of
the identity is a dihedral group of order eight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _product

import numpy as np

from . import core
from .core import segment_length
from .errors import DegenerateInputError, OutOfChartError
from .shooting import ChordReport, Surface, chord_residual

PATCH = 1.0


@dataclass(frozen=True)
class SolElement:
    x: float
    y: float
    z: float

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    def to_dict(self):
        return {"x": float(self.x), "y": float(self.y), "z": float(self.z)}


def sol_mul(g, h):
    if isinstance(g, SolElement) and isinstance(h, SolElement):
        return SolElement(math.exp(-g.z) * h.x + g.x, math.exp(g.z) * h.y + g.y, h.z + g.z)
    g, h = np.asarray(tuple(g), float), np.asarray(h, float)
    return np.stack([np.exp(-g[..., 2]) * h[..., 0] + g[..., 0],
                     np.exp(g[..., 2]) * h[..., 1] + g[..., 1],
                     h[..., 2] + g[..., 2]], axis=-1)


def sol_inv(g):
    g = np.asarray(tuple(g), float)
    return np.stack([-np.exp(g[..., 2]) * g[..., 0], -np.exp(-g[..., 2]) * g[..., 1],
                     -g[..., 2]], axis=-1)


# ---------------------------------------------------------------------------
# stabiliser of the identity


@dataclass(frozen=True)
class StabilizerIsometry:
    """``(sx x, sy y, z)``, or ``(sx y, sy x, -z)`` when ``swap``."""

    swap: bool = False
    sx: int = 1
    sy: int = 1

    def __post_init__(self):
        if self.sx not in (1, -1) or self.sy not in (1, -1):
            raise ValueError("signs must be +1 or -1")

    @property
    def code(self) -> str:
        s = {1: "+", -1: "-"}
        if self.swap:
            return f"({s[self.sx]}y,{s[self.sy]}x,-z)"
        return f"({s[self.sx]}x,{s[self.sy]}y,z)"

    def __call__(self, p):
        return stabilizer_apply(self, p)

    def compose(self, other: "StabilizerIsometry") -> "StabilizerIsometry":
        """``self o other``."""
        if not self.swap:
            return StabilizerIsometry(other.swap, self.sx * other.sx, self.sy * other.sy)
        # swap after other: x'' = sx * y', y'' = sy * x'
        return StabilizerIsometry(not other.swap, self.sx * other.sy, self.sy * other.sx)

    def inverse(self) -> "StabilizerIsometry":
        if not self.swap:
            return self
        return StabilizerIsometry(True, self.sy, self.sx)

    def matrix(self) -> np.ndarray:
        if self.swap:
            return np.array([[0, self.sx, 0], [self.sy, 0, 0], [0, 0, -1]], dtype=float)
        return np.diag([self.sx, self.sy, 1.0])


STABILIZERS = tuple(StabilizerIsometry(sw, a, b)
                    for sw, a, b in _product((False, True), (1, -1), (1, -1)))


def stabilizer_apply(s: StabilizerIsometry, p):
    p = np.asarray(tuple(p), float)
    return p @ s.matrix().T


# ---------------------------------------------------------------------------
# totally geodesic planes


@dataclass(frozen=True)
class TGPlaneChart:
    """Half-plane coordinates on ``x = c`` (``u = y, v = e^z``) or ``y = c`` (``u = x, v = e^{-z}``)."""

    which: str
    c: float

    def __post_init__(self):
        if self.which not in ("x", "y"):
            raise ValueError("which must be 'x' or 'y'")

    def embed(self, uv):
        uv = np.asarray(uv, dtype=float)
        u, v = uv[..., 0], uv[..., 1]
        if np.any(v <= 0):
            raise OutOfChartError("v must be positive")
        c = np.full_like(u, self.c)
        if self.which == "x":
            return np.stack([c, u, np.log(v)], axis=-1)
        return np.stack([u, c, -np.log(v)], axis=-1)

    def inverse(self, p):
        p = np.asarray(p, dtype=float)
        if self.which == "x":
            return np.stack([p[..., 1], np.exp(p[..., 2])], axis=-1)
        return np.stack([p[..., 0], np.exp(-p[..., 2])], axis=-1)

    def offset(self, p) -> float:
        """Metric length of the coordinate offset from the plane (first-order distance)."""
        p = np.asarray(p, dtype=float)
        if self.which == "x":
            return float(math.exp(p[2]) * abs(p[0] - self.c))
        return float(math.exp(-p[2]) * abs(p[1] - self.c))

    def surface(self, half_width: float = PATCH, grid: int = 10) -> Surface:
        """Patch ``|u| <= half_width``, ``|ln v| <= half_width``, parametrised by ``(u, ln v)``."""
        b = (-half_width, half_width)
        return Surface("sol", lambda ab: self.embed(np.array([ab[0], math.exp(ab[1])])),
                       (b, b), offset_fn=self.offset, name=f"sol plane {self.which}={self.c}",
                       grid=grid)


def tg_plane_chart(which: str, c: float = 0.0) -> TGPlaneChart:
    return TGPlaneChart(which, c)


def horizontal_plane(c: float = 0.0, half_width: float = 1.0, grid: int = 10) -> Surface:
    """The plane ``z = c``; the distance to it is exactly ``|z - c|``."""
    b = (-half_width, half_width)
    return Surface("sol", lambda ab: np.array([ab[0], ab[1], c]), (b, b),
                   offset_fn=lambda q: abs(q[2] - c), name=f"sol plane z={c}", grid=grid)


def vertical_line_surface(x=0.0, y=0.0, half_length: float = 1.0, grid: int = 10) -> Surface:
    """A vertical geodesic viewed as a degenerate surface (second parameter ignored)."""
    def offset(q):
        return float(math.hypot(math.exp(q[2]) * (q[0] - x), math.exp(-q[2]) * (q[1] - y)))

    return Surface("sol", lambda ab: np.array([x, y, ab[0]]),
                   ((-half_length, half_length), (0.0, 0.0)), offset_fn=offset,
                   name="sol vertical line", grid=grid)


def totally_geodesic_residual(surface: Surface, n_pairs: int = 12, seed: int = 0,
                              pairs=None) -> ChordReport:
    """Max distance from ``surface`` of shooting geodesics between its points."""
    if surface.grid < 10:
        raise DegenerateInputError("need at least a 10 x 10 grid")
    return chord_residual(surface, n_pairs=n_pairs, seed=seed, pairs=pairs)


# ---------------------------------------------------------------------------
# sampled non-return check


@dataclass
class ReturnCheck:
    velocity: np.ndarray
    first_min: float
    later_min: float
    returned: bool


def returns_to_basepoint(v0, t_min: float = 1.0, t_max: float = 50.0,
                         step: float = 5e-3) -> ReturnCheck:
    """Does the geodesic from the identity come back below its first local distance minimum?

    Distance from the identity is measured by the length of the straight
    coordinate segment, an upper bound that is exact on vertical lines.
    """
    v0 = np.asarray(v0, dtype=float)
    n = int(math.ceil(t_max / step))
    ts, xs, _, ok = core.integrate_batch("sol", np.zeros((1, 3)), v0[None], t_max, n)
    m = int(ok[0])
    ts, path = ts[:m], xs[:m, 0]
    rho = segment_length("sol", np.zeros_like(path), path)
    after = ts >= t_min
    r = rho[after]
    mins = np.flatnonzero((r[1:-1] < r[:-2]) & (r[1:-1] <= r[2:])) + 1
    first = float(r[mins[0]]) if len(mins) else float(r[0])
    start = mins[0] if len(mins) else 0
    later = float(np.min(r[start + 1:])) if start + 1 < len(r) else math.inf
    return ReturnCheck(v0, first, later, later < first * (1 - 1e-9))
