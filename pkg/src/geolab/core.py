"""Charts, metrics, Christoffel symbols and geodesic integration.

Every chart works on numpy arrays of shape ``(..., dim)`` so that batches of
points and trajectories can be pushed through the same code path.  The
integrator is a classical fixed-step fourth order Runge-Kutta scheme.

Charts
------
``e2``        flat plane
``h2``        upper half-plane ``(u, v)``, ``(du^2 + dv^2) / v^2``
``h2disk``    Poincare disk, ``4 (dx^2 + dy^2) / (1 - r^2)^2``
``cylinder``  ``S^1 x R`` with the circle coordinate read modulo 1
``h2xr``      ``(u, v, h)``, half-plane times the line
``s2xr``      ``(X, Y, Z, h)`` with ``(X, Y, Z)`` on the unit sphere
``sl2r``      ``(u, v, theta)``, the unit tangent bundle of the half-plane
``nil``       Heisenberg group, ``dx^2 + dy^2 + (dz - x dy)^2``
``sol``       ``e^{2z} dx^2 + e^{-2z} dy^2 + dz^2``
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BoundaryError, DegenerateInputError, OutOfChartError

DEFAULT_STEP = 1e-3
FD_STEP = 1e-5
CSV_SCHEMA = "geolab-curve/1"


@dataclass(frozen=True)
class GeometryChart:
    """A coordinate chart with its metric and geodesic spray.

    ``accel(x, v)`` returns ``-Gamma(x)(v, v)`` (or the ambient projection
    for embedded charts) and is what the integrator calls.
    """

    id: str
    dim: int
    metric: Callable[[np.ndarray], np.ndarray]
    accel: Callable[[np.ndarray, np.ndarray], np.ndarray]
    in_domain: Callable[[np.ndarray], np.ndarray]
    christoffel_exact: Optional[Callable[[np.ndarray], np.ndarray]] = None
    coord_names: tuple = ()
    embedded: bool = False
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __repr__(self):
        return f"GeometryChart({self.id!r}, dim={self.dim})"


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))
        if self.base.shape != self.components.shape:
            raise ValueError("base and components must have the same arity")
        if not np.all(np.isfinite(self.components)):
            raise ValueError("tangent vector components must be finite")

    def norm(self, chart: GeometryChart) -> float:
        return float(np.sqrt(inner(chart, self.base, self.components, self.components)))

    def scaled(self, c: float) -> "TangentVector":
        return TangentVector(self.base, c * self.components)


@dataclass(frozen=True)
class GeodesicSpec:
    """A geodesic given by its initial point and velocity, with a class tag."""

    chart_id: str
    point: tuple
    velocity: tuple
    tag: str = ""

    def sample(self, t_end: float, n_steps: Optional[int] = None) -> "CurveSample":
        return geodesic_integrate(self.chart_id, TangentVector(self.point, self.velocity),
                                  t_end, n_steps)


@dataclass
class CurveSample:
    """Ordered samples ``(t_i, x_i)`` of a curve in some chart."""

    params: np.ndarray
    points: np.ndarray
    velocities: Optional[np.ndarray] = None
    chart_id: str = ""
    partial: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.velocities is not None:
            self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=float))
        if len(self.params) != len(self.points):
            raise ValueError("params and points must have the same length")
        if len(self.params) > 1 and np.any(np.diff(self.params) <= 0):
            raise ValueError("params must be strictly increasing")

    def __len__(self):
        return len(self.params)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {CSV_SCHEMA} chart={self.chart_id} partial={int(self.partial)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t"] + [f"x{i + 1}" for i in range(self.dim)])
        for t, row in zip(self.params, self.points):
            writer.writerow([repr(float(t))] + [repr(float(c)) for c in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CurveSample":
        lines = text.splitlines()
        chart_id, partial = "", False
        if lines and lines[0].startswith("#"):
            for tok in lines[0][1:].split():
                if tok.startswith("chart="):
                    chart_id = tok[6:]
                elif tok.startswith("partial="):
                    partial = tok[8:] == "1"
            lines = lines[1:]
        rows = list(csv.reader(lines[1:]))
        data = np.array([[float(c) for c in r] for r in rows])
        return cls(data[:, 0], data[:, 1:], chart_id=chart_id, partial=partial)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": CSV_SCHEMA,
                "chart": self.chart_id,
                "partial": self.partial,
                "t": self.params.tolist(),
                "points": self.points.tolist(),
                "meta": self.meta,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "CurveSample":
        d = json.loads(text)
        return cls(d["t"], d["points"], chart_id=d.get("chart", ""),
                   partial=d.get("partial", False), meta=d.get("meta", {}))


# ---------------------------------------------------------------------------
# chart definitions


def _all_finite(x):
    return np.all(np.isfinite(x), axis=-1)


def _upper(x):
    return _all_finite(x) & (x[..., 1] > 0)


def _eye_metric(n):
    def metric(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()
    return metric


def _zero_accel(x, v):
    return np.zeros_like(v)


def _zero_gamma(n):
    def gamma(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (n, n, n))
    return gamma


def _h2_metric(x):
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.shape[:-1] + (2, 2))
    w = 1.0 / x[..., 1] ** 2
    g[..., 0, 0] = w
    g[..., 1, 1] = w
    return g


def _h2_gamma(x):
    x = np.asarray(x, dtype=float)
    G = np.zeros(x.shape[:-1] + (2, 2, 2))
    iv = 1.0 / x[..., 1]
    G[..., 0, 0, 1] = G[..., 0, 1, 0] = -iv
    G[..., 1, 0, 0] = iv
    G[..., 1, 1, 1] = -iv
    return G


def _h2_accel(x, v):
    iv = 1.0 / x[..., 1]
    a = np.empty_like(v)
    a[..., 0] = 2.0 * v[..., 0] * v[..., 1] * iv
    a[..., 1] = (v[..., 1] ** 2 - v[..., 0] ** 2) * iv
    return a


def _disk_in(x):
    return _all_finite(x) & (np.sum(np.asarray(x) ** 2, axis=-1) < 1.0)


def _disk_metric(x):
    x = np.asarray(x, dtype=float)
    lam = 2.0 / (1.0 - np.sum(x**2, axis=-1))
    return (lam**2)[..., None, None] * np.broadcast_to(np.eye(2), x.shape[:-1] + (2, 2))


def _disk_gamma(x):
    # conformal metric e^{2 phi} delta with phi = log(2 / (1 - r^2))
    x = np.asarray(x, dtype=float)
    dphi = 2.0 * x / (1.0 - np.sum(x**2, axis=-1))[..., None]
    eye = np.eye(2)
    return (np.einsum("ki,...j->...kij", eye, dphi)
            + np.einsum("kj,...i->...kij", eye, dphi)
            - np.einsum("ij,...k->...kij", eye, dphi))


def _disk_accel(x, v):
    dphi = 2.0 * x / (1.0 - np.sum(x**2, axis=-1))[..., None]
    vd = np.sum(v * dphi, axis=-1)[..., None]
    vv = np.sum(v * v, axis=-1)[..., None]
    return -(2.0 * vd * v - vv * dphi)


def _h2xr_metric(x):
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.shape[:-1] + (3, 3))
    w = 1.0 / x[..., 1] ** 2
    g[..., 0, 0] = w
    g[..., 1, 1] = w
    g[..., 2, 2] = 1.0
    return g


def _h2xr_gamma(x):
    x = np.asarray(x, dtype=float)
    G = np.zeros(x.shape[:-1] + (3, 3, 3))
    G[..., :2, :2, :2] = _h2_gamma(x[..., :2])
    return G


def _h2xr_accel(x, v):
    a = np.zeros_like(v)
    a[..., :2] = _h2_accel(x[..., :2], v[..., :2])
    return a


def _sl2r_metric(x):
    # (du^2 + dv^2)/v^2 + (dtheta + du/v)^2
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.shape[:-1] + (3, 3))
    iv = 1.0 / x[..., 1]
    g[..., 0, 0] = 2.0 * iv**2
    g[..., 1, 1] = iv**2
    g[..., 2, 2] = 1.0
    g[..., 0, 2] = g[..., 2, 0] = iv
    return g


def _sl2r_gamma(x):
    x = np.asarray(x, dtype=float)
    G = np.zeros(x.shape[:-1] + (3, 3, 3))
    iv = 1.0 / x[..., 1]
    u, v, t = 0, 1, 2
    G[..., u, u, v] = G[..., u, v, u] = -1.5 * iv
    G[..., u, v, t] = G[..., u, t, v] = -0.5
    G[..., v, u, u] = 2.0 * iv
    G[..., v, u, t] = G[..., v, t, u] = 0.5
    G[..., v, v, v] = -iv
    G[..., t, u, v] = G[..., t, v, u] = iv**2
    G[..., t, v, t] = G[..., t, t, v] = 0.5 * iv
    return G


def _sl2r_accel(x, v):
    iv = 1.0 / x[..., 1]
    vu, vv, vt = v[..., 0], v[..., 1], v[..., 2]
    a = np.empty_like(v)
    a[..., 0] = 3.0 * vu * vv * iv + vv * vt
    a[..., 1] = -2.0 * vu**2 * iv - vu * vt + vv**2 * iv
    a[..., 2] = -2.0 * vu * vv * iv**2 - vv * vt * iv
    return a


def _nil_metric(x):
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.shape[:-1] + (3, 3))
    xx = x[..., 0]
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = 1.0 + xx**2
    g[..., 2, 2] = 1.0
    g[..., 1, 2] = g[..., 2, 1] = -xx
    return g


def _nil_gamma(x):
    x = np.asarray(x, dtype=float)
    G = np.zeros(x.shape[:-1] + (3, 3, 3))
    xx = x[..., 0]
    X, Y, Z = 0, 1, 2
    G[..., X, Y, Y] = -xx
    G[..., X, Y, Z] = G[..., X, Z, Y] = 0.5
    G[..., Y, X, Y] = G[..., Y, Y, X] = 0.5 * xx
    G[..., Y, X, Z] = G[..., Y, Z, X] = -0.5
    G[..., Z, X, Y] = G[..., Z, Y, X] = 0.5 * xx**2 - 0.5
    G[..., Z, X, Z] = G[..., Z, Z, X] = -0.5 * xx
    return G


def _nil_accel(x, v):
    xx = x[..., 0]
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    a = np.empty_like(v)
    a[..., 0] = xx * vy**2 - vy * vz
    a[..., 1] = vx * vz - xx * vx * vy
    a[..., 2] = (1.0 - xx**2) * vx * vy + xx * vx * vz
    return a


def _sol_metric(x):
    x = np.asarray(x, dtype=float)
    g = np.zeros(x.shape[:-1] + (3, 3))
    z = x[..., 2]
    g[..., 0, 0] = np.exp(2.0 * z)
    g[..., 1, 1] = np.exp(-2.0 * z)
    g[..., 2, 2] = 1.0
    return g


def _sol_gamma(x):
    x = np.asarray(x, dtype=float)
    G = np.zeros(x.shape[:-1] + (3, 3, 3))
    z = x[..., 2]
    G[..., 0, 0, 2] = G[..., 0, 2, 0] = 1.0
    G[..., 1, 1, 2] = G[..., 1, 2, 1] = -1.0
    G[..., 2, 0, 0] = -np.exp(2.0 * z)
    G[..., 2, 1, 1] = np.exp(-2.0 * z)
    return G


def _sol_accel(x, v):
    z = x[..., 2]
    vx, vy, vz = v[..., 0], v[..., 1], v[..., 2]
    a = np.empty_like(v)
    a[..., 0] = -2.0 * vx * vz
    a[..., 1] = 2.0 * vy * vz
    a[..., 2] = np.exp(2.0 * z) * vx**2 - np.exp(-2.0 * z) * vy**2
    return a


def _s2xr_in(x):
    x = np.asarray(x, dtype=float)
    return _all_finite(x) & (np.abs(np.sum(x[..., :3] ** 2, axis=-1) - 1.0) < 1e-6)


def _s2xr_accel(x, v):
    a = np.zeros_like(v)
    X, V = x[..., :3], v[..., :3]
    a[..., :3] = -np.sum(V * V, axis=-1)[..., None] * X
    return a


def _s2xr_project(x):
    x = np.array(x, dtype=float)
    x[..., :3] /= np.linalg.norm(x[..., :3], axis=-1)[..., None]
    return x


CHARTS = {
    "e2": GeometryChart("e2", 2, _eye_metric(2), _zero_accel, _all_finite,
                        _zero_gamma(2), ("x", "y")),
    "h2": GeometryChart("h2", 2, _h2_metric, _h2_accel, _upper, _h2_gamma, ("u", "v")),
    "h2disk": GeometryChart("h2disk", 2, _disk_metric, _disk_accel, _disk_in,
                            _disk_gamma, ("x", "y")),
    "cylinder": GeometryChart("cylinder", 2, _eye_metric(2), _zero_accel, _all_finite,
                              _zero_gamma(2), ("s", "h")),
    "h2xr": GeometryChart("h2xr", 3, _h2xr_metric, _h2xr_accel, _upper, _h2xr_gamma,
                          ("u", "v", "h")),
    "s2xr": GeometryChart("s2xr", 4, _eye_metric(4), _s2xr_accel, _s2xr_in, None,
                          ("X", "Y", "Z", "h"), embedded=True, project=_s2xr_project),
    "sl2r": GeometryChart("sl2r", 3, _sl2r_metric, _sl2r_accel, _upper, _sl2r_gamma,
                          ("u", "v", "theta")),
    "nil": GeometryChart("nil", 3, _nil_metric, _nil_accel, _all_finite, _nil_gamma,
                         ("x", "y", "z")),
    "sol": GeometryChart("sol", 3, _sol_metric, _sol_accel, _all_finite, _sol_gamma,
                         ("x", "y", "z")),
}


def get_chart(chart) -> GeometryChart:
    if isinstance(chart, GeometryChart):
        return chart
    try:
        return CHARTS[str(chart).lower()]
    except KeyError:
        raise KeyError(f"unknown chart {chart!r}; known: {sorted(CHARTS)}") from None


# ---------------------------------------------------------------------------
# metric quantities


def _check_point(chart, p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != chart.dim:
        raise OutOfChartError(f"{chart.id} points have {chart.dim} coordinates, got {p.shape[-1]}")
    if not np.all(chart.in_domain(p)):
        raise OutOfChartError(f"point {p} is outside the {chart.id} chart")
    return p


def metric_tensor(chart, p) -> np.ndarray:
    """Metric coefficients ``g_ij`` at ``p``."""
    chart = get_chart(chart)
    return chart.metric(_check_point(chart, p))


def inner(chart, p, a, b):
    g = get_chart(chart).metric(np.asarray(p, dtype=float))
    return np.einsum("...i,...ij,...j->...", a, g, b)


def norm(chart, p, a):
    return np.sqrt(inner(chart, p, a, a))


def christoffel(chart, p, method: str = "auto") -> np.ndarray:
    """Christoffel symbols ``G[k, i, j]`` at ``p``.

    ``method`` is ``"exact"`` for registered closed forms, ``"fd"`` for central
    differences of the metric, or ``"auto"`` (exact when available).
    """
    chart = get_chart(chart)
    p = _check_point(chart, p)
    if chart.embedded:
        raise NotImplementedError(f"{chart.id} is integrated in ambient coordinates")
    if method == "exact" or (method == "auto" and chart.christoffel_exact is not None):
        if chart.christoffel_exact is None:
            raise NotImplementedError(f"no closed form registered for {chart.id}")
        return chart.christoffel_exact(p)
    if method not in ("fd", "auto"):
        raise ValueError(f"unknown method {method!r}")
    return christoffel_fd(chart, p)


def christoffel_fd(chart, p, step: float = FD_STEP) -> np.ndarray:
    chart = get_chart(chart)
    p = np.asarray(p, dtype=float)
    n = chart.dim
    h = step * max(1.0, float(np.max(np.abs(p))))
    dg = np.empty((n, n, n))  # dg[l, i, j] = d_l g_ij
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        lo, hi = p - e, p + e
        if not (chart.in_domain(lo) and chart.in_domain(hi)):
            raise BoundaryError(f"stencil at {p} leaves the {chart.id} chart")
        dg[l] = (chart.metric(hi) - chart.metric(lo)) / (2.0 * h)
    ginv = np.linalg.inv(chart.metric(p))
    # lowered symbols G_{l,ij} = (d_i g_lj + d_j g_li - d_l g_ij) / 2
    low = 0.5 * (np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg)
    return np.einsum("kl,lij->kij", ginv, low)


def pullback_metric(chart, embed: Callable, uv, step: float = 1e-3) -> np.ndarray:
    """Induced metric ``J^T g J`` of a parametrised surface at ``uv``.

    The Jacobian uses a five-point stencil, accurate to ``O(step^4)``.
    """
    chart = get_chart(chart)
    uv = np.asarray(uv, dtype=float)
    k = len(uv)
    p = np.asarray(embed(uv), dtype=float)
    J = np.empty((len(p), k))
    for i in range(k):
        h = step * max(1.0, abs(uv[i]))
        e = np.zeros(k)
        e[i] = h
        f = [np.asarray(embed(uv + c * e), dtype=float) for c in (-2, -1, 1, 2)]
        J[:, i] = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12.0 * h)
    return J.T @ chart.metric(p) @ J


# ---------------------------------------------------------------------------
# integration


def _rk4_step(chart, x, v, h):
    acc = chart.accel
    k1x, k1v = v, acc(x, v)
    k2x, k2v = v + 0.5 * h * k1v, acc(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
    k3x, k3v = v + 0.5 * h * k2v, acc(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
    k4x, k4v = v + h * k3v, acc(x + h * k3x, v + h * k3v)
    xn = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
    vn = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    if chart.project is not None:
        xn = chart.project(xn)
        # remove the radial part of the sphere velocity
        X = xn[..., :3]
        vn = vn.copy()
        vn[..., :3] -= np.sum(vn[..., :3] * X, axis=-1)[..., None] * X
    return xn, vn


def _default_steps(chart, x0, v0, t_end, step):
    speed = float(np.max(np.atleast_1d(norm(chart, x0, v0))))
    return max(2, int(math.ceil(abs(t_end) * max(speed, 1e-300) / step)))


def integrate_batch(chart, x0, v0, t_end: float, n_steps: Optional[int] = None,
                    step: float = DEFAULT_STEP):
    """Integrate many geodesics at once.

    ``x0`` and ``v0`` have shape ``(N, dim)``.  Returns ``(ts, xs, vs, ok)``
    with ``xs`` and ``vs`` of shape ``(n_steps + 1, N, dim)`` and ``ok`` the
    number of valid samples per trajectory (trajectories leaving the chart are
    frozen at NaN after exit).
    """
    chart = get_chart(chart)
    x = np.array(x0, dtype=float, ndmin=2)
    v = np.array(v0, dtype=float, ndmin=2)
    if n_steps is None:
        n_steps = _default_steps(chart, x, v, t_end, step)
    h = t_end / n_steps
    xs = np.empty((n_steps + 1,) + x.shape)
    vs = np.empty_like(xs)
    xs[0], vs[0] = x, v
    ok = np.full(x.shape[0], n_steps + 1)
    alive = np.ones(x.shape[0], dtype=bool)
    with np.errstate(all="ignore"):
        for i in range(n_steps):
            x, v = _rk4_step(chart, x, v, h)
            bad = alive & ~(chart.in_domain(x) & _all_finite(v))
            if bad.any():
                ok[bad] = i + 1
                alive &= ~bad
                x[bad] = np.nan
                v[bad] = np.nan
            xs[i + 1], vs[i + 1] = x, v
    ts = np.linspace(0.0, t_end, n_steps + 1)
    return ts, xs, vs, ok


def geodesic_integrate(chart, v0: TangentVector, t_end: float,
                       n_steps: Optional[int] = None, step: float = DEFAULT_STEP) -> CurveSample:
    """Solve ``x'' + Gamma(x)(x', x') = 0`` from ``v0`` over ``[0, t_end]``.

    If the trajectory leaves the chart the sample is truncated and flagged
    ``partial``.
    """
    chart = get_chart(chart)
    x0 = _check_point(chart, v0.base)
    if not np.any(v0.components):
        raise DegenerateInputError("initial velocity must be nonzero")
    if n_steps is not None and n_steps < 2:
        raise ValueError("n_steps must be at least 2")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    ts, xs, vs, ok = integrate_batch(chart, x0[None], v0.components[None], t_end, n_steps, step)
    m = int(ok[0])
    return CurveSample(ts[:m], xs[:m, 0], vs[:m, 0], chart_id=chart.id,
                       partial=m < len(ts))


def geodesic_batch(chart, x0, v0, t_end: float, n_steps: Optional[int] = None,
                   step: float = DEFAULT_STEP) -> list:
    """:func:`geodesic_integrate` for many initial conditions in one integration."""
    chart = get_chart(chart)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    x0, v0 = np.broadcast_arrays(x0, v0)
    ts, xs, vs, ok = integrate_batch(chart, x0, v0, t_end, n_steps, step)
    return [CurveSample(ts[:m], xs[:m, j], vs[:m, j], chart_id=chart.id, partial=m < len(ts))
            for j, m in enumerate(ok)]


def exp_map(chart, v0: TangentVector, n_steps: Optional[int] = None,
            step: float = DEFAULT_STEP) -> np.ndarray:
    """Endpoint of the geodesic with initial velocity ``v0`` at time 1."""
    chart = get_chart(chart)
    if not np.any(v0.components):
        return _check_point(chart, v0.base).copy()
    sample = geodesic_integrate(chart, v0, 1.0, n_steps, step)
    if sample.partial:
        raise OutOfChartError("exponential map leaves the chart")
    return sample.points[-1]


def parallel_transport(chart, x0, v0, w0, t_end: float = 1.0, n_steps: int = 1000):
    """Transport ``w0`` along the geodesic with initial velocity ``v0``.

    Returns ``(x_end, v_end, w_end)``.
    """
    chart = get_chart(chart)
    if chart.christoffel_exact is None:
        raise NotImplementedError("parallel transport needs registered Christoffel symbols")
    G = chart.christoffel_exact

    def rhs(s):
        x, v, w = s
        g = G(x)
        return (v, -np.einsum("kij,i,j->k", g, v, v), -np.einsum("kij,i,j->k", g, v, w))

    s = tuple(np.asarray(a, dtype=float) for a in (x0, v0, w0))
    h = t_end / n_steps
    for _ in range(n_steps):
        k1 = rhs(s)
        k2 = rhs(tuple(a + 0.5 * h * b for a, b in zip(s, k1)))
        k3 = rhs(tuple(a + 0.5 * h * b for a, b in zip(s, k2)))
        k4 = rhs(tuple(a + h * b for a, b in zip(s, k3)))
        s = tuple(a + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
                  for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))
    return s


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(5)


def segment_length(chart, p, q):
    """Length of the straight coordinate segment ``p -> q`` (an upper bound on distance)."""
    chart = get_chart(chart)
    p, q = np.atleast_2d(p), np.atleast_2d(q)
    d = q - p
    total = 0.0
    for x, w in zip(_GAUSS_X, _GAUSS_W):
        s = 0.5 * (x + 1)
        m = p + s * d
        total = total + 0.5 * w * np.sqrt(np.einsum("ni,nij,nj->n", d, chart.metric(m), d))
    return total


def speed_drift(chart, xs, vs, ok=None) -> np.ndarray:
    """Max ``|g(x', x') - g(x'_0, x'_0)|`` along each trajectory of a batch."""
    chart = get_chart(chart)
    e = inner(chart, xs, vs, vs)
    d = np.abs(e - e[0])
    if ok is not None:
        for j, m in enumerate(ok):
            d[m:, j] = 0.0
    return np.nanmax(d, axis=0)


# ---------------------------------------------------------------------------
# curvature of sampled plane curves


def _local_derivatives(params, points, t, width=5):
    n = len(params)
    if n < width:
        raise ValueError(f"need at least {width} samples for the stencil")
    if t < params[0] or t > params[-1]:
        raise ValueError(f"t={t} outside the sample range [{params[0]}, {params[-1]}]")
    i = int(np.searchsorted(params, t))
    lo = min(max(i - width // 2, 0), n - width)
    s = params[lo:lo + width]
    scale = s[-1] - s[0]
    tau = (s - t) / scale
    V = np.vander(tau, width, increasing=True)
    coef = np.linalg.solve(V, points[lo:lo + width])
    x = coef[0]
    d1 = coef[1] / scale
    d2 = 2.0 * coef[2] / scale**2
    return x, d1, d2


def curve_geodesic_curvature(chart2d, sample: CurveSample, t: float) -> float:
    """Unsigned geodesic curvature of a sampled curve at parameter ``t``.

    Derivatives come from a five-point local polynomial, so the parameter need
    not be arc length.
    """
    chart = get_chart(chart2d)
    if chart.dim != 2:
        raise ValueError("geodesic curvature needs a two-dimensional chart")
    x, d1, d2 = _local_derivatives(sample.params, sample.points, t)
    G = chart.christoffel_exact(x) if chart.christoffel_exact else christoffel_fd(chart, x)
    a = d2 + np.einsum("kij,i,j->k", G, d1, d1)
    g = chart.metric(x)
    vv = d1 @ g @ d1
    aa = a @ g @ a
    av = a @ g @ d1
    return float(np.sqrt(max(aa * vv - av**2, 0.0)) / vv**1.5)


def random_unit_vectors(chart, x, rng) -> np.ndarray:
    """Unit vectors with uniformly random direction in an orthonormal frame at ``x``."""
    chart = get_chart(chart)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = chart.dim
    d = rng.normal(size=x.shape)
    if chart.embedded:
        X = x[:, :3]
        d[:, :3] -= np.sum(d[:, :3] * X, axis=1)[:, None] * X
        return d / np.linalg.norm(d, axis=1)[:, None]
    L = np.linalg.cholesky(chart.metric(x))  # g = L L^T
    e = np.linalg.solve(np.swapaxes(L, -1, -2), (d / np.linalg.norm(d, axis=1)[:, None])[..., None])
    return e[..., 0].reshape(x.shape[0], n)
