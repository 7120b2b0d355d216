"""Numerical certification of geodesic-preserving maps and totally geodesic sets.

A map passes when the images of sampled geodesic segments each lie on a
single geodesic as a set.  The test for a mapped point set ``Q_0..Q_{K-1}``:

1. shoot from ``Q_0`` to ``Q_1``, then (continuing from that velocity) to
   ``Q_{K-1}``;
2. integrate that geodesic over a parameter window covering all points;
3. measure each ``Q_i``'s distance to the curve (nearest sample refined on a
   cubic Hermite interpolant);
4. if the worst distance is above the pass tolerance, minimise it over the
   initial velocity with ``scipy.optimize.least_squares``.

The residual is that minimised worst distance.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import least_squares

from . import core, nil, sol
from . import hyperbolic as hyp
from . import sl2r
from .core import get_chart, integrate_batch
from .shooting import ChordReport, Surface, chord_residual, local_distance, shoot

PASS_TOL = 1e-7
FAIL_TOL = 1e-2
K_POINTS = 25
SEGMENT = 2.0
NONCONVERGENCE_LIMIT = 0.1
TRACE_STEP = 2e-3
REFINE_STEP = 1e-2

PATCHES = {
    "cylinder": ((0.0, 1.0), (-1.0, 1.0)),
    "h2xr": ((-1.0, 1.0), (0.5, 2.0), (-1.0, 1.0)),
    "s2xr": None,
    "sl2r": ((-1.0, 1.0), (0.5, 2.0), (-math.pi, math.pi)),
    "nil": ((-1.0, 1.0),) * 3,
    "sol": ((-1.0, 1.0),) * 3,
}


# ---------------------------------------------------------------------------
# candidate maps


@dataclass(frozen=True)
class CandidateMap:
    """A bijection of a chart with its inverse, acting on arrays ``(..., dim)``."""

    id: str
    geometry: str
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    tags: tuple = ("custom",)
    expected: str = "pass"

    def __call__(self, p):
        return self.forward(np.asarray(p, dtype=float))

    def inverted(self) -> "CandidateMap":
        return CandidateMap(f"inverse({self.id})", self.geometry, self.inverse, self.forward,
                            self.tags, self.expected)

    def then(self, other: "CandidateMap") -> "CandidateMap":
        """``other o self``."""
        if other.geometry != self.geometry:
            raise ValueError("maps act on different geometries")
        exp = "pass" if self.expected == other.expected == "pass" else "unknown"
        return CandidateMap(f"{other.id}∘{self.id}", self.geometry,
                            lambda p: other.forward(self.forward(p)),
                            lambda p: self.inverse(other.inverse(p)),
                            tuple(sorted(set(self.tags) | set(other.tags))), exp)


def compose(outer: CandidateMap, inner: CandidateMap) -> CandidateMap:
    return inner.then(outer)


def inverse(m: CandidateMap) -> CandidateMap:
    return m.inverted()


def _rowwise(f):
    """Lift a function of one point to arrays of points."""
    def g(p):
        p = np.asarray(p, dtype=float)
        flat = p.reshape(-1, p.shape[-1])
        return np.array([f(x) for x in flat]).reshape(p.shape)
    return g


def _identity(geometry):
    return CandidateMap(f"{geometry}:identity", geometry, lambda p: np.array(p, dtype=float),
                        lambda p: np.array(p, dtype=float), ("isometry",))


def _cyl_map(fs, fh):
    def f(p):
        p = np.array(p, dtype=float)
        s, h = p[..., 0], p[..., 1]
        return np.stack([fs(s, h), fh(s, h)], axis=-1)
    return f


def _height_affine(a, b):
    def fwd(p):
        p = np.array(p, dtype=float)
        p[..., -1] = a * p[..., -1] + b
        return p

    def inv(p):
        p = np.array(p, dtype=float)
        p[..., -1] = (p[..., -1] - b) / a
        return p
    return fwd, inv


def _rot3(axis, angle):
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


def _s2xr_rotation(R, dh=0.0):
    def fwd(p):
        p = np.array(p, dtype=float)
        p[..., :3] = p[..., :3] @ R.T
        p[..., 3] += dh
        return p

    def inv(p):
        p = np.array(p, dtype=float)
        p[..., :3] = p[..., :3] @ R
        p[..., 3] -= dh
        return p
    return fwd, inv


def _fiber_rotation(kappa):
    def make(sign):
        def f(p):
            p = np.array(p, dtype=float)
            ang = sign * kappa * p[..., 3]
            c, s = np.cos(ang), np.sin(ang)
            x, y = p[..., 0].copy(), p[..., 1].copy()
            p[..., 0] = c * x - s * y
            p[..., 1] = s * x + c * y
            return p
        return f
    return make(1.0), make(-1.0)


def _h2xr_mobius(m: hyp.MobiusMap, dh):
    mi = m.inverse()

    def make(mm, shift):
        def f(p):
            p = np.array(p, dtype=float)
            w = mm(p[..., 0] + 1j * p[..., 1])
            p[..., 0], p[..., 1] = w.real, w.imag
            p[..., 2] += shift
            return p
        return f
    return make(m, dh), make(mi, -dh)


def _sl_lift(m: hyp.MobiusMap):
    mi = m.inverse()
    return (_rowwise(lambda x: sl2r.mobius_lift(m, x).coords),
            _rowwise(lambda x: sl2r.mobius_lift(mi, x).coords))


def _winding(c):
    def make(shift):
        def f(p):
            p = np.array(p, dtype=float)
            p[..., 2] += shift
            return p
        return f
    return make(c), make(-c)


def registry() -> list:
    """Built-in candidate maps with the verdict each is expected to receive."""
    maps = []
    for g in ("cylinder", "h2xr", "s2xr", "sl2r", "nil", "sol"):
        maps.append(_identity(g))

    # cylinder
    maps.append(CandidateMap("cylinder:isometry", "cylinder",
                             _cyl_map(lambda s, h: 0.3 - s, lambda s, h: h + 0.7),
                             _cyl_map(lambda s, h: 0.3 - s, lambda s, h: h - 0.7),
                             ("isometry",)))
    fa, ia = _height_affine(2.0, 1.0)
    affine = CandidateMap("cylinder:affine(2,1)", "cylinder", fa, ia, ("affine_r",))
    maps.append(affine)
    alpha = 1.7
    twist = CandidateMap(f"cylinder:twisting({alpha})", "cylinder",
                         _cyl_map(lambda s, h: s + alpha * h, lambda s, h: h),
                         _cyl_map(lambda s, h: s - alpha * h, lambda s, h: h), ("twisting",))
    maps.append(twist)
    maps.append(affine.then(twist))
    maps.append(CandidateMap("cylinder:nonlinear-twist", "cylinder",
                             _cyl_map(lambda s, h: s + np.sin(h), lambda s, h: h),
                             _cyl_map(lambda s, h: s - np.sin(h), lambda s, h: h),
                             ("custom",), expected="fail"))

    # H^2 x R
    f, i = _h2xr_mobius(hyp.MobiusMap(((2.0, 1.0), (1.0, 1.0))), 0.5)
    maps.append(CandidateMap("h2xr:mobius-shift", "h2xr", f, i, ("isometry",)))
    fa, ia = _height_affine(-0.5, 2.0)
    maps.append(CandidateMap("h2xr:affine(-0.5,2)", "h2xr", fa, ia, ("affine_r",)))

    # S^2 x R
    f, i = _s2xr_rotation(_rot3((1.0, 2.0, 2.0), 0.9), -0.3)
    maps.append(CandidateMap("s2xr:rotation", "s2xr", f, i, ("isometry",)))
    fa, ia = _height_affine(3.0, -1.0)
    maps.append(CandidateMap("s2xr:affine(3,-1)", "s2xr", fa, ia, ("affine_r",)))
    f, i = _fiber_rotation(1.0)
    maps.append(CandidateMap("s2xr:fiber-rotation(1)", "s2xr", f, i, ("fiber_rotation",),
                             expected="fail"))

    # SL2~
    for c, name in ((0.7, "0.7"), (2 * math.pi, "2pi")):
        f, i = _winding(c)
        maps.append(CandidateMap(f"sl2r:winding({name})", "sl2r", f, i, ("winding", "isometry")))
    f, i = _sl_lift(hyp.MobiusMap(((1.0, 0.5), (-0.4, 0.8))))
    maps.append(CandidateMap("sl2r:mobius-lift", "sl2r", f, i, ("isometry",)))
    f, i = _sl_lift(hyp.MobiusMap.reflection())
    maps.append(CandidateMap("sl2r:reflection-lift", "sl2r", f, i, ("isometry",)))

    # Nil
    g = np.array([0.4, -0.7, 1.1])
    maps.append(CandidateMap("nil:left-translation", "nil",
                             lambda p: nil.nil_mul(g, p), lambda p: nil.nil_mul(nil.nil_inv(g), p),
                             ("isometry",)))
    maps.append(CandidateMap("nil:rotation(0.8)", "nil", lambda p: nil.rotation(0.8, p),
                             lambda p: nil.rotation(-0.8, p), ("isometry",)))

    # Sol
    h = np.array([0.5, -0.3, 0.4])
    maps.append(CandidateMap("sol:left-translation", "sol",
                             lambda p: sol.sol_mul(h, p), lambda p: sol.sol_mul(sol.sol_inv(h), p),
                             ("isometry",)))
    for s in (sol.StabilizerIsometry(True, 1, -1), sol.StabilizerIsometry(False, -1, 1)):
        si = s.inverse()
        maps.append(CandidateMap(f"sol:stabilizer{s.code}", "sol",
                                 lambda p, s=s: sol.stabilizer_apply(s, p),
                                 lambda p, si=si: sol.stabilizer_apply(si, p), ("isometry",)))
    return maps


def get_map(map_id: str) -> CandidateMap:
    for m in registry():
        if m.id == map_id:
            return m
    raise KeyError(f"no registered map {map_id!r}")


# ---------------------------------------------------------------------------
# random geodesic segments


def random_geodesics(geometry: str, n: int, rng, k: int = K_POINTS, length: float = SEGMENT):
    """``n`` unit-speed geodesic segments of the given length, ``k`` points each.

    Returns ``(points, x0, v0)`` with ``points`` of shape ``(n, k, dim)``.
    """
    chart = get_chart(geometry)
    if geometry == "s2xr":
        X = rng.normal(size=(n, 3))
        X /= np.linalg.norm(X, axis=1)[:, None]
        x0 = np.column_stack([X, rng.uniform(-1, 1, n)])
    else:
        box = np.array(PATCHES[geometry])
        x0 = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.uniform(size=(n, len(box)))
    v0 = core.random_unit_vectors(chart, x0, rng)
    n_steps = int(round(length / 1e-3))
    ts, xs, vs, ok = integrate_batch(chart, x0, v0, length, n_steps)
    idx = np.linspace(0, n_steps, k).round().astype(int)
    return np.swapaxes(xs[idx], 0, 1), x0, v0


# ---------------------------------------------------------------------------
# fitting a geodesic through mapped points


def _normalise(geometry, Q):
    Q = np.array(Q, dtype=float)
    if geometry == "cylinder":
        # choose lifts to the cover so consecutive points are close
        d = np.diff(Q[:, 0])
        d -= np.round(d)
        Q[1:, 0] = Q[0, 0] + np.cumsum(d)
    return Q


def _trace(chart, x0, v0, t_lo, t_hi, step=TRACE_STEP):
    """Samples of the geodesic ``exp_{x0}(t v0)`` for ``t`` in ``[t_lo, t_hi]``."""
    speed = float(core.norm(chart, x0, v0))
    nf = max(2, int(math.ceil(t_hi * speed / step)))
    nb = max(2, int(math.ceil(-t_lo * speed / step)))
    tf, xf, vf, okf = integrate_batch(chart, x0[None], v0[None], t_hi, nf)
    tb, xb, vb, okb = integrate_batch(chart, x0[None], -v0[None], -t_lo, nb)
    mf, mb = int(okf[0]), int(okb[0])
    ts = np.concatenate([-tb[1:mb][::-1], tf[:mf]])
    xs = np.concatenate([xb[1:mb, 0][::-1], xf[:mf, 0]])
    vs = np.concatenate([-vb[1:mb, 0][::-1], vf[:mf, 0]])
    return ts, xs, vs


def _distance(chart, p, q):
    if chart.embedded:
        return np.linalg.norm(np.asarray(q) - np.asarray(p), axis=-1)
    return local_distance(chart, p, q)


def _hermite(x0, x1, v0, v1, h, s):
    s2, s3 = s * s, s * s * s
    return ((2 * s3 - 3 * s2 + 1) * x0 + (s3 - 2 * s2 + s) * h * v0
            + (-2 * s3 + 3 * s2) * x1 + (s3 - s2) * h * v1)


_GOLD = (math.sqrt(5) - 1) / 2


def curve_distances(chart, ts, xs, vs, Q, iters: int = 40) -> np.ndarray:
    """Distance from each point of ``Q`` to the sampled curve, refined between samples.

    The nearest sample is found by brute force; the minimum over the two
    adjacent intervals is then located on the cubic Hermite interpolant by a
    golden-section search run for all points at once.
    """
    chart = get_chart(chart)
    Q = np.asarray(Q, dtype=float)
    D = _distance(chart, xs[None, :, :], Q[:, None, :])
    D = np.where(np.isfinite(D), D, np.inf)
    i = np.clip(np.argmin(D, axis=1), 1, len(ts) - 2)

    def at(sigma):
        # sigma in [-1, 1] covers [t_{i-1}, t_{i+1}]
        left = sigma < 0
        a = np.where(left, i - 1, i)
        s = np.where(left, sigma + 1.0, sigma)[:, None]
        h = (ts[a + 1] - ts[a])[:, None]
        x = _hermite(xs[a], xs[a + 1], vs[a], vs[a + 1], h, s)
        if chart.project is not None:
            x = chart.project(x)
        return _distance(chart, x, Q)

    lo, hi = np.full(len(Q), -1.0), np.full(len(Q), 1.0)
    c = hi - _GOLD * (hi - lo)
    d = lo + _GOLD * (hi - lo)
    fc, fd = at(c), at(d)
    for _ in range(iters):
        left = fc < fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        c_new = hi - _GOLD * (hi - lo)
        d_new = lo + _GOLD * (hi - lo)
        # reuse one interior evaluation per step
        c, d = np.where(left, c_new, d), np.where(left, c, d_new)
        fc, fd = np.where(left, at(c_new), fd), np.where(left, fc, at(d_new))
    return np.minimum(np.minimum(fc, fd), D.min(axis=1))


def _polyline_length(chart, Q):
    return float(np.sum(_distance(chart, Q[:-1], Q[1:])))


@dataclass
class GeodesicFit:
    residual: float
    distances: np.ndarray
    velocity: np.ndarray
    converged: bool


def fit_geodesic(geometry: str, Q, pass_tol: float = PASS_TOL, refine: bool = True) -> GeodesicFit:
    """Smallest worst-point distance of ``Q`` to a geodesic through ``Q[0]``."""
    chart = get_chart(geometry)
    Q = _normalise(geometry, Q)
    r1 = shoot(chart, Q[0], Q[1])
    if not r1.converged:
        return GeodesicFit(math.inf, np.full(len(Q), np.inf), r1.velocity, False)
    L1 = float(_distance(chart, Q[0][None], Q[1][None])[0])
    Lk = _polyline_length(chart, Q)
    guess = r1.velocity * (Lk / max(L1, 1e-300))
    rk = shoot(chart, Q[0], Q[-1], guess=guess)
    V = rk.velocity if rk.converged else r1.velocity
    # parameter t = 1 reaches Q[-1] (or Q[1]); cover the whole set generously
    span = 1.0 if rk.converged else Lk / max(L1, 1e-300)

    vcap = 4.0 * (Lk + 1.0) / span

    def dists(Vv, step=TRACE_STEP):
        if float(core.norm(chart, Q[0], Vv)) > vcap:
            return np.full(len(Q), 1e3)
        ts, xs, vs = _trace(chart, Q[0], Vv, -0.25 * span, 1.25 * span, step)
        return curve_distances(chart, ts, xs, vs, Q)

    d = dists(V)
    res = float(np.max(d))
    if refine and res > pass_tol and np.isfinite(res):
        scale = max(np.linalg.norm(V), 1e-12)
        fit = least_squares(lambda x: dists(V + scale * x, REFINE_STEP), np.zeros_like(V),
                            diff_step=1e-6, max_nfev=10 * len(V),
                            xtol=1e-14, ftol=1e-14, gtol=1e-14)
        d2 = dists(V + scale * fit.x)
        if np.max(d2) < res:
            V, d, res = V + scale * fit.x, d2, float(np.max(d2))
    return GeodesicFit(res, d, V, True)


# ---------------------------------------------------------------------------
# reports


@dataclass
class PreservationReport:
    map_id: str
    geometry: str
    n_geodesics: int
    residuals: list
    converged: list
    verdict: str
    expected: str
    seed: int
    tol: float
    witness: Optional[dict] = None

    @property
    def as_expected(self) -> bool:
        return self.expected == "unknown" or self.verdict == self.expected

    def to_dict(self):
        return {"map": self.map_id, "geometry": self.geometry, "n_geodesics": self.n_geodesics,
                "residuals": [float(r) for r in self.residuals],
                "converged": [bool(c) for c in self.converged],
                "max_residual": float(max(self.residuals)) if self.residuals else 0.0,
                "verdict": self.verdict, "expected": self.expected,
                "seed": self.seed, "tol": self.tol, "witness": self.witness}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def check_preserving(m: CandidateMap, n: int = 10, tol: float = PASS_TOL, seed: int = 0,
                     fail_tol: float = FAIL_TOL, k: int = K_POINTS) -> PreservationReport:
    """Test set-wise geodesic containment of ``m``'s images of ``n`` random geodesics."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    P, x0, v0 = random_geodesics(m.geometry, n, rng, k)
    residuals, conv = [], []
    worst = None
    for j in range(n):
        Q = m(P[j])
        f = fit_geodesic(m.geometry, Q, tol)
        residuals.append(f.residual if f.converged else float("nan"))
        conv.append(f.converged)
        if f.converged and (worst is None or f.residual > worst[0]):
            worst = (f.residual, j, f)
    n_bad = n - sum(conv)
    good = [r for r, c in zip(residuals, conv) if c]
    if n_bad > NONCONVERGENCE_LIMIT * n:
        verdict = "inconclusive"
    elif good and max(good) > fail_tol:
        verdict = "fail"
    elif all(r < tol for r in good):
        verdict = "pass"
    else:
        verdict = "inconclusive"
    witness = None
    if verdict == "fail" and worst is not None:
        r, j, f = worst
        i = int(np.argmax(f.distances))
        witness = {"geodesic": j, "point": [float(c) for c in x0[j]],
                   "velocity": [float(c) for c in v0[j]], "residual": float(r),
                   "worst_index": i, "worst_image": [float(c) for c in m(P[j][i])]}
    return PreservationReport(m.id, m.geometry, n, residuals, conv, verdict, m.expected,
                              seed, tol, witness)


@dataclass
class TotallyGeodesicReport:
    surface: str
    chord: ChordReport
    verdict: str
    expected: str = "unknown"
    diagnostics: dict = field(default_factory=dict)

    @property
    def as_expected(self) -> bool:
        return self.expected == "unknown" or self.verdict == self.expected

    def to_dict(self):
        return {"surface": self.surface, "verdict": self.verdict, "expected": self.expected,
                **self.chord.to_dict(), "diagnostics": self.diagnostics}


def check_totally_geodesic(surface: Surface, n_pairs: int = 12, tol: float = 1e-6,
                           seed: int = 0, fail_tol: float = FAIL_TOL,
                           expected: str = "unknown") -> TotallyGeodesicReport:
    rep = chord_residual(surface, n_pairs=n_pairs, seed=seed)
    good = [r for r, c in zip(rep.residuals, rep.converged) if c]
    if len(good) < (1 - NONCONVERGENCE_LIMIT) * len(rep.residuals):
        verdict = "inconclusive"
    elif max(good) > fail_tol:
        verdict = "fail"
    elif max(good) < tol:
        verdict = "pass"
    else:
        verdict = "inconclusive"
    return TotallyGeodesicReport(surface.name, rep, verdict, expected)


def surface_suite() -> dict:
    """Built-in subsets per geometry with their expected verdicts."""
    from . import product

    return {
        "h2xr": [(product.h2xr_horizontal_plane(0.3), "pass"),
                 (product.h2xr_vertical_plane(0.2), "pass")],
        "sl2r": [(sl2r.horizontal_plane(), "fail")],
        "sol": [(sol.tg_plane_chart("x", 0.0).surface(), "pass"),
                (sol.tg_plane_chart("y", 0.0).surface(), "pass"),
                (sol.horizontal_plane(0.0), "fail")],
    }


# ---------------------------------------------------------------------------
# parallels through a point


def non_crossing_directions(plane: str = "h2", n: int = 3600) -> int:
    """How many of ``n`` equally spaced lines through a point miss a fixed line.

    ``plane="h2"``: the half-plane, line ``u = 0``, point ``(1, 1)``.
    ``plane="vertical"``: the flat plane ``gamma x R`` in coordinates
    (arc length, height), line ``height = 0``, point ``(0, 1)``.
    """
    phis = np.arange(n) * math.pi / n  # lines, so directions modulo pi
    if plane == "vertical":
        return int(np.sum(np.abs(np.sin(phis)) < 1e-12))
    if plane != "h2":
        raise ValueError("plane must be 'h2' or 'vertical'")
    count = 0
    for phi in phis:
        du, dv = math.cos(phi), math.sin(phi)
        if abs(du) < 1e-15:
            ends = (1.0, math.inf)
        else:
            c = 1.0 + dv / du
            R = math.hypot(1.0 - c, 1.0)
            ends = (c - R, c + R)
        if min(ends) > 0:
            count += 1
    return count
