"""Boundary-value geodesics by shooting, and chord-containment residuals.

``shoot`` finds an initial velocity ``V`` at ``p`` with ``exp_p(V) = q``.  The
Newton iteration uses a forward-difference Jacobian computed by integrating
the base trajectory and its three perturbations as one batch.  A fixed set of
eight starting guesses makes the result deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize

from . import core
from .core import get_chart, integrate_batch

SHOOT_TOL = 1e-9
SHOOT_STEP = 5e-3


@dataclass
class ShootResult:
    velocity: np.ndarray
    miss: float
    converged: bool
    iterations: int
    start: int


def _endpoints(chart, p, V, n_steps):
    ts, xs, vs, ok = integrate_batch(chart, np.broadcast_to(p, V.shape), V, 1.0, n_steps)
    end = xs[-1]
    end[ok < len(ts)] = np.nan
    return end


def _steps_for(chart, p, V, step):
    speed = np.max(core.norm(chart, np.broadcast_to(p, V.shape), V))
    return max(20, int(np.ceil(speed / step)))


def _starts(chart, p, q):
    d = q - p
    if chart.embedded:
        d = d - np.r_[np.dot(d[:3], p[:3]) * p[:3], 0.0]
    scale = max(np.linalg.norm(d), 1e-3)
    out = [d]
    rng = np.random.default_rng(12345)
    for k in range(7):
        jitter = rng.normal(size=d.shape) * scale * (0.25 if k < 4 else 0.6)
        if chart.embedded:
            jitter -= np.r_[np.dot(jitter[:3], p[:3]) * p[:3], 0.0]
        out.append(d + jitter)
    return out


_ALPHAS = 0.5 ** np.arange(6)


def shoot(chart, p, q, tol: float = SHOOT_TOL, step: float = SHOOT_STEP,
          max_iter: int = 30, guess=None) -> ShootResult:
    """Initial velocity at ``p`` whose geodesic reaches ``q`` at time 1.

    Damped Newton: each update is the best of a batch of step lengths
    ``1, 1/2, ..., 1/32`` and is rejected unless the miss decreases.  Speeds
    are capped at 1.5 times the length of the coordinate segment ``p -> q``,
    which bounds the length of a minimising geodesic.
    """
    chart = get_chart(chart)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = chart.dim
    vmax = 1.5 * float(core.segment_length(chart, p, q)[0]) + 1e-12
    starts = _starts(chart, p, q)
    if guess is not None:
        starts.insert(0, np.asarray(guess, dtype=float))
    if chart.embedded:
        Bp, Bq = _tangent_basis(p), _tangent_basis(q)
    else:
        Bp = Bq = np.eye(n)
    m = Bp.shape[1]
    best = None
    for si, V0 in enumerate(starts):
        V = np.array(V0, dtype=float)
        miss = np.inf
        it = 0
        for it in range(1, max_iter + 1):
            nsteps = _steps_for(chart, p, V[None], step)
            eps = 1e-7 * max(1.0, np.linalg.norm(V))
            batch = np.vstack([V, V + eps * Bp.T])
            ends = _endpoints(chart, p, batch, nsteps)
            if not np.all(np.isfinite(ends)):
                break
            r = ends[0] - q
            miss = float(np.linalg.norm(r))
            if miss < tol:
                return ShootResult(V, miss, True, it, si)
            J = Bq.T @ (ends[1:] - ends[0]).T / eps
            try:
                dV = Bp @ np.linalg.solve(J, -(Bq.T @ r))
            except np.linalg.LinAlgError:
                break
            trials = V + _ALPHAS[:, None] * dV
            speeds = core.norm(chart, np.broadcast_to(p, trials.shape), trials)
            trials = trials[speeds <= vmax]
            if len(trials) == 0:
                break
            tends = _endpoints(chart, p, trials, _steps_for(chart, p, trials, step))
            tm = np.linalg.norm(tends - q, axis=1)
            tm[~np.isfinite(tm)] = np.inf
            k = int(np.argmin(tm))
            if not tm[k] < miss:
                break
            V = trials[k]
        if best is None or miss < best.miss:
            best = ShootResult(V, miss, False, it, si)
    return best


def _tangent_basis(x):
    """Orthonormal basis (columns) of the tangent space of S^2 x R at ``x``."""
    X = x[:3] / np.linalg.norm(x[:3])
    a = np.array([1.0, 0.0, 0.0]) if abs(X[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(X, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(X, e1)
    B = np.zeros((4, 3))
    B[:3, 0], B[:3, 1], B[3, 2] = e1, e2, 1.0
    return B


def geodesic_segment(chart, p, V, n: int = 200, step: float = SHOOT_STEP):
    """Points of ``t -> exp_p(t V)`` on ``t in [0, 1]``."""
    chart = get_chart(chart)
    nsteps = max(n, _steps_for(chart, p, np.asarray(V, dtype=float)[None], step))
    ts, xs, vs, ok = integrate_batch(chart, np.asarray(p)[None], np.asarray(V)[None], 1.0, nsteps)
    return ts, xs[:, 0], vs[:, 0]


def local_distance(chart, p, q):
    """Distance estimate ``sqrt(d^T g(m) d)`` using the metric at the midpoint.

    Accurate to third order in ``|p - q|`` for nearby points.
    """
    chart = get_chart(chart)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = q - p
    m = 0.5 * (p + q)
    if chart.embedded:
        return np.linalg.norm(d, axis=-1)
    return np.sqrt(np.maximum(core.inner(chart, m, d, d), 0.0))


@dataclass
class Surface:
    """A bounded parametrised patch ``(a, b) -> point`` in a chart.

    ``offset(q)`` is the distance from ``q`` to the patch; when not supplied it
    is found by minimising the local metric distance over the parameters.
    """

    chart_id: str
    embed: Callable[[np.ndarray], np.ndarray]
    bounds: tuple
    offset_fn: Optional[Callable[[np.ndarray], float]] = None
    name: str = ""
    grid: int = 10
    meta: dict = field(default_factory=dict)

    def nodes(self) -> np.ndarray:
        (a0, a1), (b0, b1) = self.bounds
        A, B = np.meshgrid(np.linspace(a0, a1, self.grid), np.linspace(b0, b1, self.grid),
                           indexing="ij")
        return np.stack([A.ravel(), B.ravel()], axis=1)

    def points(self) -> np.ndarray:
        return np.array([self.embed(ab) for ab in self.nodes()])

    def offset(self, q) -> float:
        if self.offset_fn is not None:
            return float(self.offset_fn(np.asarray(q, dtype=float)))
        chart = get_chart(self.chart_id)
        q = np.asarray(q, dtype=float)
        nodes = self.nodes()
        pts = self.points()
        g = chart.metric(q)
        d0 = np.einsum("ni,ij,nj->n", pts - q, g, pts - q)
        start = nodes[int(np.argmin(d0))]

        def f(ab):
            d = np.asarray(self.embed(ab)) - q
            return float(d @ g @ d)

        res = minimize(f, start, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 2000})
        return float(np.sqrt(max(res.fun, 0.0)))


@dataclass
class ChordReport:
    pairs: list
    residuals: list
    converged: list
    max: float

    def to_dict(self):
        return {"pairs": [[list(map(float, a)), list(map(float, b))] for a, b in self.pairs],
                "residuals": [float(r) for r in self.residuals],
                "converged": [bool(c) for c in self.converged],
                "max": float(self.max)}


def chord_residual(surface: Surface, n_pairs: int = 12, seed: int = 0, n_check: int = 21,
                   pairs=None) -> ChordReport:
    """Max distance from ``surface`` of the geodesics joining sampled pairs of its points."""
    chart = get_chart(surface.chart_id)
    if pairs is None:
        nodes = surface.nodes()
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(nodes), size=(n_pairs, 2), replace=True)
        pairs = [(nodes[i], nodes[j]) for i, j in idx if i != j]
    out_pairs, residuals, conv = [], [], []
    for ab1, ab2 in pairs:
        p = np.asarray(surface.embed(np.asarray(ab1, float)), dtype=float)
        q = np.asarray(surface.embed(np.asarray(ab2, float)), dtype=float)
        res = shoot(chart, p, q)
        ts, xs, _ = geodesic_segment(chart, p, res.velocity)
        pick = np.linspace(0, len(ts) - 1, n_check).round().astype(int)
        r = max(surface.offset(xs[i]) for i in pick)
        out_pairs.append((ab1, ab2))
        residuals.append(r)
        conv.append(res.converged)
    mx = max([r for r, c in zip(residuals, conv) if c], default=float("nan"))
    return ChordReport(out_pairs, residuals, conv, mx)
