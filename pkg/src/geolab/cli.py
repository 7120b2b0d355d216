"""Command-line front end: ``geolab {trace,verify,holonomy,figure1}``.

Settings come from flags, then from the ``key=value`` file named by the
``GEOLAB_CONFIG`` environment variable, then from built-in defaults.

Exit codes: 0 success, 1 usage or domain error (including a trace that left
its chart, or a verification verdict other than the expected one),
2 inconclusive verification.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import core, hyperbolic as hyp, nil, preservation, sl2r
from .errors import GeolabError

SCHEMA = "geolab-report/1"
EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2

DEFAULTS = {
    "geometry": "nil", "seed": 0, "tol": preservation.PASS_TOL, "step": core.DEFAULT_STEP,
    "steps": None, "out": None, "format": "csv", "t": 10.0, "suite": "all", "n": 4,
    "p": None, "v": None,
}

DEFAULT_POINTS = {
    "e2": (0.0, 0.0), "h2": (0.0, 1.0), "h2disk": (0.0, 0.0), "cylinder": (0.0, 0.0),
    "h2xr": (0.0, 1.0, 0.0), "s2xr": (1.0, 0.0, 0.0, 0.0), "sl2r": (0.0, 1.0, 0.0),
    "nil": (0.0, 0.0, 0.0), "sol": (0.0, 0.0, 0.0),
}


@dataclass
class RunConfig:
    command: str
    geometry: str
    seed: int
    tol: float
    step: float
    steps: Optional[int]
    out: Optional[str]
    format: str
    t: float
    suite: str
    n: int
    p: Optional[str]
    v: Optional[str]

    def __post_init__(self):
        if not self.tol > 0:
            raise GeolabError("tol must be positive")
        if not self.step > 0:
            raise GeolabError("step must be positive")
        if self.format not in ("csv", "json"):
            raise GeolabError("format must be csv or json")


def read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GeolabError(f"bad config line: {line!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _coerce(key, value):
    if value is None:
        return None
    if key in ("seed", "n", "steps"):
        return int(value)
    if key in ("tol", "step", "t"):
        return float(value)
    return value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over the config file over defaults."""
    file_vals = {}
    path = os.environ.get("GEOLAB_CONFIG")
    if path:
        file_vals = read_config_file(path)
    merged = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in file_vals:
            merged[key] = _coerce(key, file_vals[key])
        else:
            merged[key] = default
    return RunConfig(command=args.command, **merged)


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(c) for c in text.split(",")])
    except ValueError:
        raise GeolabError(f"cannot parse vector {text!r}") from None


def write_atomic(path: Optional[str], text: str) -> None:
    """Write ``text`` to ``path`` in one step (stdout when ``path`` is None)."""
    if path is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".geolab-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# trace


def classify_trace(chart_id: str, sample: core.CurveSample) -> str:
    """Class tag of a traced geodesic."""
    P, V = sample.points, sample.velocities
    if chart_id == "nil":
        return nil.classify_nil_geodesic(sample).kind
    if chart_id == "sl2r":
        c = sl2r.classify_sl_geodesic(sample)
        return c.kind if c.kind != "slant" else f"slant:{c.subkind}"
    if chart_id in ("h2", "h2disk"):
        return hyp.classify_curve(sample).kind
    if chart_id == "e2":
        return "line"
    if chart_id == "sol":
        return "vertical" if np.allclose(V[0, :2], 0.0) else "generic"
    # product charts: the last coordinate is the height
    base = V[0, :-1]
    if chart_id == "h2xr":
        base = base / P[0, 1]
    if np.allclose(base, 0.0):
        return "vertical"
    if abs(V[0, -1]) < 1e-15:
        return "horizontal"
    return "slant"


def cmd_trace(cfg: RunConfig) -> int:
    chart = core.get_chart(cfg.geometry)
    p = _vector(cfg.p) if cfg.p else np.array(DEFAULT_POINTS[chart.id])
    if cfg.v is None:
        raise GeolabError("trace needs --v")
    v = _vector(cfg.v)
    sample = core.geodesic_integrate(chart, core.TangentVector(p, v), cfg.t, cfg.steps, cfg.step)
    try:
        tag = classify_trace(chart.id, sample) if len(sample) >= 20 else "unclassified"
    except (GeolabError, ValueError) as exc:
        tag = f"unclassified ({exc})"
    sample.meta = {"class": tag}
    text = sample.to_csv() if cfg.format == "csv" else sample.to_json() + "\n"
    write_atomic(cfg.out, text)
    print(f"class: {tag}", file=sys.stderr)
    if sample.partial:
        print(f"warning: geodesic left the {chart.id} chart at t={sample.params[-1]:.6g}; "
              "output is partial", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def run_verification(geometries, suite: str, n: int, seed: int, tol: float) -> dict:
    maps, surfaces = [], []
    if suite in ("all", "maps"):
        for m in preservation.registry():
            if m.geometry in geometries:
                r = preservation.check_preserving(m, n=n, tol=tol, seed=seed)
                maps.append(r.to_dict())
    if suite in ("all", "surfaces"):
        for g, items in preservation.surface_suite().items():
            if g not in geometries:
                continue
            for surf, expected in items:
                r = preservation.check_totally_geodesic(surf, seed=seed, expected=expected)
                surfaces.append(r.to_dict())
    entries = maps + surfaces
    unexpected = [e.get("map", e.get("surface")) for e in entries
                  if e["expected"] != "unknown" and e["verdict"] != e["expected"]]
    inconclusive = [e.get("map", e.get("surface")) for e in entries
                    if e["verdict"] == "inconclusive"]
    return {"schema": SCHEMA, "command": "verify", "geometries": list(geometries),
            "suite": suite, "seed": seed, "tol": tol, "n_geodesics": n,
            "maps": maps, "surfaces": surfaces,
            "unexpected": unexpected, "inconclusive": inconclusive,
            "ok": not unexpected}


def cmd_verify(cfg: RunConfig, all_geometries: bool) -> int:
    known = ("cylinder", "h2xr", "s2xr", "sl2r", "nil", "sol")
    if all_geometries:
        geos = known
    elif cfg.geometry in known:
        geos = (cfg.geometry,)
    else:
        raise GeolabError(f"verify supports {', '.join(known)}")
    if cfg.suite not in ("all", "maps", "surfaces"):
        raise GeolabError("suite must be all, maps or surfaces")
    report = run_verification(geos, cfg.suite, cfg.n, cfg.seed, cfg.tol)
    write_atomic(cfg.out, _dumps(report))
    for e in report["maps"] + report["surfaces"]:
        name = e.get("map", e.get("surface"))
        res = e.get("max_residual", e.get("max"))
        print(f"{name:45s} {e['verdict']:12s} expected={e['expected']:8s} max={res:.3g}",
              file=sys.stderr)
    if report["unexpected"]:
        return EXIT_ERROR
    if report["inconclusive"]:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ---------------------------------------------------------------------------
# holonomy


def cmd_holonomy(cfg: RunConfig) -> int:
    if not cfg.p:
        raise GeolabError("holonomy needs --p 'u1,v1;u2,v2;u3,v3'")
    pts = [tuple(_vector(s)) for s in cfg.p.split(";")]
    if len(pts) != 3 or any(len(q) != 2 for q in pts):
        raise GeolabError("holonomy needs three half-plane points")
    rep = sl2r.holonomy(pts)
    ode = sl2r.holonomy(pts, method="ode")
    out = {"schema": SCHEMA, "command": "holonomy", **rep.to_dict(),
           "transport_defect_ode": ode.transport_defect}
    write_atomic(cfg.out, _dumps(out))
    print(f"transport defect {rep.transport_defect:.12g}  angle defect {rep.defect:.12g}  "
          f"difference {rep.difference:.3g}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# figure 1


FIG_RADII = tuple(range(-5, 6))
FIG_CHORD = (math.exp(-1.5), math.exp(2.5))


def figure1_data(n: int = 201):
    """Nested half-plane geodesics ``|w| = e^r`` and one chord, in the disk model."""
    rows = []
    curves = [(f"r={r}", r, hyp.ConstantCurvatureCurve("geodesic", {"ends": (-math.exp(r),
                                                                             math.exp(r))}))
              for r in FIG_RADII]
    curves.append(("chord", None, hyp.ConstantCurvatureCurve("geodesic", {"ends": FIG_CHORD})))
    for name, r, c in curves:
        a, b = c.params["ends"]
        ctr, R = 0.5 * (a + b), 0.5 * (b - a)
        s = np.linspace(0.0, math.pi, n)[1:-1]
        w = ctr + R * np.exp(1j * s)
        z = hyp.halfplane_to_disk(w)
        for t, zz in zip(s, z):
            rows.append((name, "" if r is None else r, float(t), float(zz.real), float(zz.imag)))
    crossed = [r for r in FIG_RADII if FIG_CHORD[0] < math.exp(r) < FIG_CHORD[1]]
    gaps = [math.log(math.exp(r2) / math.exp(r1)) for r1, r2 in zip(FIG_RADII, FIG_RADII[1:])]
    summary = {"schema": SCHEMA, "command": "figure1", "n_arcs": len(FIG_RADII), "n_chords": 1,
               "chord_ends": list(FIG_CHORD), "chord_crosses": crossed,
               "n_intersections": len(crossed), "min_pairwise_distance": min(gaps)}
    return rows, summary


def cmd_figure1(cfg: RunConfig) -> int:
    rows, summary = figure1_data()
    buf = io.StringIO()
    buf.write("# geolab-figure1/1 model=disk\n")
    buf.write("curve,r,s,x,y\n")
    for name, r, t, x, y in rows:
        buf.write(f"{name},{r},{t!r},{x!r},{y!r}\n")
    write_atomic(cfg.out, buf.getvalue())
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geolab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--geometry")
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--out")
        p.add_argument("--format", choices=("csv", "json"))

    t = sub.add_parser("trace", help="integrate a geodesic and write its samples")
    common(t)
    t.add_argument("--p", help="initial point, comma separated")
    t.add_argument("--v", help="initial velocity, comma separated")
    t.add_argument("--t", type=float, help="parameter length")
    t.add_argument("--steps", type=int)
    t.add_argument("--step", type=float)

    v = sub.add_parser("verify", help="run the preservation and totally-geodesic suites")
    common(v)
    v.add_argument("--suite", choices=("all", "maps", "surfaces"))
    v.add_argument("--all", action="store_true", dest="all_geometries")
    v.add_argument("--n", type=int, help="random geodesics per map")

    h = sub.add_parser("holonomy", help="transport defect of a half-plane triangle")
    common(h)
    h.add_argument("--p", help="'u1,v1;u2,v2;u3,v3'")

    f = sub.add_parser("figure1", help="nested geodesics and a crossing chord")
    common(f)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        if cfg.command == "trace":
            return cmd_trace(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg, args.all_geometries)
        if cfg.command == "holonomy":
            return cmd_holonomy(cfg)
        return cmd_figure1(cfg)
    except (GeolabError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
