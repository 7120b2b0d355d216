import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geolab import core, product as pr
from geolab.core import GeodesicSpec
from geolab.errors import DegenerateInputError, UnsupportedGeometryError
from geolab.product import CylinderPoint


def test_cylinder_point_wraps():
    assert CylinderPoint(1.25, 3.0).circle == pytest.approx(0.25)
    assert CylinderPoint(-0.25, 0.0).circle == pytest.approx(0.75)
    assert CylinderPoint(Fraction(5, 4), 0).circle == Fraction(1, 4)


def test_h2xr_vertical_evaluator():
    g = pr.product_geodesic("h2xr", (0.3, 2.0), base_speed=0, vertical_speed=1)
    assert g.kind == "vertical"
    np.testing.assert_allclose(g([0.0, 1.5]), [[0.3, 2.0, 0.0], [0.3, 2.0, 1.5]])


def test_s2xr_slant_rise_per_wrap():
    eps = 0.05
    g = pr.product_geodesic("s2xr", (1, 0, 0), (0, 1, 0), 1, eps)
    a, b = g.unit_speeds
    T = 2 * math.pi / a
    np.testing.assert_allclose(g(T)[:3], [1, 0, 0], atol=1e-12)
    assert g(T)[3] == pytest.approx(2 * math.pi * eps)


def test_cylinder_slope_one_hits_after_one_wrap():
    g = pr.slant_with_slope("cylinder", (0,), None, 1)
    a, _ = g.unit_speeds
    np.testing.assert_allclose(g(1 / a), [0.0, 1.0], atol=1e-12)


def test_both_speeds_zero_rejected():
    with pytest.raises(DegenerateInputError):
        pr.product_geodesic("cylinder", (0,), base_speed=0, vertical_speed=0)


def test_unsupported_geometry():
    with pytest.raises(UnsupportedGeometryError):
        pr.product_geodesic("nil", (0, 0, 0))


@pytest.mark.parametrize("g,slope", [
    (pr.product_geodesic("cylinder", (0,), 1, 1, 0), 0),
    (pr.product_geodesic("cylinder", (0,), 1, 0, 1), math.inf),
    (pr.product_geodesic("cylinder", (0,), 1, 1, 2), 2),
    (pr.product_geodesic("cylinder", (0,), -1, 1, 2), -2),
])
def test_cylinder_slope(g, slope):
    assert pr.cylinder_slope(g) == slope


def test_slope_of_rational_speeds_is_exact():
    g = pr.product_geodesic("cylinder", (0,), 1, Fraction(3), Fraction(2))
    assert pr.cylinder_slope(g) == Fraction(2, 3)


@pytest.mark.parametrize("alpha,p,expected", [
    (0, (0.3, 0.7), (0.3, 0.7)), (2, (0.25, 1.5), (0.25, 1.5)), (1, (0, 0.5), (0.5, 0.5))])
def test_twisting_map(alpha, p, expected):
    q = pr.twisting_map(alpha, p)
    assert (q.circle, q.height) == pytest.approx(expected)


def test_affine_map():
    assert pr.affine_r_map(2, 1, CylinderPoint(0.1, 3)).height == 7
    np.testing.assert_array_equal(pr.affine_r_map(1, 0, (0.2, 1.0, 4.0)), [0.2, 1.0, 4.0])
    with pytest.raises(DegenerateInputError):
        pr.affine_r_map(0, 1, (0.0, 1.0))


def _unrolled_line_residual(pts):
    """Max distance of cylinder points from one line of the universal cover (they are consecutive)."""
    s = np.unwrap(pts[:, 0] * 2 * np.pi) / (2 * np.pi)
    P = np.stack([s, pts[:, 1]], axis=1)
    P = P - P.mean(axis=0)
    return np.linalg.svd(P, compute_uv=False)[-1]


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-1, 1), st.floats(0.05, 1.0), st.floats(-2, 2),
       st.sampled_from([1, -1]))
def test_twisting_maps_preserve_cylinder_geodesics(alpha, s0, a, b, d):
    g = pr.product_geodesic("cylinder", (s0,), d, a, b)
    t = np.linspace(0, 0.3, 25)
    mapped = np.array([pr.twisting_map(alpha, tuple(p)).as_array() for p in g(t)])
    assert _unrolled_line_residual(mapped) < 1e-9


@pytest.mark.parametrize("geometry", ["cylinder", "h2xr", "s2xr"])
def test_closed_form_matches_integrator(geometry):
    rng = np.random.default_rng(4)
    gs = []
    for _ in range(30):
        a, b = rng.normal(size=2)
        a = abs(a)
        if geometry == "cylinder":
            gs.append(pr.product_geodesic("cylinder", (rng.uniform(),), 1, a, b))
        elif geometry == "h2xr":
            gs.append(pr.product_geodesic("h2xr", (rng.normal(), rng.uniform(0.5, 2)),
                                          rng.normal(size=2), a, b, rng.normal()))
        else:
            gs.append(pr.product_geodesic("s2xr", rng.normal(size=3), rng.normal(size=3), a, b))
    x0 = np.array([g(0.0, unwrapped=True) if geometry == "cylinder" else g(0.0) for g in gs])
    v0 = np.array([g.initial_velocity() for g in gs])
    chart = "cylinder" if geometry == "cylinder" else geometry
    ts, xs, _, ok = core.integrate_batch(chart, x0, v0, 5.0, 5000)
    for j, g in enumerate(gs):
        ref = g(ts, unwrapped=True) if geometry == "cylinder" else g(ts)
        np.testing.assert_allclose(xs[:, j], ref, atol=1e-6)


def test_guaranteed_set_vertical_pair_is_integer_lattice():
    G = pr.guaranteed_set([(0, 0), (0, 1)], "cylinder")
    assert G.kind == "lattice"
    pts = G.lattice(50)
    assert [h for _, h in pts] == list(range(-50, 51))
    assert all(float(s) == 0.0 for s, _ in pts)
    assert G.contains((0.0, 7.0)) and not G.contains((0.0, 0.5))


def test_guaranteed_set_same_height_is_horizontal_circle():
    G = pr.guaranteed_set([(0, 0), (0.3, 0)], "cylinder")
    assert G.kind == "geodesic" and G.geodesic.kind == "horizontal"
    assert G.contains((0.77, 0.0)) and not G.contains((0.5, 0.1))


def test_guaranteed_set_general_pair_uses_steepest_geodesic():
    G = pr.guaranteed_set([(0, 0), (Fraction(1, 3), 1)], "cylinder")
    assert G.kind == "lattice"
    assert G.offset == (Fraction(1, 3), 1)
    assert G.contains((2 / 3, 2.0)) and G.contains((0.0, 3.0))


def test_guaranteed_set_contains_its_points():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = (tuple(rng.uniform(-2, 2, size=2)) for _ in range(2))
        G = pr.guaranteed_set([a, b], "cylinder")
        assert G.contains(a, 1e-9) and G.contains(b, 1e-9)


def test_guaranteed_set_of_sphere_point_is_antipodal_pair():
    G = pr.guaranteed_set([(0, 0, 1)], "s2")
    assert G.kind == "finite"
    np.testing.assert_allclose(sorted(G.points), [(0, 0, -1), (0, 0, 1)])


def test_guaranteed_set_three_points_on_vertical():
    G = pr.guaranteed_set([(0, 0), (0, 1), (0, 2)], "cylinder", wraps=10)
    assert G.kind == "finite" and G.truncated
    assert sorted(float(h) for _, h in G.points) == [float(k) for k in range(-10, 11)]


def test_guaranteed_set_unsupported_geometry():
    with pytest.raises(UnsupportedGeometryError):
        pr.guaranteed_set([(0, 1, 0)], "h2xr")
    with pytest.raises(UnsupportedGeometryError):
        pr.guaranteed_set([(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 1)], "s2xr")


@pytest.mark.parametrize("alpha", [0.3, Fraction(2, 7), -1.4])
def test_guaranteed_sets_are_twisting_equivariant(alpha):
    P = [CylinderPoint(0, 0), CylinderPoint(0, 1)]
    fG = [pr.twisting_map(alpha, p) for p in pr.guaranteed_set(P, "cylinder").lattice(20)]
    Gf = pr.guaranteed_set([pr.twisting_map(alpha, p) for p in P], "cylinder").lattice(20)
    for p, q in zip(fG, Gf):
        assert float(pr._wrap_signed(float(p.circle) - float(q[0]))) == pytest.approx(0, abs=1e-9)
        assert float(p.height) == pytest.approx(float(q[1]))


def test_two_horizontal_great_circles_meet_twice():
    g1 = pr.product_geodesic("s2xr", (1, 0, 0), (0, 1, 0), 1, 0)
    g2 = pr.product_geodesic("s2xr", (1, 0, 0), (0, 0, 1), 1, 0)
    assert pr.count_intersections(g1, g2) == 2


def test_slant_vs_vertical():
    s = pr.product_geodesic("s2xr", (1, 0, 0), (0, 1, 0), 1, 0.2)
    off = pr.product_geodesic("s2xr", (0, 0, 1), None, 0, 1)
    on = pr.product_geodesic("s2xr", (0, 1, 0), None, 0, 1)
    assert pr.count_intersections(s, off) == 0
    assert pr.count_intersections(s, on) == "infinite"


def test_rational_vs_irrational_slants_meet_once():
    g1 = pr.slant_with_slope("s2xr", (1, 0, 0), (0, 1, 0), 1)
    g2 = pr.slant_with_slope("s2xr", (1, 0, 0), (0, 0, 1), math.sqrt(2))
    assert pr.count_intersections(g1, g2) == 1


def test_slants_over_one_great_circle():
    g1 = pr.slant_with_slope("s2xr", (1, 0, 0), (0, 1, 0), 1)
    g2 = pr.slant_with_slope("s2xr", (1, 0, 0), (0, 1, 0), math.sqrt(2))
    assert pr.count_intersections(g1, g2) == "infinite"
    g3 = pr.slant_with_slope("s2xr", (0, 1, 0), (-1, 0, 0), 1, height=0.3)
    assert pr.count_intersections(g1, g3) == 0


def test_resonant_slants():
    g1 = pr.slant_with_slope("s2xr", (1, 0, 0), (0, 1, 0), Fraction(1))
    g2 = pr.slant_with_slope("s2xr", (1, 0, 0), (0, 0, 1), Fraction(2))
    assert pr.count_intersections(g1, g2) == "infinite"
    f2 = pr.slant_with_slope("s2xr", (1, 0, 0), (0, 0, 1), 2.0)
    assert pr.count_intersections(g1, f2) == "undetermined"
    assert pr.count_intersections(g1, g1) == "same"


def test_irrationals_are_not_mistaken_for_rationals():
    for x in (math.e, (1 + math.sqrt(5)) / 2, math.pi):
        assert pr._resonance(x)[0] == "irrational"
    assert pr._resonance(0.5)[0] == "undetermined"
    assert pr._resonance(Fraction(2, 3)) == ("rational", Fraction(2, 3))


def test_h2xr_slant_meets_horizontal_once():
    s = pr.product_geodesic("h2xr", (0, 1), (1, 0), 1, 1)
    h = pr.product_geodesic("h2xr", (0, 1), (0, 1), 1, 0)
    assert pr.count_intersections(s, h) == 1


def test_cylinder_horizontal_ball_has_one_component():
    g = pr.product_geodesic("cylinder", (0.2,), 1, 1, 0, 0.5)
    assert pr.epsilon_ball_components(g, (0.2, 0.5), 0.2) == 1


def test_h2xr_ball_has_at_most_one_component():
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = pr.product_geodesic("h2xr", (rng.normal(), 1.0), rng.normal(size=2), rng.uniform(), rng.normal())
        c = g(rng.uniform(-2, 2)) + rng.normal(scale=0.05, size=3)
        c[1] = abs(c[1])
        assert pr.epsilon_ball_components(g, c, 0.1) <= 1


@pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
def test_slant_return_witness(eps):
    g = pr.slant_return_witness(eps)
    assert g.slope() == pytest.approx(eps / 10)
    assert pr.epsilon_ball_components(g, g(0.0), eps) >= 2


def test_ball_components_on_integrated_geodesic():
    spec = GeodesicSpec("nil", (0, 0, 0), (0.6, 0.0, 0.8))
    assert pr.epsilon_ball_components(spec, (0.0, 0.0, 0.0), 0.1, span=5.0) == 1


def test_epsilon_must_be_positive():
    g = pr.product_geodesic("cylinder", (0,), 1, 1, 0)
    with pytest.raises(ValueError):
        pr.epsilon_ball_components(g, (0, 0), 0.0)


def test_geodesic_dict_roundtrip():
    g = pr.product_geodesic("cylinder", (Fraction(1, 3),), 1, Fraction(1), Fraction(2))
    back = pr.ProductGeodesic.from_dict(g.to_dict())
    assert back == g
    assert g.to_dict()["class"] == "slant"
