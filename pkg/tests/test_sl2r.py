import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geolab import core, hyperbolic as hyp, sl2r
from geolab.core import TangentVector
from geolab.errors import DegenerateInputError
from geolab.sl2r import SLPoint


def test_project_drops_angle():
    p = SLPoint.from_coords((0.0, 1.0, 7 * math.pi))
    assert project_coords(p) == (0.0, 1.0)
    assert project_coords(sl2r.winding_map(2.5, p)) == (0.0, 1.0)


def project_coords(p):
    return sl2r.project(p).coords


def test_fiber_projects_to_point():
    s = sl2r.sl_geodesic((0.3, 1.2, 0.0), (0.0, 0.0, 1.0), 5.0)
    assert np.ptp(s.points[:, :2], axis=0).max() < 1e-12
    assert sl2r.classify_sl_geodesic(s).kind == "vertical"


def test_winding_maps():
    p = SLPoint.from_coords((0.2, 0.5, 1.0))
    assert sl2r.winding_map(0.0, p) == p
    assert sl2r.winding_map(2 * math.pi, p) != p
    a, b = sl2r.WindingMap(0.4), sl2r.WindingMap(-1.1)
    assert a.compose(b)(p).angle == pytest.approx(a(b(p)).angle)


def test_winding_map_is_isometry():
    # the metric does not depend on theta
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = np.array([rng.normal(), rng.uniform(0.3, 3), rng.normal()])
        y = x + np.array([0, 0, rng.normal()])
        np.testing.assert_array_equal(core.metric_tensor("sl2r", x), core.metric_tensor("sl2r", y))


def test_projection_is_riemannian_submersion():
    # horizontal vectors (theta' = -u'/v) have the same length as their projection
    rng = np.random.default_rng(1)
    for _ in range(50):
        x = np.array([rng.normal(), rng.uniform(0.2, 4), rng.normal()])
        du, dv = rng.normal(size=2)
        V = np.array([du, dv, -du / x[1]])
        assert core.norm("sl2r", x, V) == pytest.approx(math.hypot(du, dv) / x[1], rel=1e-12)


def test_transport_lift_at_base_is_identity():
    x = SLPoint.from_coords((0.3, 2.0, 0.7))
    assert sl2r.parallel_transport_lift(x, x.base) == x


def test_transport_along_vertical_keeps_angle():
    assert sl2r.transport_angle((0.5, 1.0), (0.5, 3.0)) == 0.0
    assert sl2r.transport_angle_ode((0.5, 1.0), (0.5, 3.0)) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.tuples(st.floats(-2, 2), st.floats(0.3, 3)), st.tuples(st.floats(-2, 2), st.floats(0.3, 3)))
def test_closed_form_transport_matches_ode(p, q):
    if abs(complex(*p) - complex(*q)) < 1e-3:
        return
    assert sl2r.transport_angle(p, q) == pytest.approx(sl2r.transport_angle_ode(p, q, 1000), abs=1e-9)


def test_transport_lift_is_horizontal_geodesic():
    # t_x along a geodesic through project(x) traces the horizontal lift
    x = SLPoint.from_coords((0.0, 1.0, 0.3))
    V = np.array([0.6, -0.8])
    s = core.geodesic_integrate("sl2r", TangentVector(x.coords, [V[0], V[1], -V[0]]), 2.0)
    for t, pt in zip(s.params[::200], s.points[::200]):
        lifted = sl2r.parallel_transport_lift(x, (pt[0], pt[1]))
        assert lifted.angle == pytest.approx(pt[2], abs=1e-9)


def test_transport_around_triangle_is_not_identity():
    rep = sl2r.holonomy([(0.0, 1.0), (1.0, 1.0), (0.5, 2.0)])
    assert rep.transport_defect > 0.1


def right_isosceles_triangle():
    """Angles (pi/2, pi/5, pi/5): right angle at i, legs along the axes through i."""
    b = math.acosh(1 / math.tan(math.pi / 5))
    return [(0.0, 1.0), (0.0, math.exp(b)), (math.tanh(b), 1 / math.cosh(b))]


def test_holonomy_of_constructed_triangle():
    T = right_isosceles_triangle()
    rep = sl2r.holonomy(T)
    np.testing.assert_allclose(sorted(rep.angles), [math.pi / 5, math.pi / 5, math.pi / 2], atol=1e-9)
    assert rep.transport_defect == pytest.approx(math.pi / 10, abs=1e-6)
    assert sl2r.holonomy(T, method="ode").transport_defect == pytest.approx(math.pi / 10, abs=1e-6)


def test_counterclockwise_rotation_is_negative():
    rep = sl2r.holonomy([(0.0, 1.0), (1.0, 1.0), (0.5, 2.0)])
    assert rep.rotation < 0
    rev = sl2r.holonomy([(0.0, 1.0), (0.5, 2.0), (1.0, 1.0)])
    assert rev.rotation == pytest.approx(-rep.rotation)


def test_thin_triangle_has_small_holonomy():
    # the geodesic through (0, 1) and (2, 1) peaks at (1, sqrt 2)
    rep = sl2r.holonomy([(0.0, 1.0), (2.0, 1.0), (1.0, math.sqrt(2) + 1e-6)])
    assert rep.transport_defect < 1e-5
    assert rep.difference == pytest.approx(0.0, abs=1e-9)


def test_near_ideal_triangle_holonomy_tends_to_pi():
    rep = sl2r.holonomy([(-1.0, 1e-3), (1.0, 1e-3), (0.0, 1e3)])
    assert rep.transport_defect == pytest.approx(math.pi, abs=1e-2)


def test_degenerate_triangles_rejected():
    with pytest.raises(DegenerateInputError):
        sl2r.holonomy([(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)])
    with pytest.raises(DegenerateInputError):
        sl2r.holonomy([(0.0, 1.0), (0.0, 1.0), (1.0, 3.0)])


def test_horizontal_geodesic_classifies_horizontal():
    s = sl2r.sl_geodesic((0.0, 1.0, 0.0), (1.0, 0.0, -1.0), 3.0)
    c = sl2r.classify_sl_geodesic(s)
    assert c.kind == "horizontal"
    assert abs(c.vertical_speed) < 1e-9


@pytest.mark.parametrize("w,sub", [(0.5, "hypercycle"), (1.0, "horocycle"), (2.0, "circle")])
def test_slant_subkinds(w, sub):
    # unit base speed, fibre speed w: projected curvature is w
    v = np.array([1.0, 0.0, w - 1.0])
    s = sl2r.sl_geodesic((0.0, 1.0, 0.0), v, 3.0)
    c = sl2r.classify_sl_geodesic(s)
    assert (c.kind, c.subkind) == ("slant", sub)
    assert c.vertical_speed_std <= 1e-6 * abs(c.vertical_speed)


def test_vertical_speed_is_affine_in_curvature():
    rng = np.random.default_rng(5)
    cls = []
    for w in np.linspace(0.2, 3.0, 12):
        phi = rng.uniform(0, 2 * math.pi)
        v = np.array([math.cos(phi), math.sin(phi), w - math.cos(phi)])
        cls.append(sl2r.classify_sl_geodesic(sl2r.sl_geodesic((0.0, 1.0, 0.0), v, 2.0)))
    law = sl2r.slant_speed_law(cls)
    assert law.max_residual < 1e-6
    assert law.slope == pytest.approx(1.0, abs=1e-6)
    assert law.intercept == pytest.approx(0.0, abs=1e-6)


def test_fiber_speed_is_conserved():
    s = sl2r.sl_geodesic((0.3, 0.8, 0.0), (0.4, -0.2, 0.9), 4.0)
    w = sl2r.fiber_speed(s.points, s.velocities)
    assert np.ptp(w) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.tuples(st.floats(-2, 2), st.floats(0.3, 3)), st.booleans())
def test_mobius_lift_is_isometry(angle, center, reflect):
    m = hyp.MobiusMap.rotation(center, angle)
    if reflect:
        m = m.compose(hyp.MobiusMap.reflection())
    x = np.array([0.2, 0.9, 0.4])
    V = np.array([0.3, -0.5, 0.7])
    h = 1e-6
    fx = sl2r.mobius_lift(m, x).coords
    fV = (sl2r.mobius_lift(m, x + h * V).coords - sl2r.mobius_lift(m, x - h * V).coords) / (2 * h)
    assert core.norm("sl2r", fx, fV) == pytest.approx(core.norm("sl2r", x, V), rel=1e-7)


def test_point_dict():
    assert SLPoint.from_coords((1, 2, 3)).to_dict() == {"u": 1.0, "v": 2.0, "theta": 3.0}
    with pytest.raises(ValueError):
        SLPoint.from_coords((0, 1, math.inf))
