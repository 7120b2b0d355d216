import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geolab import core, shooting, sol
from geolab.errors import DegenerateInputError, OutOfChartError
from geolab.sol import SolElement, StabilizerIsometry

triples = st.tuples(*[st.floats(-2, 2)] * 3)


def test_group_law_example():
    g = sol.sol_mul(SolElement(0, 0, 1), SolElement(1, 1, 0))
    assert g.x == pytest.approx(math.exp(-1)) and g.y == pytest.approx(math.e) and g.z == 1


def test_identity_and_z_subgroup():
    g = SolElement(0.3, -1.2, 0.7)
    assert sol.sol_mul(g, SolElement(0, 0, 0)) == g
    assert sol.sol_mul(SolElement(0, 0, 1.5), SolElement(0, 0, -0.25)) == SolElement(0, 0, 1.25)


@given(triples, triples, triples)
def test_associativity(g, h, k):
    np.testing.assert_allclose(sol.sol_mul(sol.sol_mul(g, h), k),
                               sol.sol_mul(g, sol.sol_mul(h, k)), atol=1e-9)


@given(triples)
def test_inverse(g):
    np.testing.assert_allclose(sol.sol_mul(g, sol.sol_inv(g)), 0, atol=1e-9)
    np.testing.assert_allclose(sol.sol_mul(sol.sol_inv(g), g), 0, atol=1e-9)


@settings(max_examples=30)
@given(triples, triples)
def test_left_translations_are_isometries(g, p):
    # exact differential of left multiplication by (a, b, c)
    J = np.diag([math.exp(-g[2]), math.exp(g[2]), 1.0])
    gp = sol.sol_mul(g, p)
    np.testing.assert_allclose(J.T @ core.metric_tensor("sol", gp) @ J,
                               core.metric_tensor("sol", p), rtol=1e-12, atol=1e-12)


def test_metric_at_ln2():
    np.testing.assert_allclose(core.metric_tensor("sol", (0, 0, math.log(2))),
                               np.diag([4, 0.25, 1]), atol=1e-12)


def test_plane_chart_examples():
    x0 = sol.tg_plane_chart("x", 0.0)
    np.testing.assert_allclose(x0.embed((0.0, 1.0)), [0, 0, 0])
    np.testing.assert_allclose(x0.embed((2.0, math.e)), [0, 2, 1])
    y3 = sol.tg_plane_chart("y", 3.0)
    np.testing.assert_allclose(y3.embed((2.0, math.e)), [2, 3, -1])
    np.testing.assert_allclose(y3.inverse(y3.embed((0.5, 2.0))), [0.5, 2.0])
    with pytest.raises(OutOfChartError):
        x0.embed((0.0, -1.0))
    with pytest.raises(ValueError):
        sol.tg_plane_chart("z")


@pytest.mark.parametrize("which", ["x", "y"])
def test_plane_pullback_is_half_plane_metric(which):
    chart = sol.tg_plane_chart(which, 0.7)
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(20):
        uv = np.array([rng.uniform(-2, 2), rng.uniform(0.2, 5)])
        J = np.column_stack([(chart.embed(uv + h * e) - chart.embed(uv - h * e)) / (2 * h)
                             for e in np.eye(2)])
        G = J.T @ core.metric_tensor("sol", chart.embed(uv)) @ J
        np.testing.assert_allclose(G, np.eye(2) / uv[1] ** 2, rtol=1e-8)


def test_stabilizers_form_dihedral_group():
    S = sol.STABILIZERS
    assert len(set(S)) == 8
    codes = {s.code for s in S}
    for a in S:
        assert a.compose(a.inverse()) == StabilizerIsometry()
        for b in S:
            ab = a.compose(b)
            assert ab in S
            np.testing.assert_array_equal(ab.matrix(), a.matrix() @ b.matrix())
    assert "(+x,+y,z)" in codes and "(-y,+x,-z)" in codes
    # non-abelian, as D4 must be
    assert any(a.compose(b) != b.compose(a) for a in S for b in S)


def test_stabilizer_examples():
    np.testing.assert_array_equal(sol.stabilizer_apply(StabilizerIsometry(), (1, 2, 3)), [1, 2, 3])
    swap = StabilizerIsometry(swap=True)
    np.testing.assert_array_equal(swap((1, 2, 3)), [2, 1, -3])
    # x = 0 goes to y = 0
    pts = sol.tg_plane_chart("x").embed(np.array([[0.3, 2.0], [-1.0, 0.5]]))
    np.testing.assert_allclose(swap(pts)[:, 1], 0)
    with pytest.raises(ValueError):
        StabilizerIsometry(sx=2)


@pytest.mark.parametrize("s", sol.STABILIZERS, ids=lambda s: s.code)
def test_stabilizers_are_isometries(s):
    rng = np.random.default_rng(4)
    M = s.matrix()
    for _ in range(10):
        p = rng.normal(size=3)
        np.testing.assert_allclose(M.T @ core.metric_tensor("sol", s(p)) @ M,
                                   core.metric_tensor("sol", p), atol=1e-9)
    # vertical lines go to vertical lines
    line = np.array([[0.4, -0.3, z] for z in np.linspace(-1, 1, 5)])
    assert np.ptp(s(line)[:, :2], axis=0).max() == 0


def test_vertical_lines_are_geodesics():
    for vz, end in [(1.0, 1.0), (2.0, 2.0), (-1.0, -1.0)]:
        s = core.geodesic_integrate("sol", core.TangentVector((0, 0, 0), (0, 0, vz)), 1.0)
        np.testing.assert_allclose(s.points[-1], [0, 0, end], atol=1e-10)
        assert np.abs(s.points[:, :2]).max() < 1e-10


def test_geodesic_tangent_to_plane_stays_in_it():
    from geolab import hyperbolic as hyp
    s = core.geodesic_integrate("sol", core.TangentVector((0, 0.2, 0.1), (0, 0.6, 0.8)), 2.0)
    assert np.abs(s.points[:, 0]).max() < 1e-8
    uv = sol.tg_plane_chart("x").inverse(s.points)
    curve = hyp.classify_curve(core.CurveSample(s.params, uv, chart_id="h2"))
    assert curve.kind == "geodesic"


def test_single_geodesic_has_zero_residual():
    rep = sol.totally_geodesic_residual(sol.vertical_line_surface(), n_pairs=6, seed=0)
    assert all(rep.converged)
    assert rep.max < 1e-9


def test_x_plane_is_totally_geodesic():
    rep = sol.totally_geodesic_residual(sol.tg_plane_chart("x", 0.0).surface(), n_pairs=6, seed=1)
    assert all(rep.converged)
    assert rep.max < 1e-6
    d = rep.to_dict()
    assert set(d) == {"pairs", "residuals", "converged", "max"}


def test_z_plane_is_not_totally_geodesic():
    rep = sol.totally_geodesic_residual(sol.horizontal_plane(0.0), n_pairs=6, seed=1)
    assert rep.max > 1e-2


def test_coarse_grids_rejected():
    with pytest.raises(DegenerateInputError):
        sol.totally_geodesic_residual(sol.horizontal_plane(grid=5))


def test_shooting_hits_target():
    p, q = np.array([0.1, -0.2, 0.3]), np.array([0.8, 0.5, -0.4])
    res = shooting.shoot("sol", p, q)
    assert res.converged and res.miss < 1e-9
    _, xs, _ = shooting.geodesic_segment("sol", p, res.velocity)
    np.testing.assert_allclose(xs[-1], q, atol=1e-8)


def test_shooting_matches_half_plane_closed_form():
    # in H^2 the geodesic from i to 2i has initial velocity (0, ln 2)
    res = shooting.shoot("h2", (0.0, 1.0), (0.0, 2.0))
    np.testing.assert_allclose(res.velocity, [0, math.log(2)], atol=1e-7)


def test_generic_geodesics_do_not_return():
    rng = np.random.default_rng(30)
    returned = 0
    for _ in range(5):
        v = rng.normal(size=3)
        v[2] *= 0.5
        v /= np.linalg.norm(v)
        chk = sol.returns_to_basepoint(v, t_max=20.0)
        returned += chk.returned
        assert chk.later_min >= chk.first_min
    assert returned == 0
