import numpy as np
import pytest

from revtorus.errors import DegenerateWindow, NonConvex, PoorFit, ValidationError
from revtorus.stablenorm import (asymptotic_volume, ball_from_polygon, conjugate_pair,
                                 extend_endpoint, gauge_many, rotation_curve, shoelace,
                                 stable_norm, stable_unit_ball, support, verify_asymptotics,
                                 write_asymptotics_csv)

TWO_PI = 2 * np.pi
# Shoelace area of the canonical ball, frozen from the first computation.
CANON_AREA = 0.0621051


@pytest.fixture(scope="module")
def curve(canon):
    c = rotation_curve(canon)
    return c.with_endpoint(extend_endpoint(c).value)


@pytest.fixture(scope="module")
def ball(curve):
    return stable_unit_ball(curve)


def _circle(n=2048, a=1.0, b=1.0):
    t = np.linspace(0, TWO_PI, n, endpoint=False)
    return ball_from_polygon(np.column_stack([a * np.cos(t), b * np.sin(t)]))


def test_curve_start_and_monotone(canon, curve):
    assert curve.X[0] == 0.0
    assert curve.Y[0] == pytest.approx(1 / TWO_PI, rel=1e-12)
    order = np.argsort(curve.rho)
    assert np.all(np.diff(curve.X[order]) > 0)
    assert np.all(curve.Y > 0)


def test_y_decreases_toward_separatrix(canon):
    c = rotation_curve(canon, n_uniform=4, kappa=1, delta_min=1e-3)
    from revtorus.actions import tau_phi
    r0 = c.rho0
    y = [1 / tau_phi(canon, 0.5, f * r0)[0] for f in (0.9, 0.999)]
    assert y[1] < y[0]


def test_endpoint_two_routes(curve):
    rep = extend_endpoint(curve)
    assert rep.orbit_frequency == pytest.approx(1 / TWO_PI, rel=1e-12)
    assert rep.rel_gap < 0.01
    # The printed constant 1/(4 pi^2 rho0) is reported, not asserted.
    assert rep.printed_ratio == pytest.approx(rep.printed_value / rep.value)


def test_endpoint_needs_last_decade(canon):
    c = rotation_curve(canon, n_uniform=4, kappa=1, delta_min=1e-2)
    with pytest.raises(DegenerateWindow):
        extend_endpoint(c)


def test_ball_needs_endpoint(canon):
    with pytest.raises(ValidationError):
        stable_unit_ball(rotation_curve(canon, n_uniform=4, kappa=1, delta_min=1e-2))


def test_ball_symmetric_convex(ball):
    v = ball.vertices
    assert shoelace(v) > 0
    # Central symmetry: the vertex set maps onto itself.
    refl = -v
    d = np.min(np.linalg.norm(refl[:, None, :] - v[None, :, :], axis=2), axis=1)
    assert d.max() < 1e-12
    mirror = v * [1, -1]
    d = np.min(np.linalg.norm(mirror[:, None, :] - v[None, :, :], axis=2), axis=1)
    assert d.max() < 1e-12
    assert ball.area == pytest.approx(CANON_AREA, rel=1e-5)


def test_ellipse_area():
    a, b = 1.7, 0.6
    ball = _circle(4096, a, b)
    assert abs(ball.area - np.pi * a * b) / (np.pi * a * b) < 1e-4


def test_nonconvex_detected():
    star = [[1, 0], [0.2, 0.2], [0, 1], [-1, 0], [-0.2, -0.2], [0, -1]]
    with pytest.raises(NonConvex):
        ball_from_polygon(star)
    # Clockwise input is reoriented.
    sq = ball_from_polygon([[1, 1], [1, -1], [-1, -1], [-1, 1]])
    assert sq.area == pytest.approx(4.0)


def test_volume_two_routes(canon, ball):
    rep = asymptotic_volume(canon, ball.area)
    assert rep.quadrature > 0
    assert rep.rel_gap < 1e-3
    assert abs(rep.tail) <= 0.01 * rep.quadrature


def test_volume_scaling(canon):
    v1 = asymptotic_volume(canon).quadrature
    v2 = asymptotic_volume(canon.scaled(2.0)).quadrature
    assert v2 == pytest.approx(v1 / 4, rel=1e-6)


def test_asymptotics(canon, curve):
    rep = verify_asymptotics(canon)
    assert min(f.r2 for f in rep.laws) > 0.999
    assert rep.pole_spread < 0.02
    x0 = extend_endpoint(curve).value
    assert abs(rep.ratio_phi_tau - x0) / x0 < 0.01
    # Fitted log slope against the closed form r1 sqrt(x1 / gamma).
    assert rep.law("tau_log").fitted == pytest.approx(rep.derived["A"], rel=1e-2)
    with pytest.raises(PoorFit):
        verify_asymptotics(canon, n=8, window=(0.9, 0.1), r2_min=0.999999)


def test_asymptotics_csv(tmp_path, canon):
    rep = verify_asymptotics(canon, n=12)
    path = tmp_path / "asym.csv"
    write_asymptotics_csv(rep, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "law,fittedConstant,paperConstant,ratio,r2"
    assert [l.split(",")[0] for l in lines[1:]] == ["tau_log", "phi_log", "dtau_pole"]


def test_norm_examples(ball):
    assert stable_norm(ball, (0, 1)) == pytest.approx(TWO_PI, rel=1e-12)
    rng = np.random.default_rng(3)
    for v in rng.normal(size=(10, 2)):
        assert stable_norm(ball, 3 * v) == pytest.approx(3 * stable_norm(ball, v), rel=1e-12)
    with pytest.raises(ValidationError):
        stable_norm(ball, (0, 0))


def test_gauge_of_vertices_is_one(ball):
    idx = np.arange(0, len(ball.vertices), 7)
    np.testing.assert_allclose(gauge_many(ball, ball.vertices[idx]), 1.0, rtol=1e-10)


def test_support_is_dual(ball):
    # <c, w> <= h(c) N(w) for every pair.
    rng = np.random.default_rng(4)
    C, W = rng.normal(size=(20, 2)), rng.normal(size=(20, 2))
    h = support(ball, C)
    N = gauge_many(ball, W)
    assert np.all(C @ W.T <= np.outer(h, N) * (1 + 1e-12))


def test_conjugacy_flat_circle():
    rep = conjugate_pair(_circle(512))
    assert rep.max_rel_alpha_error < 1e-3
    assert rep.max_rel_biconjugate_error < 0.01
    assert rep.rays_monotone


def test_conjugacy_canonical(ball):
    rep = conjugate_pair(ball)
    assert rep.max_rel_biconjugate_error < 0.01
    assert rep.rays_monotone
