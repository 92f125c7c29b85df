import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from santalo_lab import bodies, specfun
from santalo_lab.errors import DomainError

RNG = np.random.default_rng(12345)


def _unit(n, count, rng=RNG):
    g = rng.standard_normal((count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _standard_bodies():
    yield bodies.make_lp_ball(1, 3)
    yield bodies.make_lp_ball(2, 4, 1.5)
    yield bodies.make_lp_ball(math.inf, 3, 0.5)
    yield bodies.make_lp_ball(3, 5)
    yield bodies.make_half_ball(3)
    yield bodies.make_ellipsoid([0.2, -0.1, 0.0], [1.0, 2.0, 0.5])
    yield bodies.shifted_ball_polar_ellipsoid(0.4, 3)


def test_lp_ball_examples():
    assert bodies.make_lp_ball(2, 3).gauge([1, 0, 0]) == pytest.approx(1.0)
    assert bodies.make_lp_ball(1, 2, 2).gauge([1, 1]) == pytest.approx(1.0)
    assert bodies.make_lp_ball("inf", 4, 0.5).support([1, 0, 0, 0]) == pytest.approx(0.5)


def test_lp_ball_rejects_small_exponent():
    with pytest.raises(DomainError):
        bodies.make_lp_ball(0.9, 3)


@pytest.mark.parametrize("body", list(_standard_bodies()), ids=lambda b: b.name)
def test_gauge_homogeneity_and_radii(body):
    d = RNG.standard_normal((500, body.dim))
    t = RNG.uniform(0.1, 10, 500)
    c = body.anchor_array
    g = body.gauge(c + d)
    assert np.allclose(body.gauge(c + t[:, None] * d), t * g, rtol=1e-9)
    r = np.linalg.norm(d, axis=1)
    assert np.all(g * body.in_radius <= r * (1 + 1e-12))
    assert np.all(r <= g * body.out_radius * (1 + 1e-12))


@pytest.mark.parametrize("body", list(_standard_bodies()), ids=lambda b: b.name)
def test_support_dominates_boundary_points(body):
    c = body.anchor_array
    d = RNG.standard_normal((400, body.dim))
    boundary = c + d / body.gauge(c + d)[:, None]
    u = RNG.standard_normal((300, body.dim))
    h = body.support(u)
    assert np.all(h[:, None] >= u @ boundary.T - 1e-10)


@pytest.mark.parametrize(
    "body",
    [bodies.make_lp_ball(1, 3), bodies.make_lp_ball(2, 3), bodies.make_lp_ball(math.inf, 3),
     bodies.make_ellipsoid([0.0, 0.0, 0.0], [1.0, 2.0, 0.5])],
    ids=lambda b: b.name,
)
def test_gauge_is_max_over_support(body):
    # gauge(x) = max_u <u, x> / h(u); the maximizer for these bodies is a normal at x/gauge(x)
    u = np.vstack([_unit(3, 400_000), np.eye(3), -np.eye(3), np.array(np.meshgrid(*[[-1, 1]] * 3)).T.reshape(-1, 3)])
    h = body.support(u)
    x = RNG.standard_normal((20, 3))
    est = np.max((x @ u.T) / h[None, :], axis=1)
    assert np.allclose(est, body.gauge(x), rtol=1e-3)


def test_half_ball_support_examples():
    hb = bodies.make_half_ball(3)
    assert hb.support([1, 0, 0]) == pytest.approx(1.0)
    assert hb.support([-1, 0, 0]) == pytest.approx(0.0)
    assert hb.support([-math.sqrt(0.5), math.sqrt(0.5), 0]) == pytest.approx(math.sqrt(0.5))


def test_half_ball_membership():
    hb = bodies.make_half_ball(3)
    pts = RNG.uniform(-1.2, 1.2, (20_000, 3))
    truth = (np.linalg.norm(pts, axis=1) <= 1) & (pts[:, 0] >= 0)
    assert np.array_equal(hb.contains(pts), truth)
    assert hb.anchor == (0.25, 0.0, 0.0)
    assert hb.axis == 0


def test_polar_ellipsoid_examples():
    assert bodies.shifted_ball_polar_ellipsoid(0.0, 3).gauge([0, 1, 0]) == pytest.approx(1.0)
    ell = bodies.shifted_ball_polar_ellipsoid(0.5, 2)
    assert ell.anchor == (0.0, 0.0)
    # the ends of the major axis are -1/(1-lam) and 1/(1+lam); the center is their midpoint
    lo, hi = -1 / ell.gauge([-1, 0]), 1 / ell.gauge([1, 0])
    assert 0.5 * (lo + hi) == pytest.approx(-2 / 3)
    assert math.exp(bodies.ellipsoid_log_volume(0.5, 2)) == pytest.approx(0.75 ** -1.5 * math.pi)
    assert math.exp(bodies.ellipsoid_log_volume(0.5, 2)) / math.pi == pytest.approx(1.5396, abs=1e-4)


def test_polar_ellipsoid_equation():
    lam, n = 0.35, 3
    ell = bodies.shifted_ball_polar_ellipsoid(lam, n)
    y = RNG.uniform(-2, 2, (20_000, n))
    w = 1 - lam * lam
    q = w * w * (y[:, 0] + lam / w) ** 2 + w * np.sum(y[:, 1:] ** 2, axis=1)
    assert np.array_equal(ell.contains(y), q <= 1)
    # it is the polar of the shifted unit ball: <y, c> + |y| <= 1 with c = lam e_1
    assert np.array_equal(ell.contains(y), lam * y[:, 0] + np.linalg.norm(y, axis=1) <= 1)


def test_polar_ellipsoid_domain():
    with pytest.raises(DomainError):
        bodies.shifted_ball_polar_ellipsoid(1.0, 2)
    with pytest.raises(DomainError):
        bodies.shifted_ball_polar_ellipsoid(-0.1, 2)


def test_scale_intersect_translate():
    b2 = bodies.make_lp_ball(2, 2)
    assert bodies.scale(b2, 2).gauge([2, 0]) == pytest.approx(1.0)
    both = bodies.intersect(b2, bodies.scale(b2, 2))
    x = RNG.standard_normal((200, 2))
    assert np.allclose(both.gauge(x), b2.gauge(x))
    with pytest.raises(DomainError):
        bodies.intersect(b2, bodies.make_lp_ball(2, 3))


def test_translate_boundary_behaviour():
    lam = 0.3
    hb = bodies.translate(bodies.make_half_ball(2), [lam, 0.0])
    # the flat face of the half-ball sits at distance lam behind the new origin
    for t in (0.9, 0.99, 0.999):
        assert hb.gauge([-lam * t, 0.0]) < 1
    assert hb.gauge([-lam, 0.0]) == pytest.approx(1.0)
    # so the polar about the new origin blows up in the direction -e_1
    assert hb.support([-1.0, 0.0]) == pytest.approx(lam)
    assert bodies.translate(bodies.make_half_ball(2), [1e-9, 0]).support([-1.0, 0.0]) == pytest.approx(1e-9)
    with pytest.raises(DomainError):
        bodies.translate(hb, [0.0, 0.0, 0.0])


def test_reanchor_preserves_the_set():
    ell = bodies.make_ellipsoid([0.2, -0.1], [1.0, 2.0])
    moved = bodies.reanchor(ell, [0.5, 0.3])
    pts = RNG.uniform(-2.5, 2.5, (5_000, 2))
    g = ell.gauge(pts)
    keep = np.abs(g - 1) > 1e-6
    assert np.array_equal(moved.contains(pts[keep]), ell.contains(pts[keep]))


def test_polar_section_examples():
    p = bodies.HullBodyParams(2)
    sec = bodies.polar_section(p, 0.0)
    assert sec.r2 == pytest.approx(math.sqrt(math.pi))
    assert sec.r1 == pytest.approx(2.0)
    assert bodies.polar_section(p, p.s_min).r2 == 0.0
    assert bodies.polar_section(p, p.s_max).r1 == 0.0
    assert bodies.polar_section(p, p.s_max).degenerate
    with pytest.raises(DomainError):
        bodies.polar_section(p, p.s_max + 1e-3)


def test_section_gauge_is_max_of_gauges():
    sec = bodies.SectionBody(4, 1.3, 2.1)
    x = RNG.standard_normal((100, 4))
    expected = np.maximum(np.linalg.norm(x, axis=1) / 1.3, np.abs(x).sum(axis=1) / 2.1)
    assert np.allclose(sec.gauge(x), expected)
    assert sec.gauge(np.zeros(4)) == 0.0


def test_hull_params_validation():
    with pytest.raises(DomainError):
        bodies.HullBodyParams(3, a=0.0)
    with pytest.raises(DomainError):
        bodies.HullBodyParams(0)
    p = bodies.HullBodyParams(5, 1.0, 0.5).shifted(0.1)
    assert (p.a, p.b) == (1.1, 0.4)


def test_hull_vertices_on_boundary():
    params = bodies.HullBodyParams(3)
    hull = bodies.make_hull(params)
    rho = 1 / specfun.lp_ball_root(2, 3)
    tops = np.array([[0.5, 0.5, 0.5, params.b], [-0.5, 0.5, -0.5, params.b]])
    bottom = np.array([[rho, 0, 0, -params.a], [0, 0, rho, -params.a]])
    assert np.allclose(hull.gauge(np.vstack([tops, bottom])), 1.0, atol=1e-9)
    assert hull.gauge(np.zeros(4)) == 0.0
    assert hull.support(np.array([0, 0, 0, 1.0])) == pytest.approx(params.b)
    assert hull.support(np.array([0, 0, 0, -1.0])) == pytest.approx(params.a)


def test_hull_sections_are_polar_sections():
    # <(z, v), (y, s)> <= 1 on the hull  iff  y lies in the polar section at height s
    params = bodies.HullBodyParams(3)
    hull = bodies.make_hull(params)
    for s in (-0.7, -0.2, 0.0, 0.8):
        sec = bodies.polar_section(params, s)
        y = RNG.uniform(-2.5, 2.5, (4000, 3))
        u = np.column_stack([y, np.full(len(y), s)])
        inside = hull.support(u) <= 1
        assert np.array_equal(inside, sec.gauge(y) <= 1)


def _mirror(lam, n):
    w = 1 - lam * lam
    axes = np.full(n, 1 / math.sqrt(w))
    axes[0] = 1 / w
    center = np.zeros(n)
    center[0] = lam / w
    return bodies.make_ellipsoid(center, axes)


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("lam", [0.2, 0.5, 0.8])
def test_half_ball_polar_is_hull_of_ellipsoid_and_apex(n, lam):
    rng = np.random.default_rng(n * 10 + int(lam * 10))
    hb = bodies.make_half_ball(n)
    x = np.zeros(n)
    x[0] = lam
    ell = _mirror(lam, n)
    apex = np.zeros(n)
    apex[0] = -1 / lam
    reach = 1 / lam + 1 / (1 - lam)
    y = rng.uniform(-reach, reach, (40_000, n))
    in_polar = hb.support(y) - y @ x <= 1
    # the polar contains the ellipsoid
    assert np.all(in_polar[ell.gauge(y) <= 1])
    # and is covered by segments from the apex to the ellipsoid
    ts = np.linspace(0, 0.999, 2000)
    g = np.full(len(y), np.inf)
    for chunk in np.array_split(ts, 40):
        pts = (y[:, None, :] - chunk[None, :, None] * apex) / (1 - chunk)[None, :, None]
        g = np.minimum(g, ell.gauge(pts).min(axis=1))
    in_hull = g <= 1
    unclear = np.abs(g - 1) < 2e-3
    assert np.array_equal(in_polar[~unclear], in_hull[~unclear])


@given(st.floats(min_value=0.01, max_value=0.99), st.integers(min_value=1, max_value=8))
@settings(max_examples=50, deadline=None)
def test_polar_ellipsoid_radii(lam, n):
    ell = bodies.shifted_ball_polar_ellipsoid(lam, n)
    e = np.zeros(n)
    e[0] = 1
    assert 1 / ell.gauge(e) == pytest.approx(1 / (1 + lam), rel=1e-9)
    assert 1 / ell.gauge(-e) == pytest.approx(1 / (1 - lam), rel=1e-9)
