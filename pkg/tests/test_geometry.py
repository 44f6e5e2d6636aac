import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from conftest import random_convex_polygon
from robin_annulus.geometry import (AnnulusSpec, Ball, Box, ConvexPolygon, DomainParseError, DomainWithHoles,
                                    GeometryError, InfeasibleError, annulus_domain, boundary_distance,
                                    distance_to_outer_boundary, format_domain, inner_parallel, level_slice,
                                    matched_annulus, matched_annulus_for, outer_parallel, parse_domain, quermass,
                                    read_domain, rectangle, regular_polygon, segments_for, unit_ball_volume,
                                    w2_lower_bound_check, write_domain)

SQUARE_HOLE = DomainWithHoles(ConvexPolygon(rectangle(2.0, 2.0)), (rectangle(0.5, 0.5),))


def test_unit_ball_volume_low_dimensions():
    assert unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-15)
    assert unit_ball_volume(4) == pytest.approx(math.pi**2 / 2, rel=1e-15)


def test_polygon_rejects_clockwise_and_degenerate():
    with pytest.raises(GeometryError):
        ConvexPolygon(rectangle(1, 1)[::-1])
    with pytest.raises(GeometryError):
        ConvexPolygon(np.array([[0, 0], [1, 0], [2, 0]]))
    with pytest.raises(GeometryError):
        ConvexPolygon(np.array([[0, 0], [1, 0], [1, 0], [0, 1]]))
    with pytest.raises(GeometryError):
        ConvexPolygon(np.array([[0, 0], [1, 0], [np.nan, 1]]))


def test_domain_rejects_bad_holes():
    outer = ConvexPolygon(rectangle(2, 2))
    with pytest.raises(GeometryError):
        DomainWithHoles(outer, (rectangle(3, 0.5),))  # sticks out
    with pytest.raises(GeometryError):
        DomainWithHoles(outer, (rectangle(0.5, 0.5), rectangle(0.5, 0.5, (0.3, 0))))  # overlap
    bowtie = np.array([[-0.2, -0.2], [0.2, 0.2], [0.2, -0.2], [-0.2, 0.2]])
    with pytest.raises(GeometryError):
        DomainWithHoles(outer, (bowtie,))


def test_area_against_monte_carlo():
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 1, size=(400_000, 2))
    frac = SQUARE_HOLE.contains(pts).mean()
    assert SQUARE_HOLE.area == pytest.approx(3.75)
    assert 4 * frac == pytest.approx(3.75, abs=0.02)


def test_chebyshev_center_of_rectangle():
    c, r = ConvexPolygon(rectangle(3.0, 0.8, (1.0, -2.0))).chebyshev_center()
    assert r == pytest.approx(0.4, rel=1e-9)
    assert c[1] == pytest.approx(-2.0, abs=1e-9)


@given(st.integers(0, 10_000))
def test_outer_parallel_against_hull_of_sampled_disc(seed):
    rng = np.random.default_rng(seed)
    body = random_convex_polygon(rng, 10)
    rho = float(rng.uniform(0.05, 1.0))
    m = 4096
    t = np.linspace(0, 2 * np.pi, m, endpoint=False)
    disc = rho * np.column_stack([np.cos(t), np.sin(t)])
    pts = (body.vertices[:, None, :] + disc[None, :, :]).reshape(-1, 2)
    hull = ConvexHull(pts)
    A, P = outer_parallel(body, rho)
    # the inscribed m-gon loses a relative O((pi/m)^2) of each arc
    assert hull.volume == pytest.approx(A, rel=1e-5)
    assert hull.area == pytest.approx(P, rel=1e-5)


def test_steiner_identities_on_random_polygons():
    rng = np.random.default_rng(7)
    for _ in range(100):
        body = random_convex_polygon(rng, int(rng.integers(3, 30)))
        q = quermass(body)
        for rho in rng.uniform(0, 3, 3):
            A, P = outer_parallel(body, rho)
            assert q.steiner_volume(rho) == pytest.approx(A, rel=1e-12)
            assert q.steiner_perimeter(rho) == pytest.approx(P, rel=1e-12)
        assert q.volume == pytest.approx(body.area, rel=1e-15)
        assert q.perimeter == pytest.approx(body.perimeter, rel=1e-15)
        assert q.af_chain_holds()


def test_box_steiner_polynomial_in_three_dimensions():
    a, b, c = 1.0, 2.0, 0.5
    q = quermass(Box((a, b, c)))
    for rho in (0.0, 0.3, 1.7):
        expected = a * b * c + 2 * (a * b + b * c + c * a) * rho + math.pi * (a + b + c) * rho**2 + 4 * math.pi / 3 * rho**3
        assert q.steiner_volume(rho) == pytest.approx(expected, rel=1e-13)
    assert q.perimeter == pytest.approx(2 * (a * b + b * c + c * a), rel=1e-14)
    assert q.af_chain_holds()
    assert not q.is_ball()
    assert w2_lower_bound_check(Box((a, b, c))) >= 0


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_balls_make_the_chain_tight(n):
    q = quermass(Ball(n, 1.3))
    assert q.is_ball()
    assert max(abs(m) for m in q.af_margins().values()) < 1e-12
    assert q.volume == pytest.approx(Ball(n, 1.3).volume, rel=1e-14)
    assert q.perimeter == pytest.approx(Ball(n, 1.3).perimeter, rel=1e-14)


def test_annulus_quermass_uses_outer_ball():
    q = quermass(AnnulusSpec(3, 0.5, 2.0))
    assert q.volume == pytest.approx(unit_ball_volume(3) * 8.0)


@given(st.integers(0, 10_000))
def test_inner_parallel_vertices_sit_at_distance_t(seed):
    rng = np.random.default_rng(seed)
    body = random_convex_polygon(rng, 9)
    t = float(rng.uniform(0.05, 0.9)) * body.inradius
    inner = inner_parallel(body, t)
    assert inner is not None
    d = boundary_distance(inner.vertices, body.vertices)
    np.testing.assert_allclose(d, t, rtol=1e-9)
    # perimeter loss rate is at least that of a disc
    dt = 1e-4 * body.inradius
    nxt = inner_parallel(body, t + dt)
    assert -(nxt.perimeter - inner.perimeter) / dt >= 2 * math.pi - 1e-8


def test_inner_parallel_area_against_monte_carlo():
    rng = np.random.default_rng(3)
    body = ConvexPolygon(regular_polygon(6, 1.2))
    t = 0.3
    pts = rng.uniform(-1.2, 1.2, size=(300_000, 2))
    inside = body.contains(pts) & (boundary_distance(pts, body.vertices) > t)
    assert inner_parallel(body, t).area == pytest.approx(2.4**2 * inside.mean(), rel=0.01)


def test_inner_parallel_empties_past_inradius():
    body = ConvexPolygon(rectangle(2.0, 1.0))
    assert inner_parallel(body, 0.6) is None
    assert inner_parallel(body, 0.0) is body
    with pytest.raises(GeometryError):
        inner_parallel(body, -0.1)


def test_level_slice_against_sampling():
    s = 0.4  # inner square side 1.2 crosses neither hole edge; hole fully inside
    live, area = level_slice(SQUARE_HOLE, s)
    assert live == pytest.approx(4 * 1.2)
    assert area == pytest.approx(1.2**2 - 0.25)
    s = 0.8  # inner square side 0.4 sits inside the hole
    assert level_slice(SQUARE_HOLE, s) == (0.0, 0.0)
    # partial overlap: offset hole, sampled oracle for both numbers
    dom = DomainWithHoles(ConvexPolygon(rectangle(2.0, 2.0)), (rectangle(0.6, 0.4, (0.55, 0.1)),))
    s = 0.5
    live, area = level_slice(dom, s)
    rng = np.random.default_rng(5)
    pts = rng.uniform(-0.5, 0.5, size=(400_000, 2))
    assert area == pytest.approx(dom.contains(pts).mean(), rel=5e-3)
    u = np.linspace(0, 4, 400_001)[:-1]
    side = np.floor(u).astype(int)
    f = u - side
    corners = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    boundary = corners[side] + f[:, None] * (corners[(side + 1) % 4] - corners[side])
    assert live == pytest.approx(4 * dom.contains(boundary).mean(), rel=1e-4)


def test_distance_to_outer_boundary_rejects_outside_points():
    assert distance_to_outer_boundary(SQUARE_HOLE, np.array([0.0, 0.9])) == pytest.approx(0.1)
    with pytest.raises(GeometryError):
        distance_to_outer_boundary(SQUARE_HOLE, np.array([2.0, 0.0]))


def test_matched_annulus_matches_measure_and_perimeter():
    A = matched_annulus_for(SQUARE_HOLE)
    assert A.r2 == pytest.approx(8.0 / (2 * math.pi))
    assert A.measure == pytest.approx(SQUARE_HOLE.area, rel=1e-14)
    with pytest.raises(InfeasibleError):
        matched_annulus(10.0, 2 * math.pi)  # disc of radius 1 cannot hold area 10
    B = matched_annulus(math.pi, 2 * math.pi)
    assert B.r1 == 0.0


@given(st.floats(0.0, 3.0), st.floats(0.1, 3.0), st.integers(2, 5))
def test_matched_annulus_inverts_annulus_data(r1, gap, n):
    A = AnnulusSpec(n, r1, r1 + gap)
    B = matched_annulus(A.measure, A.outer_perimeter, n)
    assert B.r2 == pytest.approx(A.r2, rel=1e-12)
    assert B.r1 == pytest.approx(A.r1, rel=1e-8, abs=1e-6)


def test_annulus_domain_converges_to_annulus():
    d = annulus_domain(1.0, 2.0, 720)
    assert d.area == pytest.approx(3 * math.pi, rel=1e-4)
    assert segments_for(2.0, 0.02) == 629
    with pytest.raises(GeometryError):
        AnnulusSpec(2, 2.0, 1.0)


def test_domain_file_round_trip(tmp_path):
    dom = DomainWithHoles(ConvexPolygon(regular_polygon(7, 1.1, phase=0.3)),
                          (rectangle(0.3, 0.2, (0.2, 0.1)), regular_polygon(5, 0.15, (-0.4, -0.2))[::-1]))
    path = tmp_path / "d.dom"
    write_domain(dom, path)
    back = read_domain(path)
    np.testing.assert_array_equal(back.outer.vertices, dom.outer.vertices)
    for a, b in zip(back.holes, dom.holes):
        np.testing.assert_array_equal(a, b)
    assert format_domain(back) == format_domain(dom)


def test_parse_accepts_comments_and_clockwise_outer():
    text = "# unit square\npolygon 4\n0 0\n0 1\n1 1\n1 0\n\nhole 3\n0.4 0.4\n0.6 0.4\n0.5 0.6\n"
    dom = parse_domain(text)
    assert dom.area == pytest.approx(1 - 0.02)


@pytest.mark.parametrize("text, line", [
    ("polygon 4\n0 0\n1 0\n1 1\n", 5),
    ("polygon 3\n0 0\n1 x\n0 1\n", 3),
    ("hole 3\n0 0\n1 0\n0 1\n", 1),
    ("square 4\n", 1),
    ("polygon 2\n0 0\n1 1\n", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(DomainParseError) as exc:
        parse_domain(text)
    assert exc.value.line == line


@given(st.integers(0, 10_000))
def test_distance_gradient_has_unit_norm_off_the_medial_axis(seed):
    rng = np.random.default_rng(seed)
    body = random_convex_polygon(rng, 8)
    pts = body.vertices.mean(axis=0) + 0.9 * (body.vertices[rng.integers(len(body.vertices), size=64)]
                                             - body.vertices.mean(axis=0)) * rng.uniform(0, 1, (64, 1))
    d = boundary_distance(pts, body.vertices)
    # distances to the two nearest edges; points near a bisector are skipped
    nxt = np.roll(body.vertices, -1, axis=0)
    per_edge = np.sort(np.stack([boundary_distance(pts, np.array([a, b, b])) for a, b in zip(body.vertices, nxt)]), axis=0)
    far = (per_edge[1] - per_edge[0] > 1e-4) & (d > 1e-4)
    e = 1e-7
    gx = (boundary_distance(pts + [e, 0], body.vertices) - boundary_distance(pts - [e, 0], body.vertices)) / (2 * e)
    gy = (boundary_distance(pts + [0, e], body.vertices) - boundary_distance(pts - [0, e], body.vertices)) / (2 * e)
    np.testing.assert_allclose(np.hypot(gx, gy)[far], 1.0, atol=1e-6)
    assert np.all(distance_to_outer_boundary(body, body.vertices) == 0)
