import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import STD_TRIANGLE, SQRT3, random_polygon, regular_polygon
from ehzcap.equality_cases import diamond, unit_square
from ehzcap.geom2d import (
    J,
    ClosedPolygonalCurve,
    ConvexPolygon,
    DegenerateInput,
    NotOnBoundary,
    OriginNotInterior,
    chord_length,
    convex_hull,
    fits_by_translation,
    gauge,
    intersect_pair,
    line_clip,
    normal_cone,
    polar,
    rotate_J,
    support_function,
)

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def same_vertices(P, Q, tol):
    A, B = P.vertices, Q.vertices
    if len(A) != len(B):
        return False
    d = np.hypot(*(A[:, None, :] - B[None, :, :]).transpose(2, 0, 1))
    return d.min(axis=1).max() <= tol


class TestConvexHull:
    def test_interior_point_removed(self):
        P = convex_hull([(0, 0), (1, 0), (0, 1), (0.2, 0.2)])
        assert same_vertices(P, ConvexPolygon([(0, 0), (1, 0), (0, 1)]), 0)

    def test_two_points_give_segment(self):
        P = convex_hull([(0, 0), (1, 1)])
        assert P.degenerate and P.area == 0.0

    def test_collinear_points_give_segment(self):
        P = convex_hull([(0, 0), (1, 0), (3, 0), (2, 0)])
        assert P.degenerate
        assert sorted(P.vertices[:, 0].tolist()) == [0.0, 3.0]

    def test_single_point_rejected(self):
        with pytest.raises(DegenerateInput):
            convex_hull([(1, 1), (1, 1)])

    def test_triangle_and_reflection_give_hexagon(self):
        JD = rotate_J(STD_TRIANGLE).vertices
        H = convex_hull(np.vstack([JD, -JD]))
        assert len(H) == 6
        assert same_vertices(H, -H, 1e-12)

    def test_counterclockwise(self, rng):
        for _ in range(20):
            assert random_polygon(rng).area > 0

    def test_nearly_vertical_triple_keeps_extreme_points(self):
        # the middle point sorts after both extremes because of a 3e-17 shift
        x = 1 / (2 * SQRT3)
        P = convex_hull([(-x, -0.5), (-x, 0.5), (-0.28867513459481287, 0.1), (2 * x, 0.6), (2 * x, -0.4)])
        assert np.isclose(P.area, 0.5 * (1.0 + 1.0) * 3 * x)
        assert len(P) == 4


class TestSupportFunction:
    def test_examples(self):
        assert support_function(unit_square(), [1, 1]) == 2
        assert support_function(diamond(0.5, 0.5), [1, 0]) == 1
        T = convex_hull([(-0.5, -1), (0.5, -1), (1.5, 0), (0.5, 1), (-0.5, 1), (-1.5, 0)])
        assert support_function(T, [-2, 0]) == 3

    @settings(max_examples=100, deadline=None)
    @given(seeds, st.floats(0.01, 100))
    def test_positive_homogeneity(self, seed, lam):
        r = np.random.default_rng(seed)
        P, u = random_polygon(r), r.normal(size=2)
        assert abs(support_function(P.scale(lam), u) - lam * support_function(P, u)) <= 1e-12 * max(1, lam)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_subadditive(self, seed):
        r = np.random.default_rng(seed)
        P, u, v = random_polygon(r), r.normal(size=2), r.normal(size=2)
        assert support_function(P, u + v) <= support_function(P, u) + support_function(P, v) + 1e-12


class TestGauge:
    def test_disk_like(self):
        assert abs(gauge(regular_polygon(64), [0.5, 0]) - 0.5) <= 1e-3

    def test_vertex_is_one(self, rng):
        P = random_polygon(rng)
        assert np.allclose(gauge(P, P.vertices), 1.0, atol=1e-12)

    def test_translated_diamond(self):
        P = diamond(0.5, 0.5).translate([-0.5, -0.5])
        assert abs(gauge(P, [0.5, 0]) - 1) <= 1e-12

    def test_origin_outside(self):
        with pytest.raises(OriginNotInterior):
            gauge(unit_square(), [1, 1])

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_boundary_scaling(self, seed):
        r = np.random.default_rng(seed)
        P, x = random_polygon(r), r.normal(size=2)
        t = gauge(P, x)
        assert P.boundary_distance(x / t) <= 1e-9

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_polar_gauge_is_support(self, seed):
        r = np.random.default_rng(seed)
        P, v = random_polygon(r), r.normal(size=2)
        h = support_function(P, v)
        assert abs(gauge(polar(P), v) - h) <= 1e-9 * abs(h)


class TestPolar:
    def test_square(self):
        Q = polar(unit_square(2).translate([-1, -1]))
        assert same_vertices(Q, ConvexPolygon([(1, 0), (0, 1), (-1, 0), (0, -1)]), 1e-12)

    def test_triangle_edge_to_vertex(self):
        P = convex_hull([(-1, -1), (2, -1), (-1, 2)])
        # supporting lines y=-1, x=-1, x+y=1 give polar vertices (0,-1), (-1,0), (1,1)
        assert same_vertices(polar(P), ConvexPolygon([(0, -1), (1, 1), (-1, 0)]), 1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_bipolar(self, seed):
        P = random_polygon(np.random.default_rng(seed))
        assert same_vertices(polar(polar(P)), P, 1e-9)


class TestRotateJ:
    def test_std_triangle(self):
        expected = ConvexPolygon([(-0.5 / SQRT3, 0.5), (-0.5 / SQRT3, -0.5), (1 / SQRT3, 0)])
        assert same_vertices(rotate_J(STD_TRIANGLE), expected, 1e-15)

    def test_matrix(self):
        assert np.array_equal(J @ np.array([1.0, 2.0]), [2.0, -1.0])

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_fourth_power_identity(self, seed):
        P = random_polygon(np.random.default_rng(seed))
        Q = rotate_J(rotate_J(rotate_J(rotate_J(P))))
        assert np.abs(Q.vertices - P.vertices).max() <= 1e-15


class TestNormalCone:
    def test_edge_point(self):
        c = normal_cone(unit_square(), [0.5, 0])
        assert c.is_ray and np.allclose(c.ray_lo, [0, -1])

    def test_corner(self):
        c = normal_cone(unit_square(), [0, 0])
        assert not c.is_ray
        assert {tuple(np.round(c.ray_lo, 12)), tuple(np.round(c.ray_hi, 12))} == {(0, -1), (-1, 0)}

    def test_diamond_vertex(self):
        D = diamond(0.5, 0.25)
        c = normal_cone(D, [1, 0.25])
        e1 = np.array([0.5, 0.25])
        e2 = np.array([-0.5, 0.75])
        n1 = np.array([e1[1], -e1[0]]) / np.hypot(*e1)
        n2 = np.array([e2[1], -e2[0]]) / np.hypot(*e2)
        assert np.allclose(c.ray_lo, n1) and np.allclose(c.ray_hi, n2)

    def test_off_boundary(self):
        with pytest.raises(NotOnBoundary):
            normal_cone(unit_square(), [0.5, 0.5])


class TestChordsAndClipping:
    def test_square_chords(self):
        assert abs(chord_length(unit_square(), [1, 0]) - 1) <= 1e-12
        assert abs(chord_length(unit_square(), [1, 1]) - np.sqrt(2)) <= 1e-12

    def test_triangle_chord(self):
        assert abs(chord_length(convex_hull([(0, 0), (1, 0), (0, 1)]), [1, 0]) - 1) <= 1e-12

    def test_line_clip(self):
        lo, hi = line_clip(unit_square(), [0.25, 0.5], [1, 0])
        assert np.isclose(lo, -0.25) and np.isclose(hi, 0.75)
        assert line_clip(unit_square(), [0.5, 2], [1, 0]) is None


class TestIntersection:
    def test_identical(self):
        P = unit_square()
        assert same_vertices(intersect_pair(P, P), P, 1e-12)

    def test_disjoint(self):
        assert intersect_pair(unit_square(), unit_square().translate([3, 0])) is None

    def test_half_overlap(self):
        R = intersect_pair(unit_square(), unit_square().translate([0.5, 0]))
        assert same_vertices(R, ConvexPolygon([(0.5, 0), (1, 0), (1, 1), (0.5, 1)]), 1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_commutative_and_idempotent(self, seed):
        r = np.random.default_rng(seed)
        P, Q = random_polygon(r), random_polygon(r).translate(r.uniform(-0.3, 0.3, 2))
        A, B = intersect_pair(P, Q), intersect_pair(Q, P)
        assert same_vertices(A, B, 1e-12)
        assert same_vertices(intersect_pair(A, A), A, 1e-12)


class TestFits:
    def test_tiny_triangle(self):
        q = ClosedPolygonalCurve([(0, 0), (0.01, 0), (0, 0.01)])
        assert fits_by_translation(q, unit_square())[0]

    def test_long_segment(self):
        assert not fits_by_translation(ClosedPolygonalCurve([(0, 0), (2, 0)]), unit_square())[0]

    def test_half_scaled_reflection_at_midpoints(self):
        D = STD_TRIANGLE
        mids = 0.5 * (D.vertices + np.roll(D.vertices, -1, axis=0))
        assert not fits_by_translation(ClosedPolygonalCurve(mids), D)[0]
        assert fits_by_translation(ClosedPolygonalCurve(0.999 * mids), D)[0]

    def test_witness_translation(self):
        q = ClosedPolygonalCurve([(5, 5), (5.2, 5), (5, 5.2)])
        ok, t = fits_by_translation(q, unit_square())
        assert ok
        assert unit_square().contains(q.vertices + t, tol=-1e-12).all()

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_translation_invariance(self, seed):
        r = np.random.default_rng(seed)
        K = random_polygon(r)
        q = ClosedPolygonalCurve(r.uniform(-0.8, 0.8, size=(3, 2)))
        shift = r.uniform(-10, 10, size=2)
        assert fits_by_translation(q, K)[0] == fits_by_translation(q.translate(shift), K)[0]


class TestJson:
    def test_round_trip(self, rng):
        P = random_polygon(rng)
        Q = ConvexPolygon.from_json(P.to_json())
        assert np.array_equal(P.vertices, Q.vertices)

    def test_missing_field(self):
        with pytest.raises(DegenerateInput):
            ConvexPolygon.from_json('{"points": []}')
