import numpy as np
import pytest

from conftest import STD_TRIANGLE, SQRT3, random_polygon
from ehzcap.capacity import ehz_capacity
from ehzcap.equality_cases import QuadParams, diamond, equality_partner, quadrilateral_from_params, unit_square
from ehzcap.dynamics import catalog_pair
from ehzcap.geom2d import J, rotate_J
from ehzcap.symplecto import (
    AffineMap2,
    SingularMatrix,
    TNotOnEdge,
    apply_chain,
    invert_chain,
    minus_j_std_vertices,
    product_transform,
    quadrilateral_normal_form,
    triangle_normal_form,
    triangle_normal_form_residual,
    verify_det_identity,
    vertex_residual,
)


def edge_samples(n=30, seed=7):
    v = minus_j_std_vertices()
    r = np.random.default_rng(seed)
    for e in range(3):
        for s in r.uniform(0, 1, n):
            yield e, v[e] + s * (v[(e + 1) % 3] - v[e])


class TestAffineMap:
    def test_compose_and_invert(self, rng):
        f = AffineMap2(rng.normal(size=(2, 2)), rng.normal(size=2))
        x = rng.normal(size=(5, 2))
        assert np.allclose(f.then(f.inverse())(x), x)

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            AffineMap2(np.zeros((2, 2))).inverse()


class TestProductTransform:
    def test_identity(self, rng):
        K, T = random_polygon(rng), random_polygon(rng)
        K2, T2 = product_transform(AffineMap2(np.eye(2)), K, T)
        assert vertex_residual(K, K2) <= 1e-15 and vertex_residual(T, T2) <= 1e-15

    def test_volume_product(self, rng):
        K, T = random_polygon(rng), random_polygon(rng)
        K2, T2 = product_transform(AffineMap2(np.diag([2.0, 1.0])), K, T)
        assert abs(K2.area * T2.area - K.area * T.area) <= 1e-12

    def test_rotation_by_J(self, rng):
        K, T = random_polygon(rng, 6), random_polygon(rng, 6)
        K2, T2 = product_transform(AffineMap2(J), K, T)
        a, b = ehz_capacity(K, T, dual=False).value, ehz_capacity(K2, T2, dual=False).value
        assert abs(a - b) <= 1e-3 * a

    def test_unimodular_invariance(self, rng):
        products = [catalog_pair(c, 0.3, 0.6) for c in
                    ("square-diamond", "triangle-hexagon", "triangle-parallelogram", "quad-partner")]
        products.append((STD_TRIANGLE, rotate_J(STD_TRIANGLE)))
        base = [ehz_capacity(K, T, dual=False).value for K, T in products]
        for _ in range(10):
            m = rng.normal(size=(2, 2))
            if np.linalg.det(m) < 0:
                m = m[:, ::-1]
            m /= np.sqrt(np.linalg.det(m))
            for (K, T), c in zip(products, base):
                K2, T2 = product_transform(AffineMap2(m), K, T)
                assert abs(ehz_capacity(K2, T2, dual=False).value - c) <= 1e-3 * c


class TestDetIdentity:
    def test_examples(self, rng):
        assert verify_det_identity(np.eye(2))
        assert verify_det_identity(J)
        for _ in range(1000):
            assert verify_det_identity(rng.uniform(-5, 5, size=(2, 2)))


class TestTriangleNormalForm:
    def test_residuals(self):
        worst = max(triangle_normal_form_residual(t) for _, t in edge_samples())
        assert worst <= 1e-12

    def test_lower_left_corner(self):
        _, a, a1, a2 = triangle_normal_form((0.5 / SQRT3, 0.0))
        assert abs(a - SQRT3 / 2) <= 1e-15
        assert abs(a1 - SQRT3 / 4) <= 1e-15 and a2 == 0.0

    def test_lower_right(self):
        _, _, a1, _ = triangle_normal_form((0.5 / SQRT3, -0.5))
        assert abs(a1) <= 1e-15

    def test_second_edge_midpoint(self):
        v = minus_j_std_vertices()
        t = 0.5 * (v[1] + v[2])
        _, _, _, a2 = triangle_normal_form(t)
        assert abs(a2 - (0.5 / SQRT3 - t[0])) <= 1e-15

    def test_maps_are_symplectic_pair(self):
        for _, t in edge_samples(5):
            (xm, ym), *_ = triangle_normal_form(t)
            assert np.allclose(ym.matrix @ xm.matrix.T, np.eye(2), atol=1e-13)

    def test_interior_t_rejected(self):
        with pytest.raises(TNotOnEdge):
            triangle_normal_form((0.0, 0.0))


class TestQuadrilateralNormalForm:
    def test_identity(self):
        (xc, yc), ball = quadrilateral_normal_form(QuadParams.identity(0.3, 0.6))
        for m in xc + yc:
            assert np.allclose(m.matrix, np.eye(2))
        assert abs(ball.radius - np.sqrt(1 / np.pi)) <= 1e-15
        assert ball.volume == 0.5

    def test_random_params(self, rng):
        for _ in range(20):
            d1 = rng.uniform(0.3, 3)
            p = QuadParams(rng.uniform(-1.2, 1.2), rng.uniform(0, 6), *rng.uniform(0, 1, 2), d1, 1 / d1,
                           *rng.uniform(-2, 2, 2))
            (xc, yc), ball = quadrilateral_normal_form(p)
            Q, A = quadrilateral_from_params(p), equality_partner(p)
            assert vertex_residual(apply_chain(xc, Q), diamond(p.a1, p.a2)) <= 1e-10
            assert vertex_residual(apply_chain(yc, A), unit_square()) <= 1e-10
            assert vertex_residual(apply_chain(invert_chain(xc), apply_chain(xc, Q)), Q) <= 1e-10
            assert abs(Q.area * A.area - ball.volume) <= 1e-12

    def test_volume_fixed_for_any_scaling(self):
        p = QuadParams(0.2, 0.4, 0.3, 0.6, 2.0, 3.0, 0.0, 0.0)
        assert abs(quadrilateral_from_params(p).area * equality_partner(p).area - 0.5) <= 1e-12


def test_std_triangle_constant():
    assert np.allclose(STD_TRIANGLE.centroid, 0, atol=1e-15)
