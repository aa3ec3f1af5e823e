"""Linear symplectic normal forms for Lagrangian products.

A linear map phi on the x-plane together with (phi^T)^{-1} on the y-plane is
symplectic; translations of either factor are symplectic as well.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .equality_cases import diamond, quad_linear_part, t_star, unit_square
from .geom2d import J, BOUNDARY_TOL, ConvexPolygon, GeometryError, convex_hull

SQRT3 = np.sqrt(3.0)
STD_TRIANGLE = np.array([(-0.5, -0.5 / SQRT3), (0.5, -0.5 / SQRT3), (0.0, 1.0 / SQRT3)])


class SingularMatrix(GeometryError):
    pass


class TNotOnEdge(GeometryError):
    pass


@dataclass(frozen=True, eq=False)
class AffineMap2:
    matrix: np.ndarray
    shift: np.ndarray = np.zeros(2)

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.array(self.matrix, float).reshape(2, 2))
        object.__setattr__(self, "shift", np.array(self.shift, float).reshape(2))

    @property
    def det(self):
        return float(np.linalg.det(self.matrix))

    def __call__(self, x):
        return np.asarray(x, float) @ self.matrix.T + self.shift

    def apply(self, P):
        return convex_hull(self(P.vertices))

    def then(self, other):
        """The map x -> other(self(x))."""
        return AffineMap2(other.matrix @ self.matrix, other.matrix @ self.shift + other.shift)

    def inverse(self):
        if abs(self.det) <= 1e-12:
            raise SingularMatrix("matrix is not invertible")
        inv = np.linalg.inv(self.matrix)
        return AffineMap2(inv, -inv @ self.shift)

    def dual_linear(self):
        """(matrix^T)^{-1} without shift."""
        if abs(self.det) <= 1e-12:
            raise SingularMatrix("matrix is not invertible")
        return AffineMap2(np.linalg.inv(self.matrix).T)

    def to_dict(self):
        return {"matrix": self.matrix.tolist(), "shift": self.shift.tolist()}


def translation(t):
    return AffineMap2(np.eye(2), t)


def chain_to_json(chain):
    return json.dumps([m.to_dict() for m in chain])


@dataclass(frozen=True)
class BallNormalForm:
    a: float
    a1: float
    a2: float

    @property
    def radius(self):
        return float(np.sqrt(self.a / np.pi))

    @property
    def volume(self):
        return self.a * self.a / 2.0


def product_transform(phi, K, T, y_shift=(0.0, 0.0)):
    """(phi(K), (phi^T)^{-1} T + y_shift)."""
    dual = phi.dual_linear()
    return phi.apply(K), convex_hull(dual(T.vertices) + np.asarray(y_shift, float))


def verify_det_identity(phi, tol=1e-12):
    m = phi.matrix if isinstance(phi, AffineMap2) else np.asarray(phi, float)
    lhs = m.T @ J @ m
    scale = max(1.0, float(np.abs(m).max()) ** 2)
    return bool(np.abs(lhs - np.linalg.det(m) * J).max() <= tol * scale)


def minus_j_std_vertices():
    return -(STD_TRIANGLE @ J.T)


def _edge_data(edge, t):
    """Matrix, y-side pre-shift and targets (a1, a2) for t on the given edge."""
    t1, t2 = t
    a = SQRT3 / 2
    if edge == 0:
        A = np.array([[a, t2], [0.0, 1.0]])
        s2 = np.array([0.5 / SQRT3, 0.5])
        a1, a2 = SQRT3 / 4 + a * t2, 0.0
    elif edge == 1:
        A = np.array([[a, 0.5], [t1 - 0.5 / SQRT3, t1 / SQRT3 + 5.0 / 6.0]])
        s2 = np.array([0.5 / SQRT3, 0.5])
        a1, a2 = a, 0.5 / SQRT3 - t1
    else:
        A = np.array([[-t1 + 0.5 / SQRT3, 5.0 / 6.0 + t1 / SQRT3], [-a, 0.5]])
        s2 = np.array([-t1 - 0.5 / SQRT3, t1 / SQRT3 + 5.0 / 6.0])
        a1, a2 = -t1 + 0.5 / SQRT3, a
    return A, s2, a, a1, a2


def select_edge(t, tol=BOUNDARY_TOL):
    """First edge of -J(std triangle) within tol of t, edges taken as [v1,v2], [v2,v3], [v3,v1]."""
    v = minus_j_std_vertices()
    t = np.asarray(t, float)
    dists = []
    for i in range(3):
        p, q = v[i], v[(i + 1) % 3]
        s = np.clip((t - p) @ (q - p) / ((q - p) @ (q - p)), 0.0, 1.0)
        dists.append(float(np.hypot(*(p + s * (q - p) - t))))
    for i, d in enumerate(dists):
        if d <= tol:
            return i
    raise TNotOnEdge(f"t = {t.tolist()} is {min(dists):.3g} away from the boundary of -J(triangle)")


def triangle_normal_form(t):
    """Maps (x_map, y_map) sending (std triangle, T*(t)) to (diamond(a, a1, a2), unit square).

    The x-map sends the lower left vertex of the triangle to (0, a2).
    """
    t = np.asarray(t, float)
    edge = select_edge(t)
    A, s2, a, a1, a2 = _edge_data(edge, t)
    if abs(np.linalg.det(A)) <= 1e-12:
        raise SingularMatrix("normal-form matrix is singular")
    x_map = AffineMap2(A, np.array([0.0, a2]) - A @ STD_TRIANGLE[0])
    dual = np.linalg.inv(A).T
    y_map = AffineMap2(dual, dual @ s2)
    return (x_map, y_map), a, a1, a2


def vertex_residual(P, Q):
    """Largest distance from a vertex of P to the nearest vertex of Q (and back)."""
    A, B = P.vertices, Q.vertices
    d = np.hypot(*(A[:, None, :] - B[None, :, :]).transpose(2, 0, 1))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def triangle_normal_form_residual(t):
    (xm, ym), a, a1, a2 = triangle_normal_form(t)
    tri = convex_hull(STD_TRIANGLE)
    hull = t_star(tri, t).hull
    return max(vertex_residual(xm.apply(tri), diamond(a1, a2, a)), vertex_residual(ym.apply(hull), unit_square()))


def quadrilateral_normal_form(p):
    """Map chains sending Q x A(unit square) to diamond(a1, a2) x unit square.

    Returns ((x_chain, y_chain), BallNormalForm). The x-chain undoes the
    quadrilateral construction; the y-chain is the dual of its linear part.
    The product volume is 1/2 for every parameter choice, so the target is
    always the unit-size normal form.
    """
    M = quad_linear_part(p)
    if abs(np.linalg.det(M)) <= 1e-12:
        raise SingularMatrix("quadrilateral matrix is singular")
    x_chain = [translation([-p.c1, -p.c2]), AffineMap2(np.linalg.inv(M)), translation([p.a1, p.a2])]
    y_chain = [AffineMap2(M.T)]
    return (x_chain, y_chain), BallNormalForm(1.0, p.a1, p.a2)


def invert_chain(chain):
    return [m.inverse() for m in reversed(chain)]


def apply_chain(chain, P):
    m = AffineMap2(np.eye(2))
    for step in chain:
        m = m.then(step)
    return m.apply(P)
