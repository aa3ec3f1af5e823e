"""Constructors for the known equality cases of the systolic inequality."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .geom2d import J, ConvexPolygon, GeometryError, convex_hull, rotate_J

TOL = 1e-9


class ParamOutOfRange(GeometryError):
    pass


class TNotInMinusJDelta(GeometryError):
    pass


class TrapezoidCase(GeometryError):
    pass


class NotTrapezoidParams(GeometryError):
    pass


def diamond(a1, a2, a=1.0):
    """conv{{a1} x [0,a], [0,a] x {a2}}."""
    slack = 1e-12 * max(1.0, a)
    if a <= 0 or not (-slack <= a1 <= a + slack and -slack <= a2 <= a + slack):
        raise ParamOutOfRange(f"diamond parameters ({a1}, {a2}) outside [0, {a}]")
    a1, a2 = min(max(a1, 0.0), a), min(max(a2, 0.0), a)
    return convex_hull([(a1, 0.0), (a, a2), (a1, a), (0.0, a2)])


def unit_square(side=1.0):
    return convex_hull([(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)])


def centered(P):
    return P.translate(-P.centroid)


@dataclass(frozen=True)
class TStarSpec:
    base_triangle: ConvexPolygon
    t: np.ndarray
    hull: ConvexPolygon
    kind: str  # "Hexagon" or "Parallelogram"


def t_star(delta, t):
    """conv{J delta, -J delta + t} for the centered triangle and t in -J delta."""
    if len(delta) != 3 or delta.degenerate:
        raise GeometryError("t_star needs a triangle")
    delta = centered(delta)
    t = np.asarray(t, float)
    mj = -rotate_J(delta)
    slack = mj.offsets - mj.normals @ t
    if slack.min() < -TOL * max(1.0, mj.diameter):
        raise TNotInMinusJDelta(f"t = {t.tolist()} lies outside -J(delta)")
    hull = convex_hull(np.vstack([rotate_J(delta).vertices, mj.vertices + t]))
    kind = "Parallelogram" if slack.min() <= TOL else "Hexagon"
    return TStarSpec(delta, t, hull, kind)


@dataclass(frozen=True)
class QuadParams:
    alpha: float
    beta: float
    a1: float
    a2: float
    d1: float
    d2: float
    c1: float
    c2: float

    def __post_init__(self):
        if self.d1 <= 0 or self.d2 <= 0:
            raise ParamOutOfRange("d1 and d2 must be positive")
        if abs(self.alpha) >= np.pi / 2:
            raise ParamOutOfRange("|alpha| must be below pi/2")
        if not (0 <= self.a1 <= 1 and 0 <= self.a2 <= 1):
            raise ParamOutOfRange("a1, a2 must lie in [0, 1]")

    @classmethod
    def identity(cls, a1, a2):
        return cls(0.0, 0.0, a1, a2, 1.0, 1.0, a1, a2)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else text
        missing = {"alpha", "beta", "a1", "a2", "d1", "d2", "c1", "c2"} - set(data)
        if missing:
            raise ParamOutOfRange(f"missing fields: {sorted(missing)}")
        return cls(**{k: float(data[k]) for k in ("alpha", "beta", "a1", "a2", "d1", "d2", "c1", "c2")})


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def shear_scale(p):
    return np.array([[p.d1, 0.0], [p.d1 * np.tan(p.alpha), p.d2]])


def quad_linear_part(p):
    return rotation(-p.beta) @ shear_scale(p)


def quadrilateral_from_params(p):
    """Shift by -(a1, a2), apply the shear-scale and rotation, shift by (c1, c2)."""
    M = quad_linear_part(p)
    v = diamond(p.a1, p.a2).vertices - [p.a1, p.a2]
    return convex_hull(v @ M.T + [p.c1, p.c2])


def partner_matrix(p):
    return rotation(-p.beta) @ np.linalg.inv(shear_scale(p)).T


def equality_partner(p):
    """The parallelogram image of the unit square paired with the quadrilateral."""
    return unit_square().linear_image(partner_matrix(p))


def _line_meet(p, d, q, e):
    det = d[0] * (-e[1]) + e[0] * d[1]
    if abs(det) <= 1e-12 * np.hypot(*d) * np.hypot(*e):
        raise TrapezoidCase("edge lines are parallel")
    s = ((q - p)[0] * (-e[1]) + e[0] * (q - p)[1]) / det
    return p + s * d


@dataclass(frozen=True)
class SplittingTriangles:
    a1: float
    a2: float
    delta1: ConvexPolygon
    delta2: ConvexPolygon
    v1: np.ndarray
    v2: np.ndarray
    lambda1: float
    lambda2: float


def _apex_triangle(diamond_vertices, apex):
    return convex_hull(np.vstack([diamond_vertices, apex]))


def _square_side(tri):
    lo, hi = tri.vertices.min(0), tri.vertices.max(0)
    return float(max(hi - lo))


def lambda_formulas(a1, a2):
    """Closed forms for the scalings, valid when a2 < a1 < 1 - a2."""
    lam1 = (1 - a2 - a1) / ((1 - a2) * (1 - a1))
    lam2 = (a1 - a2) / (a1 * (1 - a2))
    return lam1, lam2


def splitting_triangles(a1, a2):
    """Write the diamond as the intersection of two triangles.

    Each triangle comes from extending a pair of opposite diamond edges to
    their intersection point; its bounding box is a square whose side gives
    the scaling lambda = 1 / side.
    """
    if not (0 < a1 < 1 and 0 < a2 < 1):
        raise ParamOutOfRange("a1, a2 must lie in (0, 1)")
    if abs(a1 - a2) <= 1e-12 or abs(a1 + a2 - 1) <= 1e-12:
        raise TrapezoidCase(f"({a1}, {a2}) gives a trapezoid")
    B, R, T, L = (np.array(v, float) for v in ((a1, 0), (1, a2), (a1, 1), (0, a2)))
    v1 = _line_meet(B, R - B, T, L - T)
    v2 = _line_meet(R, T - R, L, B - L)
    dv = np.array([B, R, T, L])
    d1, d2 = _apex_triangle(dv, v1), _apex_triangle(dv, v2)
    return SplittingTriangles(a1, a2, d1, d2, v1, v2, 1.0 / _square_side(d1), 1.0 / _square_side(d2))


def trapezoid_cover_triangle(a1, a2):
    """Cover triangle, its scaling and the diagonal of the unit square for trapezoid diamonds."""
    on_lines = abs(a1 - a2) <= 1e-12 or abs(a1 + a2 - 1) <= 1e-12
    if not on_lines or (abs(a1 - 0.5) <= 1e-12 and abs(a2 - 0.5) <= 1e-12):
        raise NotTrapezoidParams(f"({a1}, {a2}) is not a trapezoid diamond")
    if not (0 < a1 < 1 and 0 < a2 < 1):
        raise ParamOutOfRange("a1, a2 must lie in (0, 1)")
    B, R, T, L = (np.array(v, float) for v in ((a1, 0), (1, a2), (a1, 1), (0, a2)))
    if abs(a1 - a2) <= 1e-12:
        # edges RT and LB are parallel
        v = _line_meet(B, R - B, T, L - T)
        d = np.array([[0.0, 0.0], [1.0, 1.0]])
    else:
        v = _line_meet(R, T - R, L, B - L)
        d = np.array([[1.0, 0.0], [0.0, 1.0]])
    tri = _apex_triangle(np.array([B, R, T, L]), v)
    return tri, 1.0 / _square_side(tri), d


def place_in_unit_square(tri, lam, sign=1.0):
    """Translate sign * lam * J(tri) so that its bounding box is the unit square."""
    img = tri.vertices @ (sign * lam * J).T
    return convex_hull(img - img.min(axis=0))
