"""Planar convex polygon kernel.

Polygons are stored as counterclockwise vertex arrays without repeated or
collinear vertices. Boundary points are parametrized by cumulative arc length
starting at vertex 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

EPS = 1e-12
BOUNDARY_TOL = 1e-9

# J(x, y) = (y, -x)
J = np.array([[0.0, 1.0], [-1.0, 0.0]])


class GeometryError(ValueError):
    pass


class DegenerateInput(GeometryError):
    pass


class OriginNotInterior(GeometryError):
    pass


class NotOnBoundary(GeometryError):
    pass


def cross(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    vertices: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        kind = "segment" if self.degenerate else f"{len(self)}-gon"
        return f"ConvexPolygon({kind}, {self.vertices.tolist()})"

    @property
    def edges(self):
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def edge_lengths(self):
        return np.hypot(*self.edges.T)

    @property
    def normals(self):
        """Outward unit normals, one per edge (edge i runs from vertex i to i+1)."""
        e = self.edges
        n = np.column_stack([e[:, 1], -e[:, 0]])
        return n / np.hypot(*n.T)[:, None]

    @property
    def offsets(self):
        return np.einsum("ij,ij->i", self.normals, self.vertices)

    @property
    def area(self):
        if self.degenerate:
            return 0.0
        v = self.vertices
        return 0.5 * float(np.sum(cross(v, np.roll(v, -1, axis=0))))

    @property
    def perimeter(self):
        return float(np.sum(self.edge_lengths))

    @property
    def centroid(self):
        v = self.vertices
        if self.degenerate:
            return v.mean(axis=0)
        w = np.roll(v, -1, axis=0)
        c = cross(v, w)
        return ((v + w) * c[:, None]).sum(axis=0) / (3.0 * c.sum())

    @property
    def diameter(self):
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    def translate(self, t):
        return ConvexPolygon(self.vertices + np.asarray(t, float), self.degenerate)

    def scale(self, factor):
        if factor <= 0:
            raise GeometryError("scale factor must be positive")
        return ConvexPolygon(self.vertices * factor, self.degenerate)

    def linear_image(self, matrix, shift=(0.0, 0.0)):
        """Image under x -> matrix @ x + shift (re-normalized orientation)."""
        m = np.asarray(matrix, float)
        return convex_hull(self.vertices @ m.T + np.asarray(shift, float))

    def __neg__(self):
        return ConvexPolygon(-self.vertices, self.degenerate)

    def require_proper(self):
        if self.degenerate:
            raise DegenerateInput("operation needs a polygon with positive area")
        return self

    def contains(self, x, tol=BOUNDARY_TOL):
        x = np.asarray(x, float)
        vals = x @ self.normals.T - self.offsets
        return np.all(vals <= tol, axis=-1)

    def boundary_distance(self, x):
        """Euclidean distance from x to the boundary."""
        x = np.asarray(x, float)
        a = self.vertices
        e = self.edges
        s = np.clip(((x - a) * e).sum(-1) / (e * e).sum(-1), 0.0, 1.0)
        return float(np.hypot(*(a + s[:, None] * e - x).T).min())

    def point_at(self, s):
        """Boundary point at arc length s (taken modulo the perimeter)."""
        s = np.asarray(s, float)
        lengths = self.edge_lengths
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        s = np.mod(s, cum[-1])
        i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(lengths) - 1)
        frac = (s - cum[i]) / lengths[i]
        return self.vertices[i] + frac[..., None] * self.edges[i]

    def locate(self, x, tol=BOUNDARY_TOL):
        """Return (edge index, arc-length parameter) of boundary point x."""
        x = np.asarray(x, float)
        a = self.vertices
        e = self.edges
        lengths = self.edge_lengths
        s = np.clip(((x - a) * e).sum(-1) / lengths**2, 0.0, 1.0)
        dist = np.hypot(*(a + s[:, None] * e - x).T)
        i = int(np.argmin(dist))
        if dist[i] > tol:
            raise NotOnBoundary(f"point {x.tolist()} is {dist[i]:.3g} away from the boundary")
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        return i, float(cum[i] + s[i] * lengths[i])

    def vertex_index(self, x, tol=BOUNDARY_TOL):
        """Index of the vertex within tol of x, or None."""
        d = np.hypot(*(self.vertices - np.asarray(x, float)).T)
        i = int(np.argmin(d))
        return i if d[i] <= tol else None

    def halfplanes(self):
        """(normals, offsets) with the polygon equal to {x : normals @ x <= offsets}."""
        if not self.degenerate:
            return self.normals, self.offsets
        a, b = self.vertices[0], self.vertices[-1]
        d = (b - a) / np.hypot(*(b - a))
        n = np.array([d[1], -d[0]])
        normals = np.array([n, -n, d, -d])
        return normals, np.array([n @ a, -n @ a, d @ b, -d @ a])

    def to_json(self):
        return json.dumps({"vertices": [[float(f"{c:.17g}") for c in v] for v in self.vertices]})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text) if isinstance(text, str) else text
        if "vertices" not in data:
            raise DegenerateInput("polygon JSON needs a 'vertices' field")
        return convex_hull(data["vertices"])


@dataclass(frozen=True)
class Cone2:
    apex: np.ndarray
    ray_lo: np.ndarray
    ray_hi: np.ndarray

    @property
    def is_ray(self):
        return bool(np.allclose(self.ray_lo, self.ray_hi, atol=EPS))

    def angles(self):
        lo = np.arctan2(self.ray_lo[1], self.ray_lo[0])
        hi = np.arctan2(self.ray_hi[1], self.ray_hi[0])
        if hi < lo - EPS:
            hi += 2 * np.pi
        return lo, hi


@dataclass(frozen=True)
class ClosedPolygonalCurve:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        if len(v) not in (2, 3):
            raise DegenerateInput("closed curves here have 2 or 3 vertices")
        if len(v) == 2 and np.hypot(*(v[1] - v[0])) <= EPS:
            raise DegenerateInput("the two curve vertices coincide")
        if len(v) == 3:
            for i in range(3):
                a, b, c = v[i], v[(i + 1) % 3], v[(i + 2) % 3]
                if _segment_distance(c, a, b) <= EPS:
                    raise DegenerateInput("a curve vertex lies on the segment joining the others")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def translate(self, t):
        return ClosedPolygonalCurve(self.vertices + np.asarray(t, float))


def _segment_distance(x, a, b):
    e = b - a
    s = np.clip((x - a) @ e / (e @ e), 0.0, 1.0)
    return float(np.hypot(*(a + s * e - x)))


def _curve_points(q):
    if isinstance(q, ClosedPolygonalCurve):
        return q.vertices
    return np.asarray(q, float).reshape(-1, 2)


def convex_hull(points, tol=EPS):
    """Counterclockwise hull by the monotone chain; drops collinear points."""
    pts = np.asarray(points, float).reshape(-1, 2)
    pts = np.unique(pts, axis=0)
    if len(pts) > 1:
        scale = max(1.0, float(np.abs(pts).max()))
        keep = [pts[0]]
        for p in pts[1:]:
            if np.abs(p - keep[-1]).max() > tol * scale:
                keep.append(p)
        pts = np.array(keep)
    if len(pts) < 2:
        raise DegenerateInput("need at least two distinct points")
    scale = max(1.0, float(np.abs(pts).max()))

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross(out[-1] - out[-2], p - out[-2]) <= 0:
                out.pop()
            out.append(p)
        return out

    hull = chain(pts)[:-1] + chain(pts[::-1])[:-1]
    # near-collinear vertices are dropped only in hull order, where the middle
    # point is geometrically between its neighbours
    changed = True
    while changed and len(hull) >= 3:
        changed = False
        for i in range(len(hull)):
            a, b, c = hull[i - 1], hull[i], hull[(i + 1) % len(hull)]
            # distance of b from the line ac, so tiny hulls keep their shape
            if cross(b - a, c - a) <= tol * scale * np.hypot(*(c - a)):
                del hull[i]
                changed = True
                break
    hull = np.array(hull)
    if len(hull) < 3:
        far = pts[[0, -1]]
        return ConvexPolygon(far, degenerate=True)
    return ConvexPolygon(hull)


def support_function(P, u):
    """max over vertices of <u, v>; vectorized over leading axes of u."""
    return np.max(np.asarray(u, float) @ P.vertices.T, axis=-1)


def _origin_offsets(P):
    P.require_proper()
    h = P.offsets
    if np.any(h <= BOUNDARY_TOL):
        raise OriginNotInterior("the origin must lie strictly inside the polygon")
    return h


def gauge(P, x):
    """Minkowski functional of P at x."""
    h = _origin_offsets(P)
    vals = np.asarray(x, float) @ (P.normals / h[:, None]).T
    return np.maximum(np.max(vals, axis=-1), 0.0)


def polar(P):
    h = _origin_offsets(P)
    return convex_hull(P.normals / h[:, None])


def rotate_J(P):
    return ConvexPolygon(P.vertices @ J.T, P.degenerate)


def normal_cone(P, x, tol=BOUNDARY_TOL):
    P.require_proper()
    x = np.asarray(x, float)
    i, _ = P.locate(x, tol)
    n = P.normals
    k = P.vertex_index(x, tol)
    if k is not None:
        return Cone2(P.vertices[k].copy(), n[k - 1].copy(), n[k].copy())
    return Cone2(x.copy(), n[i].copy(), n[i].copy())


def line_clip(P, point, direction):
    """Parameter interval [lo, hi] of {point + s*direction} inside P, or None."""
    normals, offsets = P.halfplanes()
    a = normals @ np.asarray(direction, float)
    b = offsets - normals @ np.asarray(point, float)
    lo, hi = -np.inf, np.inf
    for ai, bi in zip(a, b):
        if abs(ai) <= 1e-15:
            if bi < -EPS:
                return None
        elif ai > 0:
            hi = min(hi, bi / ai)
        else:
            lo = max(lo, bi / ai)
    if lo > hi + EPS:
        return None
    return lo, hi


def chord_length(P, u):
    """Longest chord of P parallel to u (vectorized over rows of u)."""
    P.require_proper()
    u = np.asarray(u, float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    u = u / np.hypot(*u.T)[:, None]
    n, h = P.normals, P.offsets
    # line through vertex v with direction u: a*s <= b for every edge halfplane
    a = u @ n.T  # (m, e)
    b = h[None, :] - P.vertices @ n.T  # (v, e)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = b[None, :, :] / a[:, None, :]
    pos = a[:, None, :] > 1e-15
    neg = a[:, None, :] < -1e-15
    hi = np.where(pos, ratio, np.inf).min(axis=2)
    lo = np.where(neg, ratio, -np.inf).max(axis=2)
    out = np.maximum(hi - lo, 0.0).max(axis=1)
    return float(out[0]) if single else out


def _clip(points, normal, offset, tol):
    out = []
    m = len(points)
    for i in range(m):
        cur, nxt = points[i], points[(i + 1) % m]
        dc, dn = normal @ cur - offset, normal @ nxt - offset
        if dc <= tol:
            out.append(cur)
        if (dc < -tol and dn > tol) or (dc > tol and dn < -tol):
            s = dc / (dc - dn)
            out.append(cur + s * (nxt - cur))
    return out


def intersect_pair(P, Q, tol=EPS):
    """Convex intersection of two polygons; None when empty."""
    if Q.degenerate and not P.degenerate:
        P, Q = Q, P
    pts = list(P.vertices)
    normals, offsets = Q.halfplanes()
    scale = max(1.0, float(np.abs(P.vertices).max()), float(np.abs(Q.vertices).max()))
    for n, c in zip(normals, offsets):
        pts = _clip(pts, n, c, tol * scale)
        if not pts:
            return None
    pts = np.array(pts)
    try:
        return convex_hull(pts)
    except DegenerateInput:
        return ConvexPolygon(pts[:1], degenerate=True)


def fits_by_translation(q, K, rel_width=EPS):
    """Whether the closed curve q can be translated into the interior of K.

    Returns (fits, witness translation or None). The intersection of the
    translates K - q_j counts as having interior when area/perimeter, a
    width-like quantity, exceeds rel_width * diameter(K).
    """
    K.require_proper()
    pts = _curve_points(q)
    region = K.translate(-pts[0])
    for qj in pts[1:]:
        region = intersect_pair(region, K.translate(-qj))
        if region is None:
            return False, None
    if region.degenerate or region.area <= rel_width * K.diameter * region.perimeter:
        return False, None
    return True, region.centroid
