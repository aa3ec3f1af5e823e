"""EHZ capacity of a Lagrangian product K x T of convex polygons.

The capacity equals the minimal T-length (sum of support values of the edge
vectors) over closed polygonal curves with two or three vertices that cannot
be translated into the interior of K. Two-vertex curves are handled exactly
through a chord/width reduction; three-vertex curves are searched on an
arc-length grid of the boundary of K and refined by a small linear program.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .geom2d import (
    ClosedPolygonalCurve,
    ConvexPolygon,
    DegenerateInput,
    GeometryError,
    chord_length,
    fits_by_translation,
    line_clip,
    support_function,
)

SPAN_MARGIN = 1e-9
DEFAULT_RESOLUTION = 720
ANGLE_SAMPLES = 3600
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class NoFeasibleTriple(GeometryError):
    pass


class QNotTrapezoid(GeometryError):
    pass


class Solver(str, enum.Enum):
    TWO_BOUNCE = "TwoBounceExact"
    THREE_BOUNCE = "ThreeBounceOracle"
    COMBINED = "Combined"


@dataclass(frozen=True)
class CapacityResult:
    value: float
    curve: ClosedPolygonalCurve
    solver: Solver
    dual_value: float | None = None
    resolution: int | None = None

    def to_dict(self):
        return {
            "value": self.value,
            "dual_value": self.dual_value,
            "solver": self.solver.value,
            "curve": self.curve.vertices.tolist(),
            "resolution": self.resolution,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class SystolicReport:
    capacity: float
    volume_product: float
    ratio: float
    is_equality: bool

    def to_json(self):
        return json.dumps(self.__dict__, sort_keys=True)


def ell_length(q, T):
    """T-length of the closed polygon through the points of q."""
    pts = q.vertices if isinstance(q, ClosedPolygonalCurve) else np.asarray(q, float)
    steps = np.roll(pts, -1, axis=0) - pts
    return float(np.sum(support_function(T, steps)))


# ---------------------------------------------------------------- two bounces


def _direction_angles(P):
    v = P.vertices
    diffs = (v[:, None, :] - v[None, :, :]).reshape(-1, 2)
    diffs = diffs[np.hypot(*diffs.T) > 0]
    n = P.normals
    vecs = np.vstack([diffs, n, P.edges])
    return np.arctan2(vecs[:, 1], vecs[:, 0])


def _two_bounce_objective(K, T, theta):
    u = np.column_stack([np.cos(theta), np.sin(theta)])
    width = support_function(T, u) + support_function(T, -u)
    return chord_length(K, u) * width


def _golden_section(f, a, b, rel_tol=1e-10):
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > rel_tol * max(1.0, abs(a) + abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _longest_chord(K, u):
    best = None
    for v in K.vertices:
        clip = line_clip(K, v, u)
        if clip is None:  # roundoff on an edge parallel to u; another vertex carries the chord
            continue
        lo, hi = clip
        if best is None or hi - lo > best[0]:
            best = (hi - lo, v + lo * u, v + hi * u)
    return best[1], best[2]


def capacity_two_bounce(K, T):
    """Exact minimum of the T-length over two-vertex curves not fitting into K."""
    K.require_proper()
    T.require_proper()
    grid = np.linspace(0.0, np.pi, ANGLE_SAMPLES, endpoint=False)
    breaks = np.mod(np.concatenate([_direction_angles(K), _direction_angles(T)]), np.pi)
    theta = np.unique(np.concatenate([grid, breaks]))
    vals = _two_bounce_objective(K, T, theta)

    def f(t):
        return float(_two_bounce_objective(K, T, np.array([t]))[0])

    best_i = int(np.argmin(vals))
    best_t, best_v = float(theta[best_i]), float(vals[best_i])
    ext = np.concatenate([theta, [theta[0] + np.pi]])
    for i in np.argsort(vals, kind="stable")[:5]:
        lo = ext[i - 1] if i > 0 else theta[-1] - np.pi
        t, v = _golden_section(f, lo, ext[i + 1])
        if v < best_v:
            best_t, best_v = t, v
    u = np.array([np.cos(best_t), np.sin(best_t)])
    a, b = _longest_chord(K, u)
    return CapacityResult(best_v, ClosedPolygonalCurve([a, b]), Solver.TWO_BOUNCE)


# -------------------------------------------------------------- three bounces


@dataclass
class _BoundaryGrid:
    params: np.ndarray
    points: np.ndarray
    feature: np.ndarray  # vertex k -> k, interior of edge k -> n + k
    lo: np.ndarray  # unwrapped normal-cone angles, nondecreasing
    hi: np.ndarray


def _boundary_grid(K, resolution):
    n = len(K)
    lengths = K.edge_lengths
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    perim = cum[-1]
    s = np.arange(resolution) * (perim / resolution)
    s = np.unique(np.concatenate([s, cum[:-1]]))
    edge = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, n - 1)
    at_vertex = np.isclose(s, cum[edge], rtol=0, atol=1e-12 * perim)
    s = np.where(at_vertex, cum[edge], s)
    s, keep = np.unique(s, return_index=True)
    edge, at_vertex = edge[keep], at_vertex[keep]

    normals = K.normals
    ang = np.arctan2(normals[:, 1], normals[:, 0])
    ang = ang[0] + np.concatenate([[0.0], np.cumsum(np.mod(np.diff(ang), 2 * np.pi))])
    prev = np.concatenate([[ang[-1] - 2 * np.pi], ang[:-1]])
    lo = np.where(at_vertex, prev[edge], ang[edge])
    feature = np.where(at_vertex, edge, n + edge)
    return _BoundaryGrid(s, K.point_at(s), feature, lo, ang[edge].copy())


def _nested_features(n):
    """Feature pairs whose normal cones are nested (dominated by two bounces)."""
    m = 2 * n
    nested = np.eye(m, dtype=bool)
    for k in range(n):
        for e in (k, (k - 1) % n):
            nested[k, n + e] = nested[n + e, k] = True
    return nested


def _support_matrix(points, T, chunk=128):
    """H[a, b] = h_T(points[b] - points[a])."""
    g = points @ T.vertices.T
    out = np.empty((len(points), len(points)))
    for start in range(0, len(points), chunk):
        block = g[None, :, :] - g[start:start + chunk, None, :]
        out[start:start + chunk] = block.max(axis=2)
    return out


def _grid_search(grid, H, nested):
    """Best (value, i, j, k, orientation) per middle index j over feasible triples."""
    lo, hi, feat = grid.lo, grid.hi, grid.feature
    N = len(lo)
    lim = np.pi + SPAN_MARGIN
    pair_ok = ~nested[feat[:, None], feat[None, :]]
    # gap test between consecutive cones is monotone along the boundary
    imin = np.searchsorted(hi, lo - lim, side="left")
    kmax = np.searchsorted(lo, hi + lim, side="right") - 1
    candidates = []
    for j in range(1, N - 1):
        I = np.arange(imin[j], j)
        I = I[pair_ok[I, j]]
        K = np.arange(j + 1, kmax[j] + 1)
        K = K[pair_ok[j, K]]
        if len(I) == 0 or len(K) == 0:
            continue
        closing = (lo[I][:, None] + 2 * np.pi - hi[K][None, :] <= lim) & pair_ok[np.ix_(I, K)]
        if not closing.any():
            continue
        ccw = H[I, j][:, None] + H[j, K][None, :] + H[np.ix_(K, I)].T
        cw = H[j, I][:, None] + H[K, j][None, :] + H[np.ix_(I, K)]
        for orient, vals in ((0, ccw), (1, cw)):
            vals = np.where(closing, vals, np.inf)
            flat = int(np.argmin(vals))
            v = vals.flat[flat]
            if np.isfinite(v):
                a, b = divmod(flat, len(K))
                candidates.append((float(v), int(I[a]), j, int(K[b]), orient))
    return candidates


def _feature_segment(K, f):
    n = len(K)
    if f < n:
        return K.vertices[f], np.zeros(2)
    e = f - n
    return K.vertices[e], K.edges[e]


def _refine_block(K, T, feats):
    """Exact minimum of the T-length with each point on its (closed) feature."""
    segs = [_feature_segment(K, f) for f in feats]
    m = len(T)
    # variables: s1, s2, s3 (edge fractions), t1, t2, t3 (support values)
    A, b = [], []
    for a in range(3):
        c = (a + 1) % 3
        (pa, da), (pc, dc) = segs[a], segs[c]
        for w in T.vertices:
            row = np.zeros(6)
            row[a] -= da @ w
            row[c] += dc @ w
            row[3 + a] = -1.0
            A.append(row)
            b.append(-(pc - pa) @ w)
    bounds = [(0.0, 1.0 if np.any(d) else 0.0) for _, d in segs] + [(None, None)] * 3
    res = linprog(np.r_[0, 0, 0, 1, 1, 1], A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
    if not res.success:
        return None
    pts = np.array([p + s * d for (p, d), s in zip(segs, res.x[:3])])
    return ell_length(pts, T), pts


def _simplify_curve(pts):
    """Drop repeated points and points lying on the segment joining the others."""
    out = []
    for p in pts:
        if not any(np.hypot(*(p - o)) <= 1e-12 for o in out):
            out.append(p)
    if len(out) == 3:
        for i in range(3):
            try:
                return ClosedPolygonalCurve(out)
            except DegenerateInput:
                out = [out[(i + 1) % 3], out[(i + 2) % 3]]
                break
    return ClosedPolygonalCurve(out)


def capacity_three_bounce_oracle(K, T, resolution=DEFAULT_RESOLUTION, refine=5):
    """Grid search over boundary triples of K plus exact refinement of the best blocks."""
    K.require_proper()
    T.require_proper()
    if resolution < 60:
        raise ValueError("resolution must be at least 60")
    grid = _boundary_grid(K, resolution)
    H = _support_matrix(grid.points, T)
    nested = _nested_features(len(K))
    candidates = _grid_search(grid, H, nested)
    if not candidates:
        raise NoFeasibleTriple(f"no feasible boundary triple at resolution {resolution}")
    candidates.sort(key=lambda c: (c[0], c[1], c[2], c[3], c[4]))

    def ordered(c):
        _, i, j, k, orient = c
        return (i, j, k) if orient == 0 else (i, k, j)

    v0, *_ = candidates[0]
    best_value, best_pts = v0, grid.points[list(ordered(candidates[0]))]
    seen = set()
    for c in candidates:
        if len(seen) >= refine:
            break
        idx = ordered(c)
        key = tuple(int(grid.feature[i]) for i in idx)
        if key in seen:
            continue
        seen.add(key)
        out = _refine_block(K, T, key)
        if out is not None and out[0] < best_value:
            best_value, best_pts = out
    curve = _simplify_curve(best_pts)
    fits, _ = fits_by_translation(curve, K)
    if fits:
        # should not happen: boundary triples with spanning normals never fit
        curve = ClosedPolygonalCurve(grid.points[list(ordered(candidates[0]))])
        best_value = v0
    return CapacityResult(float(best_value), curve, Solver.THREE_BOUNCE, resolution=resolution)


def ehz_capacity(K, T, resolution=DEFAULT_RESOLUTION, dual=True):
    two = capacity_two_bounce(K, T)
    three = capacity_three_bounce_oracle(K, T, resolution)
    value = min(two.value, three.value)
    if abs(two.value - three.value) <= 1e-12 * value:
        solver, curve = Solver.COMBINED, two.curve
    elif two.value < three.value:
        solver, curve = Solver.TWO_BOUNCE, two.curve
    else:
        solver, curve = Solver.THREE_BOUNCE, three.curve
    dual_value = ehz_capacity(T, K, resolution, dual=False).value if dual else None
    return CapacityResult(value, curve, solver, dual_value, resolution)


def systolic_report(K, T, resolution=DEFAULT_RESOLUTION):
    c = ehz_capacity(K, T, resolution, dual=False).value
    vol = K.area * T.area
    ratio = c * c / (2.0 * vol)
    return SystolicReport(c, vol, ratio, abs(ratio - 1.0) <= 1e-6)


def is_trapezoid(Q, tol=1e-9):
    """A triangle counts as a degenerate trapezoid."""
    if len(Q) == 3:
        return True
    e = Q.edges / Q.edge_lengths[:, None]
    n = len(e)
    for i in range(n):
        for j in range(i + 1, n):
            if abs(e[i, 0] * e[j, 1] - e[i, 1] * e[j, 0]) <= tol:
                return True
    return False


def worm_inequality_check(K, Q, resolution=DEFAULT_RESOLUTION):
    """Billiard inequality c(K x Q)^2 <= 2 vol(K) for Q scaled to unit area."""
    if not is_trapezoid(Q):
        raise QNotTrapezoid("Q has no pair of parallel edges")
    c = ehz_capacity(K, Q, resolution, dual=False).value
    return c * c / Q.area <= 2.0 * K.area * (1.0 + 1e-3)
