"""Minkowski billiards on polygon pairs.

A state is a pair (q, p) with q on the boundary of K and p on the boundary of
T. One step moves q along the outward normal of T at p until it hits the
boundary of K again, then moves p against the outward normal of K at the new
q until it hits the boundary of T again.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .capacity import ell_length, ehz_capacity
from .equality_cases import ParamOutOfRange, diamond, t_star, unit_square
from .geom2d import BOUNDARY_TOL, ConvexPolygon, GeometryError, convex_hull, fits_by_translation, line_clip

CLOSURE_TOL = 1e-10
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class NonRegularState(GeometryError):
    pass


class RayExitsImmediately(GeometryError):
    pass


def _at_vertex(P, x, tol=BOUNDARY_TOL):
    return P.vertex_index(x, tol) is not None


@dataclass(frozen=True, eq=False)
class BilliardState:
    q: np.ndarray
    p: np.ndarray
    q_param: float
    p_param: float
    regular: bool

    def to_dict(self):
        return {"q": self.q.tolist(), "p": self.p.tolist()}


def make_state(K, T, q, p):
    q, p = np.asarray(q, float), np.asarray(p, float)
    _, sq = K.locate(q)
    _, sp = T.locate(p)
    regular = not (_at_vertex(K, q) or _at_vertex(T, p))
    return BilliardState(q, p, sq, sp, regular)


def reflect_step(K, T, s):
    if _at_vertex(T, s.p):
        raise NonRegularState(f"p = {s.p.tolist()} is a vertex of T")
    e, _ = T.locate(s.p)
    direction = T.normals[e]
    span = line_clip(K, s.q, direction)
    if span is None or span[1] <= 1e-12 * max(1.0, K.diameter):
        raise RayExitsImmediately("the normal at p points out of K at q")
    q_new = s.q + span[1] * direction
    if _at_vertex(K, q_new):
        raise NonRegularState(f"q = {q_new.tolist()} hits a vertex of K")
    f, _ = K.locate(q_new)
    back = -K.normals[f]
    span = line_clip(T, s.p, back)
    if span is None or span[1] <= 1e-12 * max(1.0, T.diameter):
        raise RayExitsImmediately("the dual step leaves T immediately")
    p_new = s.p + span[1] * back
    return make_state(K, T, q_new, p_new)


@dataclass(frozen=True, eq=False)
class BilliardTrajectory:
    states: list
    closed: bool
    bounce_count: int
    length_T: float
    length_K_dual: float
    residual: float = field(default=np.inf)

    def to_json(self):
        return json.dumps(
            {
                "states": [s.to_dict() for s in self.states],
                "closed": self.closed,
                "length_T": self.length_T,
            }
        )


def trace(K, T, start, max_steps=64):
    if not start.regular:
        raise NonRegularState("trajectories start from regular states")
    states = [start]
    scale = max(1.0, K.diameter, T.diameter)
    residual = np.inf
    closed = False
    for _ in range(max_steps):
        nxt = reflect_step(K, T, states[-1])
        residual = max(np.hypot(*(nxt.q - start.q)), np.hypot(*(nxt.p - start.p)))
        if residual <= CLOSURE_TOL * scale:
            closed = True
            break
        states.append(nxt)
    qs = np.array([s.q for s in states])
    ps = np.array([s.p for s in states])
    if closed:
        length_T = ell_length(qs, T)
        length_dual = _dual_length(ps, K)
    else:
        length_T = length_dual = np.nan
    return BilliardTrajectory(states, closed, len(states), length_T, length_dual, float(residual))


def _dual_length(ps, K):
    # length of the p-cycle measured with -K
    steps = np.roll(ps, -1, axis=0) - ps
    return float(np.sum(np.max(-steps @ K.vertices.T, axis=1)))


def random_regular_start(K, T, rng, margin=1e-6):
    """Uniform q on the boundary of K and p inside an edge of T whose normal enters K at q."""
    while True:
        q = K.point_at(rng.uniform(0, K.perimeter))
        if _at_vertex(K, q, margin):
            continue
        f, _ = K.locate(q)
        ok = np.flatnonzero(T.normals @ K.normals[f] < -margin)
        if len(ok) == 0:
            continue
        e = ok[rng.integers(len(ok))]
        frac = rng.uniform(margin, 1 - margin)
        p = T.vertices[e] + frac * T.edges[e]
        return make_state(K, T, q, p)


def zoll_report(K, T, n_starts, seed, capacity=None, max_steps=64):
    """Trace random regular starts; count closures, bounce counts and length errors."""
    rng = np.random.default_rng(seed)
    if capacity is None:
        capacity = ehz_capacity(K, T, dual=False).value
    rows = []
    for _ in range(n_starts):
        s = random_regular_start(K, T, rng)
        try:
            tr = trace(K, T, s, max_steps)
        except (NonRegularState, RayExitsImmediately):
            rows.append((False, 0, np.inf, np.inf, np.inf))
            continue
        rows.append((tr.closed, tr.bounce_count, tr.residual, abs(tr.length_T - capacity), abs(tr.length_T - tr.length_K_dual)))
    closed = sum(r[0] for r in rows)
    bounces = sorted({r[1] for r in rows if r[0]})
    return {
        "capacity": capacity,
        "starts": n_starts,
        "closed": int(closed),
        "bounce_counts": bounces,
        "max_residual": max(r[2] for r in rows),
        "max_length_error": max(r[3] for r in rows),
        "max_dual_length_error": max(r[4] for r in rows),
    }


# -------------------------------------------------------------- return maps

PATTERNS = ("Upper", "MiddleLeft", "MiddleRight", "LowerLeft", "LowerRight")


def _project(point, slope, target):
    """Move along slope from point until the target line ('x', c) or ('y', c) is met."""
    x, y = point
    axis, c = target
    if axis == "x":
        return np.array([c, y + slope * (c - x)])
    return np.array([x + (c - y) / slope, c])


def return_map_lines(a1, a2, pattern, z1):
    """Slopes, intercepts and target lines of the four (or three) projections."""
    if pattern == "Upper":
        lines = [
            (-a1 / (1 - a2), z1 * a1 / (1 - a2), ("x", 0.0)),
            ((a1 - 1) / (a2 - 1), z1 * a1 / (1 - a2), ("y", 1.0)),
            ((a1 - 1) / a2, (1 - z1 * a1) / a2, ("x", 1.0)),
            (a1 / a2, -a1 * z1 / a2, ("y", 0.0)),
        ]
        start = (z1, 0.0)
    elif pattern == "MiddleRight":
        lines = [
            (-a1 / (1 - a2), a1 * z1 / (1 - a2), ("x", 0.0)),
            ((a1 - 1) / (a2 - 1), a1 * z1 / (1 - a2), ("x", 1.0)),
            (-a1 / (1 - a2), (1 + a1 * z1) / (1 - a2), ("y", 1.0)),
            (a1 / a2, -a1 * z1 / a2, ("y", 0.0)),
        ]
        start = (z1, 0.0)
    elif pattern == "MiddleLeft":
        lines = [
            ((a1 - 1) / (a2 - 1), (z1 - a1 * z1) / (a2 - 1), ("x", 1.0)),
            (-a1 / (1 - a2), (-1 + z1 - a1 * z1) / (a2 - 1), ("x", 0.0)),
            ((a1 - 1) / (a2 - 1), (-1 + z1 - a1 * z1) / (a2 - 1), ("y", 1.0)),
            ((a1 - 1) / a2, (z1 - a1 * z1) / a2, ("y", 0.0)),
        ]
        start = (z1, 0.0)
    elif pattern == "LowerRight":
        lines = [
            (a1 - 1, 1 - z1 * (a1 - 1), ("x", 1.0)),
            (a1, z1 * (1 - a1), ("x", 0.0)),
            (a1 - 1, z1 * (1 - a1), ("y", 0.0)),
        ]
        start = (z1, 1.0)
    elif pattern == "LowerLeft":
        lines = [
            (a1, 1 - a1 * z1, ("x", 0.0)),
            (a1 - 1, 1 - a1 * z1, ("x", 1.0)),
            (a1, -a1 * z1, ("y", 0.0)),
        ]
        start = (z1, 1.0)
    else:
        raise ParamOutOfRange(f"unknown pattern {pattern!r}")
    return np.array(start), lines


def algebraic_return_map(a1, a2, pattern, z1):
    """First coordinate after composing the projections of the given pattern."""
    if pattern not in PATTERNS:
        raise ParamOutOfRange(f"unknown pattern {pattern!r}")
    if not (0 < a1 < 1 and 0 < z1 < 1):
        raise ParamOutOfRange("a1 and z1 must lie in (0, 1)")
    if pattern.startswith("Lower"):
        if a2 != 1:
            raise ParamOutOfRange("the lower patterns need a2 = 1")
    elif not 0 < a2 < 1:
        raise ParamOutOfRange("a2 must lie in (0, 1)")
    point, lines = return_map_lines(a1, a2, pattern, z1)
    for slope, _, target in lines:
        point = _project(point, slope, target)
    return float(point[0])


def dual_return_map(a1, a2, z1):
    """Horizontal/vertical projections between diamond edge lines, starting on the lower left edge."""
    if not (0 < a1 < 1 and 0 < a2 < 1):
        raise ParamOutOfRange("a1, a2 must lie in (0, 1)")
    if not 0 < z1 < a1:
        raise ParamOutOfRange("z1 must lie in (0, a1)")

    def g1(x):
        return a2 + (1 - a2) / a1 * x

    def g2(x):
        return a2 - a2 / a1 * x

    def g4(x):
        return (1 - a1 * a2) / (1 - a1) - (1 - a2) / (1 - a1) * x

    def g3_inv(y):
        return (y + a1 * a2 / (1 - a1)) * (1 - a1) / a2

    def g1_inv(y):
        return (y - a2) * a1 / (1 - a2)

    x, y = z1, g2(z1)
    x = g3_inv(y)
    y = g4(x)
    x = g1_inv(y)
    return np.array([x, y])


# ------------------------------------------------------------ counterexamples


@dataclass(frozen=True, eq=False)
class Counterexample:
    K: ConvexPolygon
    T: ConvexPolygon
    q: np.ndarray
    p: np.ndarray
    ell_expected: float
    capacity_expected: float
    ell: float
    capacity: float
    q_in_fcp: bool

    @property
    def verified(self):
        return (
            abs(self.ell - self.ell_expected) <= 1e-12
            and abs(self.capacity - self.capacity_expected) <= 1e-3 * self.capacity_expected
            and self.q_in_fcp
        )


def counterexample_catalog(resolution=720):
    """The two non-regular trajectories whose length exceeds the capacity."""
    data = [
        (
            convex_hull([(-1, -1), (1, -1), (0, 1)]),
            convex_hull([(-0.5, -1), (0.5, -1), (1.5, 0), (0.5, 1), (-0.5, 1), (-1.5, 0)]),
            [(1, -1), (-1, -1)],
            [(-1.5, 0), (1.5, 0)],
            6.0,
            4.0,
        ),
        (
            convex_hull([(-1, -1), (1, -1), (1, 1), (-1, 1)]),
            diamond(0.5, 0.25),
            [(1, -1), (-1, 1)],
            [(0.5, 1), (1, 0.25)],
            2.5,
            2.0,
        ),
    ]
    out = []
    for K, T, q, p, ell_exp, cap_exp in data:
        q, p = np.array(q, float), np.array(p, float)
        fits, _ = fits_by_translation(q, K)
        cap = ehz_capacity(K, T, resolution, dual=False).value
        out.append(Counterexample(K, T, q, p, ell_exp, cap_exp, ell_length(q, T), cap, not fits))
    return out


# ---------------------------------------------------------------- coverage


def coverage_starts(K, T, n_starts):
    """Deterministic starts along the boundary of K from a golden-ratio sequence.

    Every prefix of the sequence is reused, so coverage grows with n_starts.
    """
    starts = []
    k = 0
    while len(starts) < n_starts:
        k += 1
        s = ((k * GOLDEN) % 1.0) * K.perimeter
        q = K.point_at(s)
        if _at_vertex(K, q, 1e-6):
            continue
        f, _ = K.locate(q)
        ok = np.flatnonzero(T.normals @ K.normals[f] < -1e-6)
        if len(ok) == 0:
            continue
        e = ok[0]
        starts.append(make_state(K, T, q, T.vertices[e] + 0.5 * T.edges[e]))
    return starts


def _mark_segment(mask, a, b, lo, cell):
    n = mask.shape[0]
    steps = max(2, int(np.ceil(np.hypot(*(b - a)) / (0.25 * cell.min()))) + 1)
    pts = a + np.linspace(0, 1, steps)[:, None] * (b - a)
    idx = np.clip(((pts - lo) / cell).astype(int), 0, n - 1)
    mask[idx[:, 1], idx[:, 0]] = True


def coverage_sample(K, T, n_starts, grid=100, max_steps=64):
    """Fraction of raster cells inside K lying within one cell of some traced path."""
    lo, hi = K.vertices.min(0), K.vertices.max(0)
    cell = (hi - lo) / grid
    hit = np.zeros((grid, grid), bool)
    for s in coverage_starts(K, T, n_starts):
        try:
            tr = trace(K, T, s, max_steps)
        except (NonRegularState, RayExitsImmediately):
            continue
        qs = [st.q for st in tr.states]
        if tr.closed:
            qs.append(qs[0])
        for a, b in zip(qs[:-1], qs[1:]):
            _mark_segment(hit, a, b, lo, cell)
    grown = hit.copy()
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            grown |= np.roll(np.roll(hit, dx, axis=0), dy, axis=1)
    xs = lo[0] + (np.arange(grid) + 0.5) * cell[0]
    ys = lo[1] + (np.arange(grid) + 0.5) * cell[1]
    X, Y = np.meshgrid(xs, ys)
    inside = K.contains(np.stack([X, Y], -1), tol=0.0)
    return float((grown & inside).sum() / inside.sum())


# ----------------------------------------------------------------- SVG


def trajectory_svg(K, T, trajectory=None, size=800):
    """Static SVG with K and the q-path on the left, T and the p-path on the right."""
    half = size / 2

    def panel(P, path, offset, outline, stroke):
        lo, hi = P.vertices.min(0), P.vertices.max(0)
        span = float(max(hi - lo)) or 1.0
        scale = 0.8 * half / span

        def xy(v):
            return (offset + 0.1 * half + (v[0] - lo[0]) * scale, size / 2 + 0.4 * half - (v[1] - lo[1]) * scale)

        poly = " ".join(f"{x:.3f},{y:.3f}" for x, y in map(xy, P.vertices))
        parts = [f'<polygon points="{poly}" fill="none" stroke="{outline}" stroke-width="2"/>']
        if path is not None and len(path) > 1:
            pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in map(xy, list(path) + [path[0]]))
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{stroke}" stroke-width="1.5"/>')
        return parts

    qs = [s.q for s in trajectory.states] if trajectory else None
    ps = [s.p for s in trajectory.states] if trajectory else None
    body = panel(K, qs, 0.0, "black", "red") + panel(T, ps, half, "gray", "blue")
    legend = [
        '<text x="20" y="30" font-size="16" fill="black">K</text>',
        '<text x="60" y="30" font-size="16" fill="red">q-path</text>',
        f'<text x="{half + 20}" y="30" font-size="16" fill="gray">T</text>',
        f'<text x="{half + 60}" y="30" font-size="16" fill="blue">p-path</text>',
    ]
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">\n'
        + "\n".join(body + legend)
        + "\n</svg>\n"
    )


# ------------------------------------------------------------ catalog pairs


def catalog_pair(case, a1=0.5, a2=0.5, t=(0.05, 0.02), side=1.0):
    """(K, T) for the named equality case."""
    from .equality_cases import QuadParams, equality_partner, quadrilateral_from_params

    r3 = np.sqrt(3.0)
    tri = convex_hull([(-0.5, -0.5 / r3), (0.5, -0.5 / r3), (0.0, 1.0 / r3)])
    if case == "square-diamond":
        return unit_square(side), diamond(a1, a2, side)
    if case == "triangle-hexagon":
        return tri, t_star(tri, t).hull
    if case == "triangle-parallelogram":
        mj = -(tri.vertices @ np.array([[0.0, 1.0], [-1.0, 0.0]]).T)
        return tri, t_star(tri, 0.3 * mj[0] + 0.7 * mj[1]).hull
    if case == "quad-partner":
        p = QuadParams(0.2, 0.4, a1, a2, 1.3, 0.8, 0.0, 0.0)
        return quadrilateral_from_params(p), equality_partner(p)
    raise ParamOutOfRange(f"unknown catalog case {case!r}")
