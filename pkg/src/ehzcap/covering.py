"""Convex hulls of translates: area minimization and the trapezoid certificate.

The conjectured minima are attacked numerically only. A search that never
drops below the reference area is evidence for the conjecture, not a proof.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .equality_cases import ParamOutOfRange, TrapezoidCase, place_in_unit_square, splitting_triangles
from .geom2d import GeometryError, convex_hull

BELOW_TOL = 1e-6
FLAG_TOL = 1e-4
CERTIFY_TOL = 1e-9
SEARCH_RADIUS_FACTOR = 2.0
SIMPLEX_TOL = 1e-10
MAX_ITER = 5000
MAX_POLISH = 3
CASES = ("dlr", "lrd", "ldr", "rld", "drl", "rdl")


class CountMismatch(GeometryError):
    pass


@dataclass(frozen=True)
class CoveringInstance:
    shapes: tuple
    reference_area: float
    pinned_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "shapes", tuple(self.shapes))
        if len(self.shapes) < 2:
            raise GeometryError("a covering instance needs at least two shapes")
        if not self.reference_area > 0:
            raise GeometryError("reference_area must be positive")
        if not 0 <= self.pinned_index < len(self.shapes):
            raise GeometryError("pinned_index out of range")

    @property
    def free_indices(self):
        return [i for i in range(len(self.shapes)) if i != self.pinned_index]

    def expand(self, x):
        """Full translation list from the free coordinates."""
        t = np.zeros((len(self.shapes), 2))
        t[self.free_indices] = np.asarray(x, float).reshape(-1, 2)
        return t


@dataclass(frozen=True)
class CoveringResult:
    best_area: float
    best_translations: np.ndarray
    n_starts: int
    reference_area: float
    history: list = field(default_factory=list, repr=False)

    @property
    def below_reference(self):
        return bool(self.best_area < self.reference_area - BELOW_TOL)

    def to_dict(self):
        return {
            "best_area": self.best_area,
            "best_translations": np.asarray(self.best_translations).tolist(),
            "n_starts": self.n_starts,
            "reference_area": self.reference_area,
            "below_reference": self.below_reference,
        }


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull_area_points(points):
    """Area of the convex hull of a small point list (plain monotone chain)."""
    pts = sorted(map(tuple, points))
    if len(pts) < 3:
        return 0.0

    def chain(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    hull = chain(pts)[:-1] + chain(reversed(pts))[:-1]
    area = 0.0
    for i in range(len(hull)):
        x0, y0 = hull[i - 1]
        x1, y1 = hull[i]
        area += x0 * y1 - x1 * y0
    return 0.5 * area


def hull_area_batch(points, tol=1e-12):
    """Hull areas for a stack of point sets of shape (N, n, 2).

    A directed pair (i, j) is a counterclockwise hull edge when no point lies
    strictly to its right and every point on its line lies inside the segment.
    Repeated points count once, through their lowest index.
    """
    P = np.asarray(points, float)
    n = P.shape[1]
    scale = max(1.0, float(np.abs(P).max())) ** 2
    eps = tol * scale
    d = P[:, None, :, :] - P[:, :, None, :]  # d[:, i, j] = p_j - p_i
    cr = d[:, :, :, None, 0] * d[:, :, None, :, 1] - d[:, :, :, None, 1] * d[:, :, None, :, 0]
    dot = np.einsum("nijc,nikc->nijk", d, d)
    len2 = np.einsum("nijc,nijc->nij", d, d)
    on_line = np.abs(cr) <= eps
    inside = (dot >= -eps) & (dot <= len2[..., None] + eps)
    ok = np.all((cr > eps) | (on_line & inside), axis=3)
    same = np.all(np.abs(d) <= np.sqrt(eps), axis=3)
    dup = np.any(same & np.tril(np.ones((n, n), bool), -1)[None], axis=2)
    ok &= ~dup[:, :, None] & ~dup[:, None, :] & (len2 > eps)
    c = P[:, :, None, 0] * P[:, None, :, 1] - P[:, :, None, 1] * P[:, None, :, 0]
    return 0.5 * np.where(ok, c, 0.0).sum(axis=(1, 2))


def _vertex_stack(shapes):
    return [np.asarray(s.vertices, float) for s in shapes]


def hull_area_of_translates(shapes, translations):
    t = np.asarray(translations, float).reshape(-1, 2)
    if len(t) != len(shapes):
        raise CountMismatch(f"{len(shapes)} shapes but {len(t)} translations")
    pts = np.vstack([v + ti for v, ti in zip(_vertex_stack(shapes), t)])
    return hull_area_points(pts.tolist())


def _objective(instance):
    verts = _vertex_stack(instance.shapes)
    free = instance.free_indices
    pinned = verts[instance.pinned_index].tolist()
    moving = [verts[i] for i in free]

    def f(x):
        pts = list(pinned)
        for k, v in enumerate(moving):
            pts.extend((v + x[2 * k:2 * k + 2]).tolist())
        return hull_area_points(pts)

    return f


def search_starts(instance, n_starts, seed):
    """Uniform starts in the search box; every prefix is the smaller run's start list."""
    radius = SEARCH_RADIUS_FACTOR * max(s.diameter for s in instance.shapes)
    dim = 2 * (len(instance.shapes) - 1)
    rng = np.random.default_rng(seed)
    return rng.uniform(-radius, radius, size=(n_starts, dim))


def _local_search(f, x0):
    opts = {"xatol": SIMPLEX_TOL, "fatol": SIMPLEX_TOL, "maxiter": MAX_ITER, "maxfev": 4 * MAX_ITER}
    res = minimize(f, x0, method="Nelder-Mead", options=opts)
    x, fx = res.x, float(res.fun)
    # restart from the result: a collapsed simplex on a kink often still has room
    for _ in range(MAX_POLISH):
        again = minimize(f, x, method="Nelder-Mead", options=opts)
        if float(again.fun) >= fx - SIMPLEX_TOL:
            break
        x, fx = again.x, float(again.fun)
    return x, fx


def minimize_hull_area(instance, n_starts, seed):
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    f = _objective(instance)
    best_x, best_f, history = None, np.inf, []
    for x0 in search_starts(instance, n_starts, seed):
        x, fx = _local_search(f, x0)
        if fx < best_f:
            best_x, best_f = x, fx
        history.append(best_f)
    return CoveringResult(float(best_f), instance.expand(best_x), n_starts, instance.reference_area, history)


# -- trapezoid instance ------------------------------------------------------

def trapezoid_shapes(z):
    if not 0 < z < 1:
        raise ParamOutOfRange(f"z = {z} must lie in (0, 1)")
    left = convex_hull([(-1 + z, z), (-1 + z, -z), (1, 0)])
    right = convex_hull([(1 - z, z), (1 - z, -z), (-1, 0)])
    seg = convex_hull([(0, -1), (0, 1)])
    return left, seg, right


def trapezoid_instance(z):
    """Left triangle, vertical segment, right triangle; the segment is pinned."""
    return CoveringInstance(trapezoid_shapes(z), 2.0, pinned_index=1)


def square_configuration(z):
    """Translations (all zero) whose hull is the square of area 2."""
    shapes = trapezoid_shapes(z)
    t = np.zeros((3, 2))
    return t, hull_area_of_translates(shapes, t)


def case_bound(case, z, w=None):
    """Lower bound for the hull area when the vertical lines come in the given order."""
    if case in ("rdl", "drl", "rld"):
        return 4 - 2 * z
    if case in ("dlr", "lrd"):
        return 2 + z * (1 - z)
    if case == "ldr":
        if w is None:
            raise ValueError("case ldr needs the distance w between the triangle lines")
        if w <= 2 - 2 * z:
            return 4 - 2 * z - w
        return 4 * z - 2 * z * z + w * (1 - z)
    raise ValueError(f"unknown case {case!r}")


def _case_points(z, case, g1, g2, lift_l, lift_r):
    """Point stacks for configurations with the vertical lines in the given order.

    The lines sit at 0, g1, g1 + g2 from left to right; lifts move the
    triangles vertically with the segment held fixed.
    """
    left, seg, right = trapezoid_shapes(z)
    pos = dict(zip(case, (np.zeros_like(g1), g1, g1 + g2)))
    home = {"l": -1 + z, "d": 0.0, "r": 1 - z}
    pts = []
    for name, shape, lift in (("l", left, lift_l), ("d", seg, np.zeros_like(g1)), ("r", right, lift_r)):
        v = shape.vertices
        p = np.empty((len(g1), len(v), 2))
        p[..., 0] = v[None, :, 0] + (pos[name] - home[name])[:, None]
        p[..., 1] = v[None, :, 1] + lift[:, None]
        pts.append(p)
    return np.concatenate(pts, axis=1)


@dataclass(frozen=True)
class CaseReport:
    case: str
    samples: int
    min_area: float
    min_margin: float
    min_bound: float
    passed: bool


@dataclass(frozen=True)
class CertificateReport:
    z: float
    cases: tuple
    square_area: float

    @property
    def passed(self):
        return all(c.passed for c in self.cases) and abs(self.square_area - 2.0) <= CERTIFY_TOL


def trapezoid_case_certify(z, samples=100, max_gap=3.0, max_lift=1.0):
    """Sample each line order and compare hull areas with the case bounds.

    Both gaps between consecutive vertical lines run over a grid of `samples`
    points in [0, max_gap]. The vertical lifts of the two triangles take values
    on a `samples`-point grid in [-max_lift, max_lift]; each gap cell gets one
    lift pair, chosen so that every lift value occurs in every gap row.
    """
    if not 0 < z < 1:
        raise ParamOutOfRange(f"z = {z} must lie in (0, 1)")
    gaps = np.linspace(0.0, max_gap, samples)
    lifts = np.linspace(-max_lift, max_lift, samples)
    i, j = np.meshgrid(np.arange(samples), np.arange(samples), indexing="ij")
    i, j = i.ravel(), j.ravel()
    g1, g2 = gaps[i], gaps[j]
    lift_l = lifts[(i + j) % samples]
    lift_r = lifts[(3 * i + 7 * j) % samples]
    reports = []
    for case in CASES:
        areas = hull_area_batch(_case_points(z, case, g1, g2, lift_l, lift_r))
        if case == "ldr":
            w = g1 + g2
            bounds = np.where(w <= 2 - 2 * z, 4 - 2 * z - w, 4 * z - 2 * z * z + w * (1 - z))
        else:
            bounds = np.full(len(areas), case_bound(case, z))
        margin = float((areas - bounds).min())
        ok = margin >= -CERTIFY_TOL and bounds.min() >= 2 - CERTIFY_TOL
        reports.append(CaseReport(case, len(areas), float(areas.min()), margin, float(bounds.min()), bool(ok)))
    return CertificateReport(z, tuple(reports), square_configuration(z)[1])


def random_configuration_audit(z, n=10_000, seed=0):
    """Hull areas of random translates of the trapezoid instance; returns the minimum."""
    shapes = trapezoid_shapes(z)
    radius = SEARCH_RADIUS_FACTOR * max(s.diameter for s in shapes)
    rng = np.random.default_rng(seed)
    t = rng.uniform(-radius, radius, size=(n, 3, 2))
    t[:, 1] = 0.0
    pts = np.concatenate([s.vertices[None] + t[:, i, None, :] for i, s in enumerate(shapes)], axis=1)
    return float(hull_area_batch(pts).min())


# -- conjecture instances ----------------------------------------------------

def conjecture_shapes(a1, a2):
    """The four scaled triangles +-lam1 J D1, +-lam2 J D2 with bounding box [0,1]^2."""
    st = splitting_triangles(a1, a2)
    return [
        place_in_unit_square(st.delta1, st.lambda1, 1.0),
        place_in_unit_square(st.delta1, st.lambda1, -1.0),
        place_in_unit_square(st.delta2, st.lambda2, 1.0),
        place_in_unit_square(st.delta2, st.lambda2, -1.0),
    ], st


def conjecture_instance(a1, a2):
    shapes, _ = conjecture_shapes(a1, a2)
    return CoveringInstance(shapes, 1.0, pinned_index=0)


def sweep_lattice(grid):
    """Valid non-trapezoid (a1, a2) pairs on the lattice k / (grid + 1)."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    vals = [k / (grid + 1) for k in range(1, grid + 1)]
    out = []
    for a1 in vals:
        for a2 in vals:
            if abs(a1 - a2) <= 1e-12 or abs(a1 + a2 - 1) <= 1e-12:
                continue
            out.append((a1, a2))
    return out


SWEEP_COLUMNS = ("a1", "a2", "lambda1", "lambda2", "best_area", "gap", "flagged")


def conjecture_sweep(grid, n_starts, seed, progress=None):
    """One row per lattice point; gap = best_area - 1, flagged when below -FLAG_TOL."""
    rows = []
    for a1, a2 in sweep_lattice(grid):
        try:
            shapes, st = conjecture_shapes(a1, a2)
        except TrapezoidCase:
            continue
        res = minimize_hull_area(CoveringInstance(shapes, 1.0, 0), n_starts, seed)
        gap = res.best_area - 1.0
        rows.append({
            "a1": a1, "a2": a2, "lambda1": st.lambda1, "lambda2": st.lambda2,
            "best_area": res.best_area, "gap": gap, "flagged": bool(gap < -FLAG_TOL),
        })
        if progress is not None:
            progress(rows[-1])
    return rows


def sweep_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([repr(float(r[c])) if c != "flagged" else str(r[c]).lower() for c in SWEEP_COLUMNS])
    return buf.getvalue()
