import numpy as np
import pytest
from hypothesis import settings

from ehzcap.geom2d import convex_hull

SQRT3 = np.sqrt(3.0)
STD_TRIANGLE = convex_hull([(-0.5, -0.5 / SQRT3), (0.5, -0.5 / SQRT3), (0.0, 1.0 / SQRT3)])

settings.register_profile("repo", derandomize=True, deadline=None)
settings.load_profile("repo")

_ACCEPTANCE_LINES = []


def random_triangle(rng, min_area=0.05, box=1.0):
    while True:
        pts = rng.uniform(-box, box, size=(3, 2))
        P = convex_hull(pts)
        if not P.degenerate and len(P) == 3 and P.area >= min_area:
            return P


def random_polygon(rng, n_points=8, min_area=0.1):
    """Hull of random points, shifted so the origin is the centroid."""
    while True:
        P = convex_hull(rng.uniform(-1, 1, size=(n_points, 2)))
        if not P.degenerate and P.area >= min_area:
            return P.translate(-P.centroid)


def regular_polygon(n, radius=1.0, phase=0.0):
    ang = phase + 2 * np.pi * np.arange(n) / n
    return convex_hull(np.column_stack([radius * np.cos(ang), radius * np.sin(ang)]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def acceptance_line():
    def record(number, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
