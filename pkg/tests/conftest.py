"""Shared fixtures and independent reference implementations.

The helpers here deliberately re-derive geometry from first principles
(scalar code, different formulations) so the tests act as oracles for the
vectorized implementations rather than mirrors of them.
"""

import math

import numpy as np
import pytest

from raceline import geometry, synth


def ccw(a, b, c) -> float:
    """Twice the signed area of triangle abc."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_cross(p1, q1, p2, q2) -> bool:
    """Proper crossing test via orientation signs (strict inequalities)."""
    d1 = ccw(p2, q2, p1)
    d2 = ccw(p2, q2, q1)
    d3 = ccw(p1, q1, p2)
    d4 = ccw(p1, q1, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and \
        d1 != 0 and d2 != 0 and d3 != 0 and d4 != 0


def brute_force_crossings(ns: geometry.NormalSet) -> int:
    """O(n^2) scalar count of properly crossing normal pairs."""
    n = len(ns)
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if segments_cross(ns.left_ends[i], ns.right_ends[i],
                              ns.left_ends[j], ns.right_ends[j]):
                count += 1
    return count


def walk_polyline(points: np.ndarray, closed: bool, distances) -> np.ndarray:
    """Scalar arc-length walk along a polyline; independent of np.interp."""
    pts = [tuple(p) for p in points]
    if closed:
        pts.append(pts[0])
    out = []
    for target in distances:
        s = 0.0
        placed = False
        for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
            seg = math.hypot(x1 - x0, y1 - y0)
            if s + seg >= target - 1e-12:
                t = (target - s) / seg
                out.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0)))
                placed = True
                break
            s += seg
        if not placed:
            out.append(pts[-1])
    return np.array(out)


def circumradius_curvature(p0, p1, p2) -> float:
    """|curvature| from side lengths and Heron's area (R = abc / 4A)."""
    a = math.dist(p1, p2)
    b = math.dist(p0, p2)
    c = math.dist(p0, p1)
    s = (a + b + c) / 2.0
    area_sq = s * (s - a) * (s - b) * (s - c)
    if area_sq <= 0.0:
        return 0.0
    return 4.0 * math.sqrt(area_sq) / (a * b * c)


@pytest.fixture(scope="session")
def straight_track():
    pts = np.column_stack([np.linspace(0.0, 100.0, 21), np.zeros(21)])
    from raceline.trackio import Track
    return Track(name="straight", points=pts,
                 halfwidth_left=np.full(21, 5.0),
                 halfwidth_right=np.full(21, 5.0), closed=False)


@pytest.fixture(scope="session")
def annulus_normals():
    track = geometry.resample_centerline(synth.annulus_track(), 5.0)
    return geometry.build_normals(track)


@pytest.fixture(scope="session")
def wavy_normals():
    track = geometry.resample_centerline(synth.random_track(11), 5.0)
    return geometry.resolve_intersections(geometry.build_normals(track))
