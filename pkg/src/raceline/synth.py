"""Synthetic closed circuits for tests, benchmarks and demo datasets.

Shapes are emitted as raw (unresampled) :class:`~raceline.trackio.Track`
objects at a point density fine enough that 5 m resampling stays within a
few centimetres of the intended curve.
"""

from __future__ import annotations

import math

import numpy as np

from .trackio import Track


def circle_track(radius: float = 50.0, halfwidth: float = 5.0, n_points: int = 720,
                 ccw: bool = True, name: str = "circle") -> Track:
    """A circular lap.  Counterclockwise travel puts the left boundary inside."""
    phi = 2.0 * math.pi * np.arange(n_points) / n_points
    if not ccw:
        phi = -phi
    pts = radius * np.column_stack([np.cos(phi), np.sin(phi)])
    ones = np.full(n_points, float(halfwidth))
    return Track(name=name, points=pts, halfwidth_left=ones, halfwidth_right=ones.copy())


def annulus_track(r_inner: float = 45.0, r_outer: float = 55.0, n_points: int = 720,
                  name: str = "annulus") -> Track:
    """Counterclockwise ring between two radii (inner boundary on the left)."""
    radius = (r_inner + r_outer) / 2.0
    half = (r_outer - r_inner) / 2.0
    return circle_track(radius=radius, halfwidth=half, n_points=n_points, ccw=True, name=name)


def _arc(center: np.ndarray, radius: float, phi0: float, phi1: float, n: int) -> np.ndarray:
    phi = np.linspace(phi0, phi1, n, endpoint=False)
    return center + radius * np.column_stack([np.cos(phi), np.sin(phi)])


def oval_track(straight: float = 120.0, radius: float = 40.0, halfwidth: float = 6.0,
               points_per_metre: float = 1.0, name: str = "oval") -> Track:
    """Two straights joined by half-circle ends, traversed counterclockwise."""
    n_straight = max(int(straight * points_per_metre), 2)
    n_arc = max(int(math.pi * radius * points_per_metre), 8)
    bottom = np.column_stack([np.linspace(0.0, straight, n_straight, endpoint=False),
                              np.zeros(n_straight)])
    right_arc = _arc(np.array([straight, radius]), radius, -math.pi / 2.0, math.pi / 2.0, n_arc)
    top = np.column_stack([np.linspace(straight, 0.0, n_straight, endpoint=False),
                           np.full(n_straight, 2.0 * radius)])
    left_arc = _arc(np.array([0.0, radius]), radius, math.pi / 2.0, 3.0 * math.pi / 2.0, n_arc)
    pts = np.vstack([bottom, right_arc, top, left_arc])
    ones = np.full(pts.shape[0], float(halfwidth))
    return Track(name=name, points=pts, halfwidth_left=ones, halfwidth_right=ones.copy())


def hairpin_track(hairpin_radius: float = 4.0, inner_halfwidth: float = 6.0,
                  outer_halfwidth: float = 6.0, straight: float = 150.0,
                  points_per_metre: float = 2.0, name: str = "hairpin") -> Track:
    """A paperclip loop whose end hairpins are tighter than the half-width.

    Two parallel straights joined by half-circles of ``hairpin_radius``.
    Travelling counterclockwise the inside of each hairpin is on the left,
    so with ``inner_halfwidth > hairpin_radius`` the raw normals there are
    guaranteed to cross and exercise the pseudo-normal repair.
    """
    track = oval_track(straight=straight, radius=hairpin_radius,
                       points_per_metre=points_per_metre, name=name)
    hl = np.full(len(track), float(inner_halfwidth))
    hr = np.full(len(track), float(outer_halfwidth))
    return Track(name=name, points=track.points, halfwidth_left=hl,
                 halfwidth_right=hr)


def random_track(seed: int, base_radius: float = 90.0, n_harmonics: int = 5,
                 roughness: float = 0.18, halfwidth_range: tuple[float, float] = (4.0, 6.0),
                 n_points: int = 720, name: str | None = None) -> Track:
    """A smooth random closed circuit from a Fourier-perturbed circle.

    The radius profile is ``R(phi) = R0 (1 + sum_k a_k cos(k phi + psi_k))``
    with harmonics 2..n_harmonics+1 and amplitudes scaled so the curve stays
    simple (non self-intersecting) and its curvature radius stays above the
    half-width.  Deterministic in ``seed``.
    """
    rng = np.random.default_rng(seed)
    phi = 2.0 * math.pi * np.arange(n_points) / n_points
    r = np.full(n_points, 1.0)
    for k in range(2, 2 + n_harmonics):
        amp = roughness * rng.uniform(0.2, 1.0) / k
        psi = rng.uniform(0.0, 2.0 * math.pi)
        r += amp * np.cos(k * phi + psi)
    r *= base_radius
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    lo, hi = halfwidth_range
    hl = np.full(n_points, rng.uniform(lo, hi))
    hr = np.full(n_points, rng.uniform(lo, hi))
    return Track(name=name or f"rand{seed:04d}", points=pts,
                 halfwidth_left=hl, halfwidth_right=hr)


def corpus(n_tracks: int, seed: int = 0, **kwargs) -> list[Track]:
    """A deterministic family of random circuits, one per sub-seed."""
    return [random_track(seed * 10_000 + i, **kwargs) for i in range(n_tracks)]
