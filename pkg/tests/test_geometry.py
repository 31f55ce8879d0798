import math

import numpy as np
import pytest

from raceline import synth
from raceline.dataset import flip_track
from raceline.errors import (
    BoundariesCross,
    DegenerateTrack,
    MultipleIntersections,
    NoIntersection,
    OutOfRange,
    ZeroSpacing,
)
from raceline.geometry import (
    Normal,
    build_normals,
    count_intersections,
    discrete_curvature,
    project_line_to_waypoints,
    reconstruct_from_boundaries,
    resample_centerline,
    resolve_intersections,
    waypoint_to_world,
    waypoints_to_world,
)
from raceline.trackio import Track

from conftest import brute_force_crossings, walk_polyline


class TestResample:
    def test_straight_segment(self, straight_track):
        out = resample_centerline(straight_track, 5.0)
        assert len(out) == 21
        np.testing.assert_allclose(out.points[:, 0], np.arange(0.0, 101.0, 5.0), atol=1e-12)
        np.testing.assert_allclose(out.points[:, 1], 0.0, atol=1e-12)
        np.testing.assert_allclose(out.halfwidth_left, 5.0)

    def test_circle_against_arclength_walk(self):
        track = synth.circle_track(radius=50.0, n_points=720)
        out = resample_centerline(track, 5.0)
        perimeter = 720 * 2 * 50.0 * math.sin(math.pi / 720)
        n_expect = round(perimeter / 5.0)
        assert len(out) == 63 == n_expect
        spacing = np.linalg.norm(np.diff(np.vstack([out.points, out.points[:1]]), axis=0), axis=1)
        assert np.allclose(spacing, spacing[0], atol=1e-9)  # uniform
        # independent scalar walk at the same stations
        targets = [perimeter * k / n_expect for k in range(n_expect)]
        expected = walk_polyline(track.points, closed=True, distances=targets)
        np.testing.assert_allclose(out.points, expected, atol=1e-9)

    def test_widths_interpolated_by_arclength(self):
        pts = np.array([[0.0, 0.0], [50.0, 0.0], [100.0, 0.0]])
        track = Track(name="taper", points=pts,
                      halfwidth_left=np.array([2.0, 4.0, 6.0]),
                      halfwidth_right=np.array([6.0, 4.0, 2.0]), closed=False)
        out = resample_centerline(track, 25.0)
        np.testing.assert_allclose(out.halfwidth_left, [2.0, 3.0, 4.0, 5.0, 6.0])
        np.testing.assert_allclose(out.halfwidth_right, [6.0, 5.0, 4.0, 3.0, 2.0])

    def test_too_short_and_zero_spacing(self, straight_track):
        with pytest.raises(ZeroSpacing):
            resample_centerline(straight_track, 0.0)
        with pytest.raises(DegenerateTrack):
            resample_centerline(synth.circle_track(radius=1.0, n_points=16), 5.0)
        with pytest.raises(DegenerateTrack):
            Track(name="2pt", points=np.array([[0.0, 0.0], [1.0, 0.0]]),
                  halfwidth_left=np.ones(2), halfwidth_right=np.ones(2))

    def test_no_shortcutting(self):
        track = synth.random_track(5)
        out = resample_centerline(track, 5.0)
        # every resampled point lies on the input polyline (distance << spacing)
        from raceline.geometry import _nearest_on_polyline
        nearest = _nearest_on_polyline(out.points, track.points, closed=True)
        assert np.linalg.norm(out.points - nearest, axis=1).max() < 5.0


class TestBuildNormals:
    def test_straight(self, straight_track):
        ns = build_normals(resample_centerline(straight_track, 5.0))
        np.testing.assert_allclose(ns.lengths, 10.0, atol=1e-12)
        np.testing.assert_array_equal(ns.theta, 0.0)
        np.testing.assert_allclose(ns.alpha, 0.0, atol=1e-12)
        # left of +x travel is +y
        np.testing.assert_allclose(ns.left_ends[:, 1], 5.0, atol=1e-12)
        np.testing.assert_allclose(ns.right_ends[:, 1], -5.0, atol=1e-12)

    def test_circle_chord_angles(self):
        # 630 input vertices put every 5 m station exactly on a vertex, so
        # the stations form a regular 63-gon and the turn per step is exact
        ns = build_normals(resample_centerline(synth.circle_track(radius=50.0, n_points=630), 5.0))
        n = len(ns)
        assert n == 63
        np.testing.assert_allclose(ns.alpha, 2 * math.pi / n, rtol=1e-9)
        assert np.all(ns.alpha > 0)  # counterclockwise
        # radial normals: left end inside, right end outside
        np.testing.assert_allclose(np.linalg.norm(ns.left_ends, axis=1), 45.0, atol=0.01)
        np.testing.assert_allclose(np.linalg.norm(ns.right_ends, axis=1), 55.0, atol=0.01)

    def test_chord_angle_matches_asin_form(self):
        ns = build_normals(resample_centerline(synth.circle_track(radius=50.0, n_points=630), 5.0))
        chord = np.linalg.norm(ns.centers[1] - ns.centers[0])
        # polygon circumradius, then the chord-angle identity
        r_poly = chord / (2 * math.sin(math.pi / len(ns)))
        expected = 2 * math.asin(chord / (2 * r_poly))
        np.testing.assert_allclose(ns.alpha, expected, rtol=1e-9)

    def test_mirror_negates_alpha_and_swaps_ends(self):
        track = resample_centerline(synth.random_track(2), 5.0)
        mirrored = flip_track(track)
        ns = build_normals(track)
        ms = build_normals(mirrored)
        np.testing.assert_array_equal(ms.alpha, -ns.alpha)
        flip = np.array([1.0, -1.0])
        np.testing.assert_array_equal(ms.left_ends, ns.right_ends * flip)
        np.testing.assert_array_equal(ms.right_ends, ns.left_ends * flip)

    def test_alpha_sums_to_two_pi(self):
        for seed in (1, 2, 3):
            track = resample_centerline(synth.random_track(seed), 5.0)
            ns = build_normals(track)
            assert abs(ns.alpha.sum() - 2 * math.pi) < 1e-6
            ms = build_normals(flip_track(track))
            assert abs(ms.alpha.sum() + 2 * math.pi) < 1e-6


class TestResolveIntersections:
    def test_straight_untouched(self, straight_track):
        ns = build_normals(resample_centerline(straight_track, 5.0))
        out = resolve_intersections(ns)
        np.testing.assert_array_equal(out.left_ends, ns.left_ends)
        np.testing.assert_array_equal(out.right_ends, ns.right_ends)
        np.testing.assert_array_equal(out.theta, 0.0)

    def test_circle_untouched(self):
        ns = build_normals(resample_centerline(synth.circle_track(radius=50.0), 5.0))
        out = resolve_intersections(ns)
        np.testing.assert_array_equal(out.theta, 0.0)

    def test_hairpin_repaired(self):
        track = resample_centerline(synth.hairpin_track(), 5.0)
        ns = build_normals(track)
        assert brute_force_crossings(ns) >= 1  # radius 4 m < inner half-width 6 m
        out = resolve_intersections(ns)
        assert brute_force_crossings(out) == 0
        assert count_intersections(out) == 0
        moved = out.theta != 0.0
        assert np.any(moved)
        # untouched normals are bit-identical
        np.testing.assert_array_equal(out.left_ends[~moved], ns.left_ends[~moved])
        np.testing.assert_array_equal(out.right_ends[~moved], ns.right_ends[~moved])
        assert np.abs(out.theta).max() <= math.radians(45.0) + 1e-12


class TestWaypoints:
    def test_endpoints_and_midpoint(self):
        n = Normal(center=np.array([0.0, 0.0]), left_end=np.array([0.0, -5.0]),
                   right_end=np.array([0.0, 5.0]), length_l=10.0, theta=0.0, alpha=0.0)
        np.testing.assert_array_equal(waypoint_to_world(n, 0.0), [0.0, -5.0])
        np.testing.assert_array_equal(waypoint_to_world(n, 1.0), [0.0, 5.0])
        np.testing.assert_array_equal(waypoint_to_world(n, 0.5), [0.0, 0.0])
        np.testing.assert_array_equal(waypoint_to_world(n, 0.25), [0.0, -2.5])
        with pytest.raises(OutOfRange):
            waypoint_to_world(n, 1.5)

    def test_project_left_boundary_gives_zero(self, annulus_normals):
        w = project_line_to_waypoints(annulus_normals, annulus_normals.left_ends)
        np.testing.assert_allclose(w, 0.0, atol=1e-9)

    def test_project_centerline_gives_half(self, annulus_normals):
        w = project_line_to_waypoints(annulus_normals, annulus_normals.centers)
        np.testing.assert_allclose(w, 0.5, atol=1e-9)

    def test_project_circle_on_annulus(self, annulus_normals):
        phi = np.linspace(0.0, 2 * math.pi, 4096, endpoint=False)
        circle = 52.0 * np.column_stack([np.cos(phi), np.sin(phi)])
        w = project_line_to_waypoints(annulus_normals, circle)
        np.testing.assert_allclose(w, 0.7, atol=1e-3)

    def test_project_errors(self, annulus_normals):
        tiny = 5.0 * np.column_stack([np.cos(np.linspace(0, 2 * math.pi, 32, endpoint=False)),
                                      np.sin(np.linspace(0, 2 * math.pi, 32, endpoint=False))])
        with pytest.raises(NoIntersection):
            project_line_to_waypoints(annulus_normals, tiny)
        # circle with a zigzag splice that recrosses the angle-0 normal
        phi = np.linspace(0.05, 2 * math.pi - 0.05, 512)
        circle = 52.0 * np.column_stack([np.cos(phi), np.sin(phi)])
        zigzag = np.array([[53.0, -0.5], [53.0, 0.5], [51.0, 0.4], [51.0, -0.4]])
        with pytest.raises(MultipleIntersections):
            project_line_to_waypoints(annulus_normals, np.vstack([circle, zigzag]))

    def test_world_projection_round_trip(self, wavy_normals):
        rng = np.random.default_rng(3)
        w = rng.uniform(0.05, 0.95, len(wavy_normals))
        pts = waypoints_to_world(wavy_normals, w)
        # invert per normal with an independent dot-product projection
        d = wavy_normals.right_ends - wavy_normals.left_ends
        rel = pts - wavy_normals.left_ends
        back = np.einsum("ij,ij->i", rel, d) / np.einsum("ij,ij->i", d, d)
        err = np.abs(back - w) * wavy_normals.lengths
        assert err.max() < 1e-9


class TestReconstruct:
    def test_concentric_circles(self):
        phi = np.linspace(0.0, 2 * math.pi, 256, endpoint=False)
        inner = 45.0 * np.column_stack([np.cos(phi), np.sin(phi)])
        outer = 55.0 * np.column_stack([np.cos(phi), np.sin(phi)])
        track = reconstruct_from_boundaries(inner, outer)
        radii = np.linalg.norm(track.points, axis=1)
        np.testing.assert_allclose(radii, 50.0, rtol=0.01)
        np.testing.assert_allclose(track.halfwidth_left, 5.0, rtol=0.01)
        np.testing.assert_allclose(track.halfwidth_right, 5.0, rtol=0.01)

    def test_concentric_squares(self):
        def square(half):
            side = np.linspace(-half, half, 64, endpoint=False)
            return np.vstack([
                np.column_stack([side, np.full_like(side, -half)]),
                np.column_stack([np.full_like(side, half), side]),
                np.column_stack([-side, np.full_like(side, half)]),
                np.column_stack([np.full_like(side, -half), -side]),
            ])
        track = reconstruct_from_boundaries(square(40.0), square(50.0))
        # away from corners the midline is the square of half-size 45, width 5+5
        mid = np.abs(track.points)
        on_edge = (mid.max(axis=1) > 44.0) & (mid.min(axis=1) < 30.0)
        assert on_edge.sum() > 100
        np.testing.assert_allclose(mid.max(axis=1)[on_edge], 45.0, atol=0.2)
        np.testing.assert_allclose(track.halfwidth_left[on_edge], 5.0, atol=0.2)

    def test_identical_polylines_cross(self):
        phi = np.linspace(0.0, 2 * math.pi, 64, endpoint=False)
        ring = 45.0 * np.column_stack([np.cos(phi), np.sin(phi)])
        with pytest.raises(BoundariesCross):
            reconstruct_from_boundaries(ring, ring.copy())

    def test_crossing_polylines_rejected(self):
        phi = np.linspace(0.0, 2 * math.pi, 64, endpoint=False)
        a = 45.0 * np.column_stack([np.cos(phi), np.sin(phi)])
        b = np.column_stack([55.0 * np.cos(phi), 30.0 * np.sin(phi)])  # crosses a
        with pytest.raises(BoundariesCross):
            reconstruct_from_boundaries(a, b)


class TestDiscreteCurvature:
    def test_circle(self):
        phi = np.linspace(0.0, 2 * math.pi, 100, endpoint=False)
        pts = 20.0 * np.column_stack([np.cos(phi), np.sin(phi)])
        kappa = discrete_curvature(pts, cyclic=True)
        np.testing.assert_allclose(kappa, 1.0 / 20.0, rtol=1e-3)

    def test_line_is_flat(self):
        pts = np.column_stack([np.arange(10.0), np.zeros(10)])
        np.testing.assert_array_equal(discrete_curvature(pts, cyclic=False), 0.0)
