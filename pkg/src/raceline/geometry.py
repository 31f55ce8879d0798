"""Track geometry: resampling, normals, pseudo-normal repair, waypoints.

The processing pipeline turns a raw centerline into an ordered set of
boundary-spanning normal segments:

1. :func:`resample_centerline` puts points on the centerline at a fixed
   arc-length interval (closed loops are adjusted so the lap closes exactly).
2. :func:`build_normals` erects one perpendicular segment per point, spanning
   the drivable width.
3. :func:`resolve_intersections` tilts normals at tight corners until no two
   segments cross, recording each tilt angle.

Waypoints parameterize a racing line as one fraction per normal, 0 at the
left boundary and 1 at the right; :func:`waypoint_to_world` and
:func:`project_line_to_waypoints` convert between the two views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BoundariesCross,
    DegenerateTangent,
    DegenerateTrack,
    LengthMismatch,
    MultipleIntersections,
    NoIntersection,
    OutOfRange,
    Unresolvable,
    ZeroSpacing,
)
from .trackio import Track

DEFAULT_MAX_TILT = math.radians(45.0)
DEFAULT_TILT_STEP = math.radians(1.0)


@dataclass(frozen=True)
class Normal:
    """One boundary-spanning segment perpendicular(ish) to the centerline.

    ``theta`` is the signed tilt away from the true perpendicular (zero
    unless the normal was adjusted by intersection repair) and ``alpha`` the
    signed heading change of the centerline since the previous station.
    """

    center: np.ndarray
    left_end: np.ndarray
    right_end: np.ndarray
    length_l: float
    theta: float
    alpha: float


@dataclass(frozen=True)
class NormalSet:
    """Ordered normals for one track, stored as flat arrays.

    ``centers``, ``left_ends`` and ``right_ends`` are (N, 2); ``lengths``,
    ``theta`` and ``alpha`` are (N,).  ``cyclic`` marks closed laps, where
    index arithmetic wraps modulo N.
    """

    centers: np.ndarray
    left_ends: np.ndarray
    right_ends: np.ndarray
    lengths: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray
    spacing: float
    cyclic: bool

    def __len__(self) -> int:
        return self.centers.shape[0]

    def normal(self, i: int) -> Normal:
        return Normal(
            center=self.centers[i],
            left_end=self.left_ends[i],
            right_end=self.right_ends[i],
            length_l=float(self.lengths[i]),
            theta=float(self.theta[i]),
            alpha=float(self.alpha[i]),
        )

    @property
    def normals(self) -> list[Normal]:
        return [self.normal(i) for i in range(len(self))]


def _polyline_arclength(points: np.ndarray, closed: bool) -> tuple[np.ndarray, np.ndarray]:
    """Node coordinates and cumulative arc length, with the wrap appended."""
    pts = np.asarray(points, dtype=float)
    if closed:
        pts = np.vstack([pts, pts[:1]])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    return pts, s


def resample_centerline(track: Track, spacing: float) -> Track:
    """Resample a track centerline at uniform arc-length spacing.

    Closed tracks use the adjusted spacing ``perimeter / round(perimeter /
    spacing)`` so the loop closes exactly; open tracks keep both endpoints
    and use ``length / round(length / spacing)``.  Half-widths are linearly
    interpolated by arc length.
    """
    if spacing <= 0.0:
        raise ZeroSpacing(f"spacing must be positive, got {spacing}")
    pts, s = _polyline_arclength(track.points, track.closed)
    total = s[-1]
    if track.closed:
        n = int(round(total / spacing))
        if n < 3:
            raise DegenerateTrack(
                f"perimeter {total:.3f} m supports only {n} stations at {spacing} m"
            )
        s_new = total * np.arange(n) / n
    else:
        n_seg = max(int(round(total / spacing)), 1)
        if n_seg < 2:
            raise DegenerateTrack(
                f"length {total:.3f} m supports only {n_seg + 1} stations at {spacing} m"
            )
        s_new = np.linspace(0.0, total, n_seg + 1)
    hl = track.halfwidth_left
    hr = track.halfwidth_right
    if track.closed:
        hl = np.concatenate([hl, hl[:1]])
        hr = np.concatenate([hr, hr[:1]])
    return Track(
        name=track.name,
        points=np.column_stack([np.interp(s_new, s, pts[:, 0]), np.interp(s_new, s, pts[:, 1])]),
        halfwidth_left=np.interp(s_new, s, hl),
        halfwidth_right=np.interp(s_new, s, hr),
        closed=track.closed,
    )


def _tangents(points: np.ndarray, cyclic: bool) -> np.ndarray:
    """Unit tangents by central differences (one-sided at open ends)."""
    n = points.shape[0]
    diff = np.empty_like(points)
    if cyclic:
        diff = np.roll(points, -1, axis=0) - np.roll(points, 1, axis=0)
    else:
        diff[1:-1] = points[2:] - points[:-2]
        diff[0] = points[1] - points[0]
        diff[-1] = points[-1] - points[-2]
    norms = np.linalg.norm(diff, axis=1)
    if np.any(norms <= 1e-12):
        bad = int(np.argmax(norms <= 1e-12))
        raise DegenerateTangent(f"coincident neighbours around station {bad}")
    return diff / norms[:, None]


def _signed_angle(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Signed angle from u to v, rowwise, in (-pi, pi]."""
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    dot = u[:, 0] * v[:, 0] + u[:, 1] * v[:, 1]
    return np.arctan2(cross, dot)


def build_normals(track: Track) -> NormalSet:
    """Erect boundary-spanning normals on an (already resampled) track.

    Left is the direction of travel rotated +90 degrees (counterclockwise).
    ``alpha[i]`` is the signed turn of the tangent from station i-1 to i
    (wrapping on closed tracks, zero at the first station of an open one);
    ``theta`` is zero everywhere until intersection repair.
    """
    pts = track.points
    t = _tangents(pts, track.closed)
    left_dir = np.column_stack([-t[:, 1], t[:, 0]])
    left_ends = pts + track.halfwidth_left[:, None] * left_dir
    right_ends = pts - track.halfwidth_right[:, None] * left_dir
    if track.closed:
        alpha = _signed_angle(np.roll(t, 1, axis=0), t)
    else:
        alpha = np.concatenate([[0.0], _signed_angle(t[:-1], t[1:])])
    seg = np.linalg.norm(pts - np.roll(pts, 1, axis=0), axis=1)
    spacing = float(np.mean(seg)) if track.closed else float(np.mean(seg[1:]))
    return NormalSet(
        centers=pts.copy(),
        left_ends=left_ends,
        right_ends=right_ends,
        lengths=np.linalg.norm(right_ends - left_ends, axis=1),
        theta=np.zeros(len(track)),
        alpha=alpha,
        spacing=spacing,
        cyclic=track.closed,
    )


def _segment_intersections(p: np.ndarray, q: np.ndarray, skip_adjacent: bool = False,
                           cyclic: bool = False) -> np.ndarray:
    """All properly crossing pairs among segments p[i]->q[i].

    Returns an (M, 4) array of rows (i, j, u_i, u_j) with i < j, where u_i
    and u_j are the intersection fractions along each segment.  Touching
    endpoints do not count; crossings require both parameters strictly
    inside (0, 1).  Pair enumeration is chunked to bound memory.
    """
    n = p.shape[0]
    d = q - p
    found = []
    ii, jj = np.triu_indices(n, k=1)
    if skip_adjacent:
        adj = jj - ii == 1
        if cyclic:
            adj |= (ii == 0) & (jj == n - 1)
        ii, jj = ii[~adj], jj[~adj]
    chunk = 2_000_000
    for lo in range(0, ii.shape[0], chunk):
        a, b = ii[lo:lo + chunk], jj[lo:lo + chunk]
        r = d[a]
        s = d[b]
        qp = p[b] - p[a]
        denom = r[:, 0] * s[:, 1] - r[:, 1] * s[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / denom
            v = (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / denom
        hit = (denom != 0.0) & (u > 0.0) & (u < 1.0) & (v > 0.0) & (v < 1.0)
        if np.any(hit):
            found.append(np.column_stack([a[hit], b[hit], u[hit], v[hit]]))
    if not found:
        return np.empty((0, 4))
    return np.vstack(found)


def count_intersections(ns: NormalSet) -> int:
    """Number of properly crossing normal pairs (0 after successful repair)."""
    return _segment_intersections(ns.left_ends, ns.right_ends).shape[0]


def _ray_polyline_hit(origin: np.ndarray, direction: np.ndarray,
                      pts: np.ndarray, closed: bool) -> np.ndarray | None:
    """Nearest intersection of a ray with a polyline, or None."""
    a = pts
    b = np.roll(pts, -1, axis=0) if closed else pts[1:]
    if not closed:
        a = pts[:-1]
    e = b - a
    denom = direction[0] * e[:, 1] - direction[1] * e[:, 0]
    ao = a - origin
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ray = (ao[:, 0] * e[:, 1] - ao[:, 1] * e[:, 0]) / denom
        t_seg = (ao[:, 0] * direction[1] - ao[:, 1] * direction[0]) / denom
    ok = (denom != 0.0) & (t_ray > 1e-12) & (t_seg >= 0.0) & (t_seg <= 1.0)
    if not np.any(ok):
        return None
    t = np.min(t_ray[ok])
    return origin + t * direction


def _rotate(vec: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * vec[0] - s * vec[1], s * vec[0] + c * vec[1]])


def resolve_intersections(ns: NormalSet, max_tilt: float = DEFAULT_MAX_TILT,
                          step: float = DEFAULT_TILT_STEP) -> NormalSet:
    """Tilt intersecting normals into non-crossing pseudo-normals.

    Greedy repair: while any two normals cross, the most deeply crossing
    pair is tilted apart by ``step`` radians each (the earlier normal swings
    its crossing side backward, the later one forward) and the tilted
    endpoints are re-projected onto the track boundaries.  ``theta`` records
    the accumulated signed tilt.  Normals never involved in a crossing are
    returned bit-identical.

    Raises :class:`Unresolvable` if crossings persist once every involved
    normal is tilted to ``max_tilt``.
    """
    n = len(ns)
    left = ns.left_ends.copy()
    right = ns.right_ends.copy()
    theta = ns.theta.copy()
    lengths = ns.lengths.copy()
    # boundary polylines of the unrepaired set, used for endpoint re-projection
    left_boundary = ns.left_ends.copy()
    right_boundary = ns.right_ends.copy()
    base_left_dir = (ns.left_ends - ns.centers)
    base_left_dir = base_left_dir / np.linalg.norm(base_left_dir, axis=1)[:, None]

    max_rounds = max(4 * n * int(math.ceil(max_tilt / step)), 64)
    for _ in range(max_rounds):
        hits = _segment_intersections(left, right)
        if hits.shape[0] == 0:
            return replace(ns, left_ends=left, right_ends=right, theta=theta, lengths=lengths)
        depth = np.minimum.reduce([hits[:, 2], 1.0 - hits[:, 2], hits[:, 3], 1.0 - hits[:, 3]])
        worst = hits[int(np.argmax(depth))]
        i, j, ui, uj = int(worst[0]), int(worst[1]), worst[2], worst[3]
        if ns.cyclic and (j - i) > n - (j - i):
            i, j, ui, uj = j, i, uj, ui  # j precedes i across the lap seam
        progressed = False
        for k, u, direction in ((i, ui, +1.0), (j, uj, -1.0)):
            # crossing on the left half swings backward by a CCW tilt of the
            # earlier normal; all other cases follow by symmetry
            u_center = np.linalg.norm(ns.centers[k] - left[k]) / max(lengths[k], 1e-12)
            sign = direction if u < u_center else -direction
            new_theta = theta[k] + sign * step
            if abs(new_theta) > max_tilt:
                continue
            tilted = _rotate(base_left_dir[k], new_theta)
            new_left = _ray_polyline_hit(ns.centers[k], tilted, left_boundary, ns.cyclic)
            new_right = _ray_polyline_hit(ns.centers[k], -tilted, right_boundary, ns.cyclic)
            if new_left is None or new_right is None:
                continue
            theta[k] = new_theta
            left[k] = new_left
            right[k] = new_right
            lengths[k] = np.linalg.norm(new_right - new_left)
            progressed = True
        if not progressed:
            raise Unresolvable(
                f"normals {i} and {j} still cross with both tilts at the {math.degrees(max_tilt):.0f} degree limit"
            )
    raise Unresolvable("intersection repair did not converge")


def waypoint_to_world(n: Normal, w: float) -> np.ndarray:
    """World coordinates of fraction ``w`` along a normal (0=left, 1=right)."""
    if not 0.0 <= w <= 1.0:
        raise OutOfRange(f"waypoint fraction {w} outside [0, 1]")
    return n.left_end + w * (n.right_end - n.left_end)


def waypoints_to_world(ns: NormalSet, w: np.ndarray) -> np.ndarray:
    """Vectorized :func:`waypoint_to_world` over a whole normal set."""
    w = np.asarray(w, dtype=float)
    if w.shape != (len(ns),):
        raise LengthMismatch(f"expected {len(ns)} fractions, got {w.shape}")
    if np.any(w < 0.0) or np.any(w > 1.0):
        raise OutOfRange("waypoint fractions outside [0, 1]")
    return ns.left_ends + w[:, None] * (ns.right_ends - ns.left_ends)


def project_line_to_waypoints(ns: NormalSet, line: np.ndarray) -> np.ndarray:
    """Waypoint fractions where a polyline crosses each normal.

    ``line`` is an (M, 2) polyline treated as closed (implicit wrap).  Each
    normal must be crossed exactly once; duplicate crossings within 1e-9 of
    each other (a polyline vertex on the normal) collapse to one.
    """
    line = np.asarray(line, dtype=float)
    if line.ndim != 2 or line.shape[1] != 2 or line.shape[0] < 2:
        raise NoIntersection("line must be an (M, 2) polyline with M >= 2")
    a = line
    b = np.roll(line, -1, axis=0)
    e = b - a
    w = np.empty(len(ns))
    for i in range(len(ns)):
        p = ns.left_ends[i]
        d = ns.right_ends[i] - p
        denom = d[0] * e[:, 1] - d[1] * e[:, 0]
        ap = a - p
        with np.errstate(divide="ignore", invalid="ignore"):
            u = (ap[:, 0] * e[:, 1] - ap[:, 1] * e[:, 0]) / denom
            v = (ap[:, 0] * d[1] - ap[:, 1] * d[0]) / denom
        # vertex-on-normal hits appear once per adjacent segment with the same
        # u; the tolerance window plus the u-dedup below collapses them
        ok = (denom != 0.0) & (u >= -1e-12) & (u <= 1.0 + 1e-12) & (v >= -1e-9) & (v <= 1.0 + 1e-9)
        cand = np.sort(u[ok])
        cand = cand[np.concatenate([[True], np.diff(cand) > 1e-9])] if cand.size else cand
        if cand.size == 0:
            raise NoIntersection(f"line misses normal {i}")
        if cand.size > 1:
            raise MultipleIntersections(f"line crosses normal {i} {cand.size} times")
        w[i] = min(max(cand[0], 0.0), 1.0)
    return w


def _polylines_cross(first: np.ndarray, second: np.ndarray) -> bool:
    """True if any closed segment of one polyline properly crosses the other."""
    a1, b1 = first, np.roll(first, -1, axis=0)
    a2, b2 = second, np.roll(second, -1, axis=0)
    for i in range(a1.shape[0]):
        r = b1[i] - a1[i]
        e = b2 - a2
        qp = a2 - a1[i]
        denom = r[0] * e[:, 1] - r[1] * e[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = (qp[:, 0] * e[:, 1] - qp[:, 1] * e[:, 0]) / denom
            v = (qp[:, 0] * r[1] - qp[:, 1] * r[0]) / denom
        if np.any((denom != 0.0) & (u > 0.0) & (u < 1.0) & (v > 0.0) & (v < 1.0)):
            return True
    return False


def _nearest_on_polyline(points: np.ndarray, poly: np.ndarray, closed: bool = True) -> np.ndarray:
    """Closest point on a polyline for each query point."""
    a = poly
    b = np.roll(poly, -1, axis=0) if closed else poly[1:]
    if not closed:
        a = poly[:-1]
    e = b - a
    ee = np.einsum("ij,ij->i", e, e)
    out = np.empty_like(points)
    for k in range(points.shape[0]):
        ap = points[k] - a
        t = np.clip(np.einsum("ij,ij->i", ap, e) / np.maximum(ee, 1e-300), 0.0, 1.0)
        proj = a + t[:, None] * e
        d2 = np.einsum("ij,ij->i", points[k] - proj, points[k] - proj)
        out[k] = proj[int(np.argmin(d2))]
    return out


def reconstruct_from_boundaries(inner: np.ndarray, outer: np.ndarray,
                                name: str = "reconstructed",
                                samples: int = 1024) -> Track:
    """Build a centerline+widths Track from two closed boundary polylines.

    The outer boundary is densely resampled; each sample is matched to its
    nearest point on the inner boundary, the midpoints become the centerline
    and half the correspondence distances become the half-widths (equal on
    both sides).
    """
    inner = np.asarray(inner, dtype=float)
    outer = np.asarray(outer, dtype=float)
    for poly in (inner, outer):
        if poly.ndim != 2 or poly.shape[1] != 2 or poly.shape[0] < 3:
            raise DegenerateTrack("boundaries must be (N, 2) polylines with N >= 3")
    if _polylines_cross(inner, outer):
        raise BoundariesCross("inner and outer boundaries intersect")
    pts, s = _polyline_arclength(outer, closed=True)
    s_new = s[-1] * np.arange(samples) / samples
    dense = np.column_stack([np.interp(s_new, s, pts[:, 0]), np.interp(s_new, s, pts[:, 1])])
    matched = _nearest_on_polyline(dense, inner, closed=True)
    dist = np.linalg.norm(dense - matched, axis=1)
    if np.any(dist <= 1e-9):
        raise BoundariesCross("boundaries touch; track width vanishes")
    half = dist / 2.0
    return Track(
        name=name,
        points=(dense + matched) / 2.0,
        halfwidth_left=half,
        halfwidth_right=half.copy(),
        closed=True,
    )


def discrete_curvature(points: np.ndarray, cyclic: bool = True) -> np.ndarray:
    """Unsigned curvature of a point sequence via circumscribed circles.

    ``kappa[i]`` is the inverse circumradius of (p[i-1], p[i], p[i+1]);
    collinear triples give zero.  Open sequences have zero curvature at both
    ends.
    """
    p = np.asarray(points, dtype=float)
    prv = np.roll(p, 1, axis=0)
    nxt = np.roll(p, -1, axis=0)
    a = p - prv
    b = nxt - p
    e = nxt - prv
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    denom = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1) * np.linalg.norm(e, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(denom > 0.0, 2.0 * np.abs(cross) / denom, 0.0)
    if not cyclic:
        kappa[0] = 0.0
        kappa[-1] = 0.0
    return kappa
