"""Parse and serialize tracks, racing lines and related text formats.

Canonical on-disk form of a track is the centerline-plus-widths CSV
``x_m,y_m,w_tr_right_m,w_tr_left_m`` with ``#`` comment lines.  Tracks are
closed laps by default; a ``# open`` comment line marks an open track.
Racing lines are stored as ``index,x_m,y_m,w_frac`` rows.

All floats are written with :func:`repr`, which round-trips every finite
double exactly, so ``parse(write(x))`` reproduces values bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateTrack, EmptyLine, MalformedRow, NonPositiveWidth

MIN_POINT_SPACING = 1e-9  # metres; closer neighbours are rejected as coincident


@dataclass(frozen=True)
class Track:
    """A circuit centerline with per-point half-widths.

    ``points`` is an (N, 2) array of metres.  ``halfwidth_left`` and
    ``halfwidth_right`` are distances from the centerline to the boundary on
    the left/right of the direction of travel.  For closed tracks the wrap
    from the last point back to the first is implicit; the first point is
    never duplicated at the end.
    """

    name: str
    points: np.ndarray
    halfwidth_left: np.ndarray
    halfwidth_right: np.ndarray
    closed: bool = True

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        hl = np.asarray(self.halfwidth_left, dtype=float)
        hr = np.asarray(self.halfwidth_right, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "halfwidth_left", hl)
        object.__setattr__(self, "halfwidth_right", hr)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DegenerateTrack("points must be an (N, 2) array")
        n = pts.shape[0]
        if n < 3:
            raise DegenerateTrack(f"track needs at least 3 points, got {n}")
        if hl.shape != (n,) or hr.shape != (n,):
            raise DegenerateTrack("half-width arrays must match point count")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(hl)) and np.all(np.isfinite(hr))):
            raise DegenerateTrack("track contains non-finite values")
        if np.any(hl <= 0.0) or np.any(hr <= 0.0):
            raise NonPositiveWidth("all half-widths must be positive")
        seg = np.diff(pts, axis=0)
        if self.closed:
            seg = np.vstack([seg, pts[0] - pts[-1]])
        if np.any(np.hypot(seg[:, 0], seg[:, 1]) <= MIN_POINT_SPACING):
            raise DegenerateTrack("consecutive track points coincide")

    def __len__(self) -> int:
        return self.points.shape[0]

    def renamed(self, name: str) -> "Track":
        return replace(self, name=name)


@dataclass(frozen=True)
class RacingLine:
    """A racing line on a set of normals: fractions plus world coordinates.

    ``w`` holds one fraction in [0, 1] per normal (0 = left boundary,
    1 = right boundary); ``points`` the corresponding world coordinates.
    ``source`` records where the line came from (``predicted``, ``oracle``
    or ``external``).
    """

    w: np.ndarray
    points: np.ndarray
    source: str = "external"

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "points", pts)
        if w.ndim != 1 or pts.shape != (w.shape[0], 2):
            raise EmptyLine("w must be (N,) and points (N, 2) with equal N")

    def __len__(self) -> int:
        return self.w.shape[0]


def _float(token: str, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise MalformedRow(f"line {line_no}: non-numeric field {token!r}") from None


def parse_track_csv(text: str, name: str = "track") -> Track:
    """Parse a ``x_m,y_m,w_tr_right_m,w_tr_left_m`` CSV into a Track.

    ``#`` lines are comments; ``# open`` marks an open (non-loop) track and
    ``# name: <str>`` overrides the track name.  Accepts LF or CRLF input.

    Raises MalformedRow, DegenerateTrack or NonPositiveWidth on bad input.
    """
    rows = []
    closed = True
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comment = line[1:].strip()
            if comment == "open":
                closed = False
            elif comment.startswith("name:"):
                name = comment[5:].strip()
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 4:
            raise MalformedRow(f"line {line_no}: expected 4 fields, got {len(fields)}")
        rows.append([_float(f, line_no) for f in fields])
    if len(rows) < 3:
        raise DegenerateTrack(f"track file has {len(rows)} data rows, need at least 3")
    data = np.array(rows, dtype=float)
    return Track(
        name=name,
        points=data[:, 0:2],
        halfwidth_right=data[:, 2],
        halfwidth_left=data[:, 3],
        closed=closed,
    )


def write_track_csv(track: Track) -> str:
    """Serialize a Track; inverse of :func:`parse_track_csv`."""
    lines = [f"# name: {track.name}", "# x_m,y_m,w_tr_right_m,w_tr_left_m"]
    if not track.closed:
        lines.append("# open")
    for (x, y), hr, hl in zip(track.points, track.halfwidth_right, track.halfwidth_left):
        lines.append(f"{float(x)!r},{float(y)!r},{float(hr)!r},{float(hl)!r}")
    return "\n".join(lines) + "\n"


def write_raceline_csv(line: RacingLine) -> str:
    """Serialize a racing line as ``index,x_m,y_m,w_frac`` rows."""
    if len(line) == 0:
        raise EmptyLine("racing line has no waypoints")
    out = [f"# source: {line.source}", "# index,x_m,y_m,w_frac"]
    for i, ((x, y), w) in enumerate(zip(line.points, line.w)):
        out.append(f"{i},{float(x)!r},{float(y)!r},{float(w)!r}")
    return "\n".join(out) + "\n"


def parse_raceline_csv(text: str) -> RacingLine:
    """Parse ``index,x_m,y_m,w_frac`` rows back into a RacingLine."""
    source = "external"
    rows = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            comment = line[1:].strip()
            if comment.startswith("source:"):
                source = comment[7:].strip()
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 4:
            raise MalformedRow(f"line {line_no}: expected 4 fields, got {len(fields)}")
        rows.append([_float(f, line_no) for f in fields])
    if not rows:
        raise EmptyLine("racing line file has no data rows")
    data = np.array(rows, dtype=float)
    order = np.argsort(data[:, 0], kind="stable")
    data = data[order]
    return RacingLine(w=data[:, 3], points=data[:, 1:3], source=source)
