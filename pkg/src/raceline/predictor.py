"""Full-lap inference: window predictions merged into one racing line.

Every normal is covered by the 2s+1 windows whose output span includes it;
their predictions are averaged in fixed window-index order, so the result
is bit-identical no matter how the windows were evaluated (serially, in
chunks, or in parallel).  Vehicle width is applied after averaging as a
per-normal clamp that keeps the vehicle centre half a width off each
boundary.
"""

from __future__ import annotations

import numpy as np

from .errors import WidthTooLarge
from .geometry import (
    DEFAULT_MAX_TILT,
    DEFAULT_TILT_STEP,
    NormalSet,
    build_normals,
    resample_centerline,
    resolve_intersections,
    waypoints_to_world,
)
from .network import MlpModel, check_pipeline_compat, forward
from .trackio import RacingLine, Track
from .windows import feature_array, window_matrix


def apply_vehicle_width(w: float, length_l: float, vehicle_width: float) -> float:
    """Clamp a waypoint so the vehicle body stays inside the boundaries."""
    if vehicle_width < 0.0:
        raise WidthTooLarge("vehicle width must be non-negative")
    if vehicle_width >= length_l:
        raise WidthTooLarge(
            f"vehicle width {vehicle_width} m does not fit a {length_l} m normal"
        )
    half = vehicle_width / (2.0 * length_l)
    return min(max(w, half), 1.0 - half)


def _apply_vehicle_width_all(w: np.ndarray, lengths: np.ndarray,
                             vehicle_width: float) -> np.ndarray:
    if vehicle_width < 0.0:
        raise WidthTooLarge("vehicle width must be non-negative")
    if vehicle_width > 0.0 and vehicle_width >= float(np.min(lengths)):
        raise WidthTooLarge(
            f"vehicle width {vehicle_width} m does not fit the narrowest normal "
            f"({float(np.min(lengths))} m)"
        )
    half = vehicle_width / (2.0 * lengths)
    return np.minimum(np.maximum(w, half), 1.0 - half)


def window_outputs(model: MlpModel, ns: NormalSet) -> np.ndarray:
    """Raw per-window network outputs, one row per window center."""
    check_pipeline_compat(model)
    _, x = window_matrix(feature_array(ns, model.l_ref), model.foresight, ns.cyclic)
    return forward(model, x)


def average_window_outputs(outputs: np.ndarray, s: int, cyclic: bool,
                           n_normals: int, foresight: int = 0) -> np.ndarray:
    """Merge overlapping window outputs into one fraction per normal.

    Output slot k of window j is the prediction for normal j - s + k.  For
    each normal the 2s+1 contributions are accumulated in ascending window
    order and averaged; ``s`` may be smaller than the trained sampling level
    (the central slots still line up), which is how the smoothing effect of
    larger sampling levels is isolated.

    For cyclic sets one window exists per normal.  For open sets windows
    exist only for centers ``foresight .. n-1-foresight``; normals covered
    by fewer (or zero) windows fall back to the available mean (or the
    centerline).
    """
    n_out = outputs.shape[1]
    mid = (n_out - 1) // 2
    if not 0 <= s <= mid:
        raise ValueError(f"sampling level {s} outside the trained output span {n_out}")
    if cyclic:
        acc = np.zeros(n_normals)
        for d in range(-s, s + 1):
            # window i+d predicts normal i in its slot mid - d
            acc += np.roll(outputs[:, mid - d], -d)
        return acc / (2 * s + 1)
    acc = np.zeros(n_normals)
    count = np.zeros(n_normals)
    centers = np.arange(foresight, n_normals - foresight)
    rows = np.arange(centers.shape[0])
    for d in range(-s, s + 1):
        covered = centers + d  # normal index window center+d predicts in slot mid+d
        keep = (covered >= 0) & (covered < n_normals)
        acc[covered[keep]] += outputs[rows[keep], mid + d]
        count[covered[keep]] += 1.0
    out = np.full(n_normals, 0.5)  # centerline fallback for uncovered end normals
    got = count > 0
    out[got] = acc[got] / count[got]
    return out


def predict_waypoints(model: MlpModel, ns: NormalSet,
                      vehicle_width: float = 0.0) -> np.ndarray:
    """Averaged, width-clamped waypoint fractions for a prepared NormalSet."""
    outputs = window_outputs(model, ns)
    w = average_window_outputs(outputs, model.sampling, ns.cyclic, len(ns),
                               model.foresight)
    return _apply_vehicle_width_all(w, ns.lengths, vehicle_width)


def predict_line(model: MlpModel, track: Track, vehicle_width: float = 0.0,
                 spacing: float = 5.0, max_tilt: float = DEFAULT_MAX_TILT,
                 tilt_step: float = DEFAULT_TILT_STEP) -> RacingLine:
    """Run the full geometry + inference pipeline on a raw track."""
    ns = resolve_intersections(build_normals(resample_centerline(track, spacing)),
                               max_tilt, tilt_step)
    w = predict_waypoints(model, ns, vehicle_width)
    return RacingLine(w=w, points=waypoints_to_world(ns, w), source="predicted")


def mean_squared_second_difference(w: np.ndarray, cyclic: bool = True) -> float:
    """Roughness proxy for a fraction series; zero for straight/affine runs."""
    w = np.asarray(w, dtype=float)
    if cyclic:
        second = np.roll(w, -1) - 2.0 * w + np.roll(w, 1)
    else:
        second = w[2:] - 2.0 * w[1:-1] + w[:-2]
    return float(np.mean(second * second)) if second.size else 0.0
