"""Per-normal features and overlapping fixed-size windows.

Each normal contributes three features: its length divided by the reference
length ``DEFAULT_L_REF``, the signed heading change since the previous
station, and the signed pseudo-normal tilt.  A window stacks the rows of
the 2f+1 normals around a center index into one flat vector (normal-major,
(l, alpha, theta)-minor, fore to aft), optionally paired with the 2s+1
waypoint fractions it must predict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, TooShort
from .geometry import NormalSet

DEFAULT_L_REF = 30.0  # metres; keeps normalized lengths of real tracks near O(1)
FEATURE_ORDER = "normal-major:l,alpha,theta"


@dataclass(frozen=True)
class FeatureRow:
    """The three network inputs contributed by one normal."""

    l_norm: float
    alpha: float
    theta: float


@dataclass(frozen=True)
class Window:
    """One training or inference unit: flat features plus optional targets."""

    center_index: int
    features: np.ndarray
    targets: np.ndarray | None = None


def feature_array(ns: NormalSet, l_ref: float = DEFAULT_L_REF) -> np.ndarray:
    """(N, 3) feature matrix with columns (l/l_ref, alpha, theta)."""
    if l_ref <= 0.0:
        raise LengthMismatch(f"l_ref must be positive, got {l_ref}")
    return np.column_stack([ns.lengths / l_ref, ns.alpha, ns.theta])


def encode_features(ns: NormalSet, l_ref: float = DEFAULT_L_REF) -> list[FeatureRow]:
    """One :class:`FeatureRow` per normal."""
    arr = feature_array(ns, l_ref)
    return [FeatureRow(float(l), float(a), float(t)) for l, a, t in arr]


def _gather_indices(n: int, half: int, cyclic: bool) -> tuple[np.ndarray, np.ndarray]:
    """(centers, (n_win, 2*half+1) index grid) for the sliding window."""
    span = 2 * half + 1
    if n < span:
        raise TooShort(f"{n} normals cannot fill a window of {span}")
    offsets = np.arange(-half, half + 1)
    if cyclic:
        centers = np.arange(n)
        idx = (centers[:, None] + offsets[None, :]) % n
    else:
        centers = np.arange(half, n - half)
        idx = centers[:, None] + offsets[None, :]
    return centers, idx


def window_matrix(features: np.ndarray, f: int, cyclic: bool) -> tuple[np.ndarray, np.ndarray]:
    """Stack per-normal features into flat window rows.

    Returns ``(centers, X)`` where ``X`` has shape (n_windows, 3*(2f+1)).
    """
    feat = np.asarray(features, dtype=float)
    centers, idx = _gather_indices(feat.shape[0], f, cyclic)
    return centers, feat[idx].reshape(idx.shape[0], -1)


def target_matrix(targets: np.ndarray, s: int, cyclic: bool,
                  centers: np.ndarray) -> np.ndarray:
    """(n_windows, 2s+1) waypoint targets aligned with ``centers``."""
    w = np.asarray(targets, dtype=float)
    n = w.shape[0]
    offsets = np.arange(-s, s + 1)
    idx = centers[:, None] + offsets[None, :]
    if cyclic:
        idx = idx % n
    return w[idx]


def make_windows(features, targets=None, f: int = 70, s: int = 4,
                 cyclic: bool = True) -> list[Window]:
    """Assemble one window per admissible center index.

    ``features`` may be a list of :class:`FeatureRow` or an (N, 3) array;
    ``targets`` an optional per-normal fraction sequence (omitted for
    inference).  Requires ``s <= f``.  Open tracks drop the f indices at
    each end; closed tracks wrap and yield one window per normal.
    """
    if s > f:
        raise LengthMismatch(f"sampling level {s} exceeds foresight {f}")
    if features and isinstance(features[0], FeatureRow):
        feat = np.array([[r.l_norm, r.alpha, r.theta] for r in features])
    else:
        feat = np.asarray(features, dtype=float)
    centers, x = window_matrix(feat, f, cyclic)
    y = None
    if targets is not None and len(targets) > 0:
        if len(targets) != feat.shape[0]:
            raise LengthMismatch(
                f"{len(targets)} targets for {feat.shape[0]} normals"
            )
        y = target_matrix(targets, s, cyclic, centers)
    return [
        Window(center_index=int(c), features=x[k],
               targets=None if y is None else y[k])
        for k, c in enumerate(centers)
    ]
