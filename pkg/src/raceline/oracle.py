"""Minimum-curvature racing-line oracle for training-target generation.

The target line for a circuit is the waypoint vector minimizing the summed
squared discrete curvature of the resulting polyline, found by projected
gradient descent inside the track boundaries.  Any external line can be
used instead via :func:`raceline.geometry.project_line_to_waypoints`; this
solver is simply the built-in default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch
from .geometry import (
    NormalSet,
    build_normals,
    resample_centerline,
    resolve_intersections,
    waypoints_to_world,
)
from .trackio import RacingLine, Track

_TINY = 1e-300


@dataclass(frozen=True)
class OracleConfig:
    """Solver knobs.

    ``step_size`` is the largest per-iteration waypoint movement (fractions
    of a normal); backtracking halves it whenever a trial step would raise
    the objective.  ``margin`` keeps waypoints off the exact boundary, which
    both stands in for a zero vehicle width and avoids degenerate
    circumcircles at boundary contact.
    """

    max_iters: int = 2000
    tol: float = 1e-12
    step_size: float = 0.05
    margin: float = 1e-3

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0.0 <= self.margin < 0.5:
            raise ValueError("margin must lie in [0, 0.5)")
        if self.step_size <= 0.0:
            raise ValueError("step_size must be positive")


def _check_w(ns: NormalSet, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (len(ns),):
        raise LengthMismatch(f"expected {len(ns)} fractions, got shape {w.shape}")
    return w


def _curvature_terms(points: np.ndarray, cyclic: bool):
    """Chord vectors and squared-curvature pieces for every point triple."""
    p = points
    a = p - np.roll(p, 1, axis=0)
    b = np.roll(p, -1, axis=0) - p
    e = np.roll(p, -1, axis=0) - np.roll(p, 1, axis=0)
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    a2 = np.einsum("ij,ij->i", a, a)
    b2 = np.einsum("ij,ij->i", b, b)
    e2 = np.einsum("ij,ij->i", e, e)
    s = a2 * b2 * e2
    valid = s > _TINY
    if not cyclic:
        valid = valid.copy()
        valid[0] = False
        valid[-1] = False
    kappa_sq = np.where(valid, 4.0 * cross * cross / np.where(valid, s, 1.0), 0.0)
    return a, b, e, cross, a2, b2, e2, kappa_sq, valid


def curvature_objective(ns: NormalSet, w) -> float:
    """Sum of squared discrete curvatures of the line through waypoints ``w``.

    Curvature at each point is the inverse circumradius of the triple
    (previous, current, next), wrapping on cyclic sets; collinear triples
    contribute zero.
    """
    w = _check_w(ns, w)
    points = ns.left_ends + w[:, None] * (ns.right_ends - ns.left_ends)
    kappa_sq = _curvature_terms(points, ns.cyclic)[7]
    return float(np.sum(kappa_sq))


def curvature_gradient(ns: NormalSet, w) -> np.ndarray:
    """Analytic gradient of :func:`curvature_objective` w.r.t. ``w``."""
    w = _check_w(ns, w)
    d = ns.right_ends - ns.left_ends
    points = ns.left_ends + w[:, None] * d
    a, b, e, cross, a2, b2, e2, kappa_sq, valid = _curvature_terms(points, ns.cyclic)
    s = np.where(valid, a2 * b2 * e2, 1.0)
    coeff = np.where(valid, 8.0 * cross / s, 0.0)[:, None]
    ksq = kappa_sq[:, None]
    an = a / np.where(valid, a2, 1.0)[:, None]
    bn = b / np.where(valid, b2, 1.0)[:, None]
    en = e / np.where(valid, e2, 1.0)[:, None]
    # d(cross)/dp for the previous, central and next point of each triple
    perp_b = np.column_stack([-b[:, 1], b[:, 0]])
    perp_a = np.column_stack([-a[:, 1], a[:, 0]])
    g_prev = coeff * perp_b - ksq * (-2.0 * an - 2.0 * en)
    g_ctr = coeff * (-perp_b - perp_a) - ksq * (2.0 * an - 2.0 * bn)
    g_next = coeff * perp_a - ksq * (2.0 * bn + 2.0 * en)
    grad_p = np.roll(g_prev, -1, axis=0) + g_ctr + np.roll(g_next, 1, axis=0)
    return np.einsum("ij,ij->i", grad_p, d)


def mcp_solve(ns: NormalSet, cfg: OracleConfig = OracleConfig(),
              trace: list | None = None) -> np.ndarray:
    """Minimize the curvature objective by projected gradient descent.

    Starts from the centerline (w = 0.5 everywhere) and iterates spectral
    (Barzilai-Borwein) projected gradient steps: move along the negative
    gradient with the BB step length, capped so no waypoint shifts by more
    than ``step_size`` per iteration, then clamp into [margin, 1 - margin].
    The step is halved until the objective strictly decreases, so the
    accepted objective sequence is non-increasing.  Stops when an accepted
    improvement falls below ``tol``, the step underflows, or ``max_iters``
    is reached.  Deterministic: identical inputs give bit-identical output.

    ``trace``, when given a list, collects the objective value of every
    accepted iterate (a non-increasing sequence by construction).
    """
    lo, hi = cfg.margin, 1.0 - cfg.margin
    w = np.full(len(ns), 0.5)
    obj = curvature_objective(ns, w)
    if trace is not None:
        trace.append(obj)
    grad = curvature_gradient(ns, w)
    eta = cfg.step_size / max(float(np.max(np.abs(grad))), 1e-30)
    for _ in range(cfg.max_iters):
        gmax = float(np.max(np.abs(grad)))
        if gmax == 0.0:
            break
        step = min(eta, cfg.step_size / gmax)
        improved = False
        while step * gmax > 1e-16:
            trial = np.clip(w - step * grad, lo, hi)
            trial_obj = curvature_objective(ns, trial)
            if trial_obj < obj:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        assert trial_obj < obj  # accepted iterations are strictly monotone
        new_grad = curvature_gradient(ns, trial)
        move = trial - w
        grad_change = new_grad - grad
        denom = float(move @ grad_change)
        eta = float(move @ move) / denom if denom > 1e-300 else 2.0 * step
        gain = obj - trial_obj
        w, obj, grad = trial, trial_obj, new_grad
        if trace is not None:
            trace.append(obj)
        if gain < cfg.tol:
            break
    return w


def generate_targets(track: Track, cfg: OracleConfig = OracleConfig(),
                     spacing: float = 5.0) -> tuple[NormalSet, np.ndarray]:
    """Run the full geometry pipeline and solve for oracle waypoints.

    Resamples the track, builds and repairs the normals, then solves the
    minimum-curvature problem.  Vehicle width is intentionally not applied
    here; it is accounted for at prediction time.
    """
    ns = resolve_intersections(build_normals(resample_centerline(track, spacing)))
    return ns, mcp_solve(ns, cfg)


def oracle_line(ns: NormalSet, w: np.ndarray) -> RacingLine:
    """Package solver output as a :class:`RacingLine`."""
    return RacingLine(w=w, points=waypoints_to_world(ns, w), source="oracle")
