"""Accuracy metrics for predicted racing lines, plus latency measurement.

Both lines under comparison live on the same normal set, so the signed
lateral error at each station is simply the waypoint difference scaled by
the normal length.  Aggregates are the usual RMSE / MAE / mean plus
empirical 50% and 95% confidence radii of the absolute error, and a mean
error over detected corner apexes of the reference line.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptySeries, LengthMismatch
from .geometry import NormalSet, discrete_curvature
from .network import MlpModel
from .predictor import predict_line
from .trackio import RacingLine, Track

DEFAULT_APEX_KAPPA_MIN = 1.0 / 200.0  # 1/m; gentler reference bends are not apexes
DEFAULT_APEX_RADIUS = 5  # normals suppressed around each local curvature maximum


@dataclass(frozen=True)
class ErrorReport:
    per_normal_error: np.ndarray
    rmse: float
    mae: float
    mean_error: float
    ci50: float
    ci95: float
    apex_error_mae: float | None = None
    latency_s: float | None = None

    def with_apex(self, apex: float | None) -> "ErrorReport":
        return replace(self, apex_error_mae=apex)

    def with_latency(self, seconds: float) -> "ErrorReport":
        return replace(self, latency_s=seconds)


def lateral_errors(pred: RacingLine, ref: RacingLine, ns: NormalSet) -> np.ndarray:
    """Signed metre offsets along each normal, positive toward the right."""
    if not (len(pred) == len(ref) == len(ns)):
        raise LengthMismatch(
            f"lines of {len(pred)} and {len(ref)} waypoints on {len(ns)} normals"
        )
    return (pred.w - ref.w) * ns.lengths


def summary_metrics(errors: np.ndarray) -> ErrorReport:
    """RMSE, MAE, mean and empirical confidence radii of an error series."""
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise EmptySeries("no errors to summarize")
    abs_e = np.abs(e)
    report = ErrorReport(
        per_normal_error=e,
        rmse=float(np.sqrt(np.mean(e * e))),
        mae=float(np.mean(abs_e)),
        mean_error=float(np.mean(e)),
        ci50=float(np.quantile(abs_e, 0.50)),
        ci95=float(np.quantile(abs_e, 0.95)),
    )
    assert report.rmse >= report.mae - 1e-12 and report.mae >= abs(report.mean_error) - 1e-12
    return report


def laplace_fit(errors: np.ndarray) -> tuple[float, float]:
    """Maximum-likelihood Laplace location/scale; a diagnostic only."""
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise EmptySeries("no errors to fit")
    mu = float(np.median(e))
    return mu, float(np.mean(np.abs(e - mu)))


def find_apexes(ref: RacingLine, cyclic: bool = True,
                kappa_min: float = DEFAULT_APEX_KAPPA_MIN,
                suppression_radius: int = DEFAULT_APEX_RADIUS) -> np.ndarray:
    """Indices of curvature local maxima of the reference line.

    A station is an apex when its discrete curvature exceeds ``kappa_min``
    and is not smaller than any curvature within ``suppression_radius``
    stations on either side (wrapping on closed laps).
    """
    kappa = discrete_curvature(ref.points, cyclic)
    n = kappa.shape[0]
    keep = kappa >= kappa_min
    for d in range(1, suppression_radius + 1):
        if cyclic:
            keep &= (kappa >= np.roll(kappa, d)) & (kappa >= np.roll(kappa, -d))
        else:
            left = np.concatenate([np.zeros(d), kappa[:-d]])
            right = np.concatenate([kappa[d:], np.zeros(d)])
            keep &= (kappa >= left) & (kappa >= right)
    return np.flatnonzero(keep)


def apex_error(pred: RacingLine, ref: RacingLine, ns: NormalSet,
               kappa_min: float = DEFAULT_APEX_KAPPA_MIN,
               suppression_radius: int = DEFAULT_APEX_RADIUS) -> float | None:
    """Mean absolute lateral error over reference-line apexes.

    Returns ``None`` when the reference has no bend sharp enough to qualify
    (reported as absent rather than an error).
    """
    apexes = find_apexes(ref, ns.cyclic, kappa_min, suppression_radius)
    if apexes.size == 0:
        return None
    errors = lateral_errors(pred, ref, ns)
    return float(np.mean(np.abs(errors[apexes])))


def compare_lines(pred: RacingLine, ref: RacingLine, ns: NormalSet) -> ErrorReport:
    """Full report for one prediction/reference pair."""
    errors = lateral_errors(pred, ref, ns)
    return summary_metrics(errors).with_apex(apex_error(pred, ref, ns))


@dataclass(frozen=True)
class LatencyReport:
    seconds: float
    n_normals: int
    repetitions: int


def measure_latency(model: MlpModel, track: Track, repetitions: int = 5,
                    spacing: float = 5.0) -> LatencyReport:
    """Median wall-clock time of :func:`predict_line` (no file I/O included)."""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    times = []
    n_normals = 0
    for _ in range(repetitions):
        start = time.perf_counter()
        line = predict_line(model, track, spacing=spacing)
        times.append(time.perf_counter() - start)
        n_normals = len(line)
    return LatencyReport(seconds=float(np.median(times)), n_normals=n_normals,
                         repetitions=repetitions)


def report_kv(report: ErrorReport, prefix: str = "") -> str:
    """Machine-readable key-value rendering of a report."""
    pairs = [
        ("rmse_m", report.rmse),
        ("mae_m", report.mae),
        ("mean_error_m", report.mean_error),
        ("ci50_m", report.ci50),
        ("ci95_m", report.ci95),
    ]
    if report.apex_error_mae is not None:
        pairs.append(("apex_error_m", report.apex_error_mae))
    if report.latency_s is not None:
        pairs.append(("latency_s", report.latency_s))
    return "\n".join(f"{prefix}{key}={value!r}" for key, value in pairs) + "\n"


def format_report_table(rows: list[tuple[str, ErrorReport]]) -> str:
    """Human-readable accuracy table, one circuit per row plus the fields
    RMSE / MAE / apex error in metres and the prediction time in seconds."""
    header = f"{'Circuit':<28} {'RMSE (m)':>9} {'MAE (m)':>9} {'Apex Error (m)':>15} {'ANN (s)':>9}"
    lines = [header, "-" * len(header)]
    for name, rep in rows:
        apex = f"{rep.apex_error_mae:.3f}" if rep.apex_error_mae is not None else "n/a"
        latency = f"{rep.latency_s:.4f}" if rep.latency_s is not None else "n/a"
        lines.append(
            f"{name:<28} {rep.rmse:>9.3f} {rep.mae:>9.3f} {apex:>15} {latency:>9}"
        )
    return "\n".join(lines) + "\n"


def pooled_report(reports: list[ErrorReport]) -> ErrorReport:
    """Aggregate over circuits by pooling every per-normal error."""
    if not reports:
        raise EmptySeries("no reports to pool")
    pooled = np.concatenate([r.per_normal_error for r in reports])
    out = summary_metrics(pooled)
    apex_values = [r.apex_error_mae for r in reports if r.apex_error_mae is not None]
    if apex_values:
        out = out.with_apex(float(np.mean(apex_values)))
    latencies = [r.latency_s for r in reports if r.latency_s is not None]
    if latencies:
        out = out.with_latency(float(np.mean(latencies)))
    return out
