"""Racing-line prediction toolkit.

Pipeline: track geometry -> normals -> windowed features -> feed-forward
network -> smoothed racing line, with a built-in minimum-curvature oracle
for training-target generation and an evaluation suite for accuracy and
latency.
"""

from .trackio import RacingLine, Track, parse_raceline_csv, parse_track_csv, write_raceline_csv, write_track_csv
from .geometry import Normal, NormalSet, build_normals, resample_centerline, resolve_intersections
from .windows import FeatureRow, Window, encode_features, make_windows
from .oracle import OracleConfig, curvature_objective, generate_targets, mcp_solve
from .network import MlpModel, NadamState, TrainConfig, backward, forward, huber, init_model, load_model, nadam_step, save_model, train
from .predictor import apply_vehicle_width, predict_line
from .evaluation import ErrorReport, apex_error, lateral_errors, measure_latency, summary_metrics

__version__ = "0.1.0"

__all__ = [
    "RacingLine", "Track", "parse_raceline_csv", "parse_track_csv",
    "write_raceline_csv", "write_track_csv",
    "Normal", "NormalSet", "build_normals", "resample_centerline",
    "resolve_intersections",
    "FeatureRow", "Window", "encode_features", "make_windows",
    "OracleConfig", "curvature_objective", "generate_targets", "mcp_solve",
    "MlpModel", "NadamState", "TrainConfig", "backward", "forward", "huber",
    "init_model", "load_model", "nadam_step", "save_model", "train",
    "apply_vehicle_width", "predict_line",
    "ErrorReport", "apex_error", "lateral_errors", "measure_latency",
    "summary_metrics",
    "__version__",
]
