from .metrics import DegenerateGroundTruth, ade, displacements, fde, mae, r2
from .plots import emit_heatmap, emit_scatter, lerp_color
from .report import EvaluationReport, FrameRecord, evaluate_run, frames_csv, write_report

__all__ = [
    "DegenerateGroundTruth",
    "EvaluationReport",
    "FrameRecord",
    "ade",
    "displacements",
    "emit_heatmap",
    "emit_scatter",
    "evaluate_run",
    "fde",
    "frames_csv",
    "lerp_color",
    "mae",
    "r2",
    "write_report",
]
