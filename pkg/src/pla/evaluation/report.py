"""Run-level aggregation and report files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from ..errors import EmptyInput, LengthMismatch
from ..motion import Trajectory
from .metrics import DegenerateGroundTruth, ade, fde, mae, r2

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("frame_id", "speed_pred", "speed_gt", "steer_pred", "steer_gt", "ade", "fde")
# The one wall-clock field in report.json; everything else is reproducible.
TIMESTAMP_FIELD = "generated_at"


@dataclass(frozen=True)
class FrameRecord:
    frame_id: str
    predicted: Trajectory
    ground_truth: Trajectory
    speed_pred: float
    speed_gt: float
    steer_pred: float  # deg
    steer_gt: float  # deg
    raw_response: str = ""

    def __post_init__(self):
        if len(self.predicted) != len(self.ground_truth):
            raise LengthMismatch(
                f"frame {self.frame_id}: predicted has {len(self.predicted)} waypoints, "
                f"ground truth has {len(self.ground_truth)}"
            )
        values = [self.speed_pred, self.speed_gt, self.steer_pred, self.steer_gt]
        for traj in (self.predicted, self.ground_truth):
            values += [c for w in traj.waypoints for c in (w.x, w.y)]
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"frame {self.frame_id}: non-finite value in record")


@dataclass
class EvaluationReport:
    speed_mae: float
    speed_r2: Optional[float]
    steering_mae: float
    steering_r2: Optional[float]
    ade: float
    fde: float
    frames: List[Dict] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)

    def aggregates(self) -> Dict[str, Optional[float]]:
        return {
            "speed_mae_mps": self.speed_mae,
            "speed_r2": self.speed_r2,
            "steering_mae_deg": self.steering_mae,
            "steering_r2": self.steering_r2,
            "ade_m": self.ade,
            "fde_m": self.fde,
        }

    def to_dict(self) -> Dict:
        return {"aggregates": self.aggregates(), "frame_count": len(self.frames), "metadata": self.metadata}


def _r2_or_none(name: str, pred: Sequence[float], gt: Sequence[float]) -> Optional[float]:
    try:
        return r2(pred, gt)
    except DegenerateGroundTruth:
        logger.warning("%s R² undefined: ground truth is constant over the run", name)
        return None


def evaluate_run(
    records: Sequence[FrameRecord],
    backend: str = "unknown",
    config_hash: str = "",
    generated_at: Optional[str] = None,
) -> EvaluationReport:
    """Aggregate per-frame records into run metrics.

    Speed and steering metrics take one sample per frame; ADE and FDE are
    per-frame trajectory errors averaged over frames.  Rows are sorted by
    frame id before reduction so the result does not depend on input order.
    """
    if not records:
        raise EmptyInput("no frame records")
    records = sorted(records, key=lambda r: r.frame_id)
    rows = []
    for rec in records:
        rows.append(
            {
                "frame_id": rec.frame_id,
                "speed_pred": rec.speed_pred,
                "speed_gt": rec.speed_gt,
                "steer_pred": rec.steer_pred,
                "steer_gt": rec.steer_gt,
                "ade": ade(rec.predicted, rec.ground_truth),
                "fde": fde(rec.predicted, rec.ground_truth),
            }
        )
    col = lambda k: [row[k] for row in rows]  # noqa: E731
    n = len(rows)
    if generated_at is None:
        generated_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return EvaluationReport(
        speed_mae=mae(col("speed_pred"), col("speed_gt")),
        speed_r2=_r2_or_none("speed", col("speed_pred"), col("speed_gt")),
        steering_mae=mae(col("steer_pred"), col("steer_gt")),
        steering_r2=_r2_or_none("steering", col("steer_pred"), col("steer_gt")),
        ade=math.fsum(col("ade")) / n,
        fde=math.fsum(col("fde")) / n,
        frames=rows,
        metadata={"backend": backend, "config_hash": config_hash, TIMESTAMP_FIELD: generated_at},
    )


def frames_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.frames:
        writer.writerow([row["frame_id"]] + [repr(float(row[k])) for k in CSV_COLUMNS[1:]])
    return buf.getvalue()


def write_report(report: EvaluationReport, out_dir) -> None:
    """Write ``report.json`` and ``frames.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    (out / "frames.csv").write_text(frames_csv(report), encoding="utf-8")
