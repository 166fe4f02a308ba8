"""Scalar and trajectory error metrics."""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple, Union

from ..errors import EmptyInput, LengthMismatch
from ..motion import Trajectory


class DegenerateGroundTruth(ValueError):
    """R² is undefined when the ground truth has zero variance."""


TrajectoryLike = Union[Trajectory, Sequence[Sequence[float]]]


def _pair(pred: Sequence[float], gt: Sequence[float]) -> Tuple[List[float], List[float]]:
    pred, gt = [float(v) for v in pred], [float(v) for v in gt]
    if len(pred) != len(gt):
        raise LengthMismatch(f"pred has {len(pred)} values, gt has {len(gt)}")
    if not pred:
        raise EmptyInput("no values")
    return pred, gt


def mae(pred: Sequence[float], gt: Sequence[float]) -> float:
    pred, gt = _pair(pred, gt)
    return math.fsum(abs(p - g) for p, g in zip(pred, gt)) / len(pred)


def r2(pred: Sequence[float], gt: Sequence[float]) -> float:
    """Coefficient of determination of ``pred`` against ``gt``."""
    pred, gt = _pair(pred, gt)
    mean = math.fsum(gt) / len(gt)
    ss_tot = math.fsum((g - mean) ** 2 for g in gt)
    if ss_tot == 0.0:
        raise DegenerateGroundTruth("ground truth has zero variance")
    ss_res = math.fsum((g - p) ** 2 for p, g in zip(pred, gt))
    return 1.0 - ss_res / ss_tot


def _xy(traj: TrajectoryLike) -> List[Tuple[float, float]]:
    if isinstance(traj, Trajectory):
        return traj.xy()
    return [(float(p[0]), float(p[1])) for p in traj]


def displacements(pred: TrajectoryLike, gt: TrajectoryLike) -> List[float]:
    """Planar distance between corresponding waypoints."""
    a, b = _xy(pred), _xy(gt)
    if len(a) != len(b):
        raise LengthMismatch(f"pred has {len(a)} waypoints, gt has {len(b)}")
    return [math.hypot(p[0] - g[0], p[1] - g[1]) for p, g in zip(a, b)]


def ade(pred: TrajectoryLike, gt: TrajectoryLike) -> float:
    d = displacements(pred, gt)
    if not d:
        raise EmptyInput("no waypoints")
    return math.fsum(d) / len(d)


def fde(pred: TrajectoryLike, gt: TrajectoryLike) -> float:
    d = displacements(pred, gt)
    if not d:
        raise EmptyInput("no waypoints")
    return d[-1]
