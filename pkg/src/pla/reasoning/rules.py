"""Deterministic follower controller used as the offline reasoning backend."""

from __future__ import annotations

import math

from ..scene import Partition, SceneDescription
from .command import MAX_STEERING_DEG, DrivingCommand, SpeedAction, SteeringDirection
from .prompt import TaskSpec

FRONT_SECTORS = frozenset({Partition.FRONT, Partition.FRONT_LEFT, Partition.FRONT_RIGHT})
CLOSE_TIME_GAP = 2.0  # s
FAR_TIME_GAP = 3.0  # s
CRUISE_CAP = 12.0  # m/s


def _lead_vehicle(scene: SceneDescription):
    # Obstacles are stored nearest first.
    for o in scene.obstacles:
        if o.label.startswith("vehicle.") and o.partition in FRONT_SECTORS:
            return o
    return None


def rule_plan(scene: SceneDescription, task: TaskSpec = TaskSpec()) -> DrivingCommand:
    """Time-gap follower on the nearest vehicle in the three front sectors."""
    ego_speed = scene.ego.speed
    target = _lead_vehicle(scene)
    cruise = SpeedAction.ACCELERATE if ego_speed < CRUISE_CAP else SpeedAction.MAINTAIN

    if target is None:
        return DrivingCommand(
            cruise,
            SteeringDirection.STRAIGHT,
            0.0,
            f"no lead vehicle ahead; ego speed {ego_speed:.2f} m/s, "
            + ("accelerating toward cruise" if cruise is SpeedAction.ACCELERATE else "holding cruise speed"),
        )

    gap = target.distance
    if gap < CLOSE_TIME_GAP * ego_speed * 1.0:
        speed = SpeedAction.DECELERATE
    elif gap > FAR_TIME_GAP * ego_speed * 1.0:
        speed = cruise
    else:
        speed = SpeedAction.MAINTAIN

    x_t, y_t = target.position[0], target.position[1]
    if abs(y_t) <= task.lateral_bound:
        direction, angle = SteeringDirection.STRAIGHT, 0.0
    else:
        direction = SteeringDirection.LEFT if y_t > 0 else SteeringDirection.RIGHT
        limit = min(task.steering_rate_max * task.horizon, MAX_STEERING_DEG)
        angle = round(min(math.degrees(math.atan2(abs(y_t), x_t)), limit), 2)
        if angle == 0.0:
            direction = SteeringDirection.STRAIGHT

    explanation = (
        f"following {target.label} at {gap:.2f} m ({target.partition.value}), "
        f"lateral offset {y_t:.2f} m; ego speed {ego_speed:.2f} m/s, {speed.value}"
    )
    return DrivingCommand(speed, direction, angle, explanation)
