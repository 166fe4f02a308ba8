"""Rate-limited kinematic bicycle rollout of a driving command."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from .reasoning.command import DrivingCommand, SpeedAction

INTEGRATORS = ("arc", "euler")


@dataclass(frozen=True)
class RolloutParams:
    dt: float = 0.1
    horizon: float = 1.0
    wheelbase: float = 2.7
    accel: float = 1.0
    decel: float = -1.5
    max_steer_rate: float = 15.0  # deg/s
    min_speed: float = 0.0
    # "arc" integrates the pose exactly over each step with speed and steer
    # held; "euler" is the first-order explicit update.
    integrator: str = "arc"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.wheelbase > 0:
            raise ValueError("wheelbase must be > 0")
        if self.max_steer_rate < 0 or self.min_speed < 0:
            raise ValueError("max_steer_rate and min_speed must be >= 0")
        n = round(self.horizon / self.dt)
        if n < 1 or abs(n * self.dt - self.horizon) > 1e-9 * max(1.0, self.horizon):
            raise ValueError(f"horizon {self.horizon} is not a positive integer multiple of dt {self.dt}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")

    @property
    def steps(self) -> int:
        return round(self.horizon / self.dt)


@dataclass(frozen=True)
class Waypoint:
    t: float
    x: float
    y: float
    heading: float  # rad
    speed: float


@dataclass(frozen=True)
class Trajectory:
    waypoints: Tuple[Waypoint, ...]
    # Effective steer per waypoint in degrees, left positive; empty when unknown.
    steer: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        object.__setattr__(self, "steer", tuple(self.steer))
        ts = [w.t for w in self.waypoints]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        if self.steer and len(self.steer) != len(self.waypoints):
            raise ValueError("steer series length must match waypoints")

    def __len__(self) -> int:
        return len(self.waypoints)

    def xy(self) -> List[Tuple[float, float]]:
        return [(w.x, w.y) for w in self.waypoints]

    @classmethod
    def from_xy(cls, points: Sequence[Sequence[float]], dt: float = 0.1, speeds=None) -> "Trajectory":
        """Build a trajectory from planar points sampled every ``dt`` from ``t = dt``."""
        wps = []
        prev = (0.0, 0.0)
        for k, (x, y) in enumerate(points):
            heading = math.atan2(y - prev[1], x - prev[0]) if (x, y) != prev else 0.0
            speed = speeds[k] if speeds is not None else math.dist((x, y), prev) / dt
            wps.append(Waypoint((k + 1) * dt, float(x), float(y), heading, float(speed)))
            prev = (x, y)
        return cls(tuple(wps))

    def to_dict(self) -> dict:
        return {
            "waypoints": [[w.t, w.x, w.y, w.heading, w.speed] for w in self.waypoints],
            "steer_deg": list(self.steer),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        return cls(tuple(Waypoint(*map(float, w)) for w in data["waypoints"]), tuple(data.get("steer_deg", ())))


def _acceleration(action: SpeedAction, params: RolloutParams) -> float:
    if action is SpeedAction.ACCELERATE:
        return params.accel
    if action is SpeedAction.DECELERATE:
        return params.decel
    return 0.0


def rollout(
    ego_speed: float,
    current_steer: float,
    command: DrivingCommand,
    params: RolloutParams = RolloutParams(),
) -> Trajectory:
    """Roll ``command`` out over the horizon from the ego origin, heading 0.

    Each step updates speed, then steer (moved toward the command's signed
    angle by at most ``max_steer_rate * dt``), then pose.
    """
    if ego_speed < 0:
        raise ValueError("ego_speed must be >= 0")
    dt = params.dt
    a = _acceleration(command.speed_action, params)
    target = command.signed_angle
    max_delta = params.max_steer_rate * dt
    v, steer = float(ego_speed), float(current_steer)
    x = y = heading = 0.0
    waypoints, steers = [], []
    for k in range(1, params.steps + 1):
        if a != 0.0:
            v = max(v + a * dt, params.min_speed)
        elif v < params.min_speed:
            v = params.min_speed
        steer += min(max(target - steer, -max_delta), max_delta)
        rate = v * math.tan(math.radians(steer)) / params.wheelbase
        half = 0.5 * rate * dt
        if params.integrator == "euler" or half == 0.0:
            x += v * math.cos(heading) * dt
            y += v * math.sin(heading) * dt
            heading += rate * dt
        else:
            # Chord of the step's circular arc; the sinc form stays accurate as rate -> 0.
            chord = v * dt * math.sin(half) / half
            x += chord * math.cos(heading + half)
            y += chord * math.sin(heading + half)
            heading += rate * dt
        waypoints.append(Waypoint(k * dt, x, y, heading, v))
        steers.append(steer)
    return Trajectory(tuple(waypoints), tuple(steers))
