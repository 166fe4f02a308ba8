"""Driving command type and tolerant extraction from model output."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum

MAX_STEERING_DEG = 45.0
COMMAND_KEYS = ("speed_action", "steering_direction", "steering_angle", "explanation")
# Command responses are a few hundred bytes; the cap bounds the object scan.
MAX_RESPONSE_CHARS = 32768
_OBJECT_START = re.compile(r"\{\s*[\"}]")


class MalformedResponse(ValueError):
    """No JSON object could be extracted from the response."""


class SchemaViolation(ValueError):
    """A JSON object was found but does not satisfy the command schema."""


class SpeedAction(str, Enum):
    ACCELERATE = "accelerate"
    DECELERATE = "decelerate"
    MAINTAIN = "maintain"


class SteeringDirection(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    STRAIGHT = "straight"


@dataclass(frozen=True)
class DrivingCommand:
    speed_action: SpeedAction
    steering_direction: SteeringDirection
    steering_angle: float  # degrees, magnitude
    explanation: str = ""

    def __post_init__(self):
        try:
            object.__setattr__(self, "speed_action", SpeedAction(self.speed_action))
            object.__setattr__(self, "steering_direction", SteeringDirection(self.steering_direction))
        except ValueError as exc:
            raise SchemaViolation(str(exc)) from None
        angle = float(self.steering_angle)
        if not (math.isfinite(angle) and 0.0 <= angle <= MAX_STEERING_DEG):
            raise SchemaViolation(f"steering_angle must be within [0, {MAX_STEERING_DEG}], got {angle}")
        if (self.steering_direction is SteeringDirection.STRAIGHT) != (angle == 0.0):
            raise SchemaViolation(
                f"steering_direction {self.steering_direction.value!r} inconsistent with angle {angle}"
            )
        object.__setattr__(self, "steering_angle", angle)

    @property
    def signed_angle(self) -> float:
        """Target steer in degrees, left positive."""
        if self.steering_direction is SteeringDirection.RIGHT:
            return -self.steering_angle
        return self.steering_angle

    def to_dict(self) -> dict:
        return {
            "speed_action": self.speed_action.value,
            "steering_direction": self.steering_direction.value,
            "steering_angle": self.steering_angle,
            "explanation": self.explanation,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


def _first_object(raw: str) -> dict:
    decoder = json.JSONDecoder()
    # Only braces that can open an object (a key or "}" next) are tried.
    for m in _OBJECT_START.finditer(raw):
        try:
            value, _ = decoder.raw_decode(raw, m.start())
        except (ValueError, RecursionError):
            continue
        if isinstance(value, dict):
            return value
    raise MalformedResponse("no JSON object found in response")


def parse_command(raw: str) -> DrivingCommand:
    """Extract and validate the first JSON object in ``raw``.

    Surrounding prose and code fences are ignored.  A left/right command with
    a zero angle is normalised to straight.
    """
    if not isinstance(raw, str) or not raw.strip():
        raise MalformedResponse("empty response")
    if len(raw) > MAX_RESPONSE_CHARS:
        raise MalformedResponse(f"response longer than {MAX_RESPONSE_CHARS} characters")
    obj = _first_object(raw)

    missing = [k for k in COMMAND_KEYS if k not in obj]
    if missing:
        raise SchemaViolation(f"missing keys: {missing}")
    extra = sorted(set(obj) - set(COMMAND_KEYS))
    if extra:
        raise SchemaViolation(f"unexpected keys: {extra}")

    speed, direction, angle, explanation = (obj[k] for k in COMMAND_KEYS)
    if not isinstance(speed, str) or speed not in {a.value for a in SpeedAction}:
        raise SchemaViolation(f"unknown speed_action {speed!r}")
    if not isinstance(direction, str) or direction not in {d.value for d in SteeringDirection}:
        raise SchemaViolation(f"unknown steering_direction {direction!r}")
    if isinstance(angle, bool) or not isinstance(angle, (int, float)):
        raise SchemaViolation(f"steering_angle must be a number, got {angle!r}")
    if not 0 <= angle <= MAX_STEERING_DEG:
        raise SchemaViolation(f"steering_angle must be within [0, {MAX_STEERING_DEG}], got {angle!r}")
    if not isinstance(explanation, str):
        raise SchemaViolation("explanation must be a string")
    if angle == 0:
        direction = SteeringDirection.STRAIGHT.value
    return DrivingCommand(speed, direction, float(angle), explanation)
