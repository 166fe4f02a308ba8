"""Deterministic prompt construction for the reasoning backends."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

from ..scene import SceneDescription, parse_scene, serialize_scene

MAX_IMAGES = 7  # six surround views plus one overlay target
SCENE_BEGIN = "<<<SCENE"
SCENE_END = "SCENE>>>"


@dataclass(frozen=True)
class TaskSpec:
    task_text: str = "follow the lead vehicle in the ego lane"
    lane_info: str = "single ego lane, 3.5 m wide; construction barriers may narrow the lane"
    lateral_bound: float = 1.0  # m
    steering_rate_min: float = 5.0  # deg/s
    steering_rate_max: float = 15.0  # deg/s
    horizon: float = 1.0  # s

    def __post_init__(self):
        if not self.lateral_bound > 0:
            raise ValueError("lateral_bound must be > 0")
        if not 0 < self.steering_rate_min <= self.steering_rate_max:
            raise ValueError("need 0 < steering_rate_min <= steering_rate_max")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    image_refs: Tuple[Tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "image_refs", tuple((str(n), str(p)) for n, p in self.image_refs))
        if len(self.image_refs) > MAX_IMAGES:
            raise ValueError(f"at most {MAX_IMAGES} images, got {len(self.image_refs)}")

    def to_dict(self) -> dict:
        return {
            "system_text": self.system_text,
            "user_text": self.user_text,
            "image_refs": [list(r) for r in self.image_refs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PromptBundle":
        return cls(data["system_text"], data["user_text"], tuple(tuple(r) for r in data.get("image_refs", ())))


_SYSTEM_TEMPLATE = """\
You are the reasoning core of an automated vehicle. You receive a structured \
scene description of the ego vehicle and the obstacles around it (ego frame: \
x forward, y left, metres and metres per second), the driving task, the lane \
information, and camera images when available.

Assess the risks in the scene and decide the driving command for the next \
{horizon:.1f} s.

Constraints:
- keep the lateral deviation within the lane to ±{lateral:.2f} m
- use a typical steering rate of {rate_min:.1f}–{rate_max:.1f} deg/s
- planning horizon: {horizon:.1f} s

Answer with exactly one JSON object and nothing else, with these keys:
  "speed_action": one of "accelerate", "decelerate", "maintain"
  "steering_direction": one of "left", "right", "straight"
  "steering_angle": target steering angle in degrees, 0 to 45, 0 when straight
  "explanation": short reasoning based on the perception and motion data
"""

_USER_TEMPLATE = """\
Driving task: {task}
Lane information: {lane}

Scene description:
{begin}
{scene}{end}

Camera images attached: {images}

Return the JSON object described in the instructions."""


def build_prompt(
    scene: SceneDescription,
    task: TaskSpec = TaskSpec(),
    image_refs: Sequence[Tuple[str, str]] = (),
) -> PromptBundle:
    system_text = _SYSTEM_TEMPLATE.format(
        horizon=task.horizon,
        lateral=task.lateral_bound,
        rate_min=task.steering_rate_min,
        rate_max=task.steering_rate_max,
    )
    refs = tuple((str(n), str(p)) for n, p in image_refs)
    user_text = _USER_TEMPLATE.format(
        task=task.task_text,
        lane=task.lane_info,
        begin=SCENE_BEGIN,
        scene=serialize_scene(scene),
        end=SCENE_END,
        images=", ".join(n for n, _ in refs) if refs else "none",
    )
    return PromptBundle(system_text, user_text, refs)


def extract_scene_text(user_text: str) -> str:
    """Return the serialized scene embedded in a user prompt."""
    try:
        start = user_text.index(SCENE_BEGIN + "\n") + len(SCENE_BEGIN) + 1
        stop = user_text.index(SCENE_END, start)
    except ValueError:
        raise ValueError("prompt carries no embedded scene description") from None
    return user_text[start:stop]


def scene_from_prompt(prompt: PromptBundle) -> SceneDescription:
    return parse_scene(extract_scene_text(prompt.user_text))
