"""Scene description: ego state plus obstacles in the ego frame.

The ego frame is x forward, y left, z up.  Every float in the text form is
fixed two-decimal, so equality after a text round trip is defined against
:func:`quantize_scene` rather than the raw floats.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Tuple

Vec3 = Tuple[float, float, float]

EGO_LABEL = "ego_vehicle"
UNKNOWN_LABEL = "unknown"
HEADER = "# pla-scene v1"
# Half a unit in the last emitted decimal place.
QUANT_SLACK = 0.005
_SLACK_EPS = 1e-9


class DegenerateInput(ValueError):
    """Raised when a bearing is requested for the ego origin itself."""


class SceneSyntaxError(ValueError):
    """Malformed scene text."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class InvariantViolation(ValueError):
    """A scene field is inconsistent with the fields it is derived from."""

    def __init__(self, field: str, got, expected):
        self.field = field
        self.got = got
        self.expected = expected
        super().__init__(f"{field}: got {got!r}, expected {expected!r}")


class Partition(str, Enum):
    FRONT = "front"
    FRONT_LEFT = "front-left"
    LEFT = "left"
    BACK_LEFT = "back-left"
    BACK = "back"
    BACK_RIGHT = "back-right"
    RIGHT = "right"
    FRONT_RIGHT = "front-right"


# Counterclockwise from the forward axis, 45 degrees apart.
_SECTORS = (
    Partition.FRONT,
    Partition.FRONT_LEFT,
    Partition.LEFT,
    Partition.BACK_LEFT,
    Partition.BACK,
    Partition.BACK_RIGHT,
    Partition.RIGHT,
    Partition.FRONT_RIGHT,
)


def partition_of(position: Sequence[float]) -> Partition:
    """Return the 8-way bearing sector of ``position`` around the ego origin.

    Sectors are 45 degrees wide and centred on the compass directions; an
    angle exactly on a boundary belongs to the counterclockwise neighbour.
    """
    x, y = float(position[0]), float(position[1])
    if x == 0.0 and y == 0.0:
        raise DegenerateInput("bearing undefined at (x, y) == (0, 0)")
    angle = math.degrees(math.atan2(y, x))
    index = math.floor((angle + 22.5) / 45.0) % 8
    return _SECTORS[index]


def norm3(v: Sequence[float]) -> float:
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def q2(value: float) -> float:
    """Round to two decimals exactly as the serializer prints it."""
    # The trailing + 0.0 folds -0.0 into 0.0 so it never prints as "-0.00".
    return float(f"{value:.2f}") + 0.0


def _q2v(v: Sequence[float]) -> Vec3:
    return (q2(v[0]), q2(v[1]), q2(v[2]))


def _vec3(v: Iterable[float], name: str) -> Vec3:
    out = tuple(float(c) for c in v)
    if len(out) != 3:
        raise InvariantViolation(name, out, "3 components")
    if not all(math.isfinite(c) for c in out):
        raise InvariantViolation(name, out, "finite components")
    return out  # type: ignore[return-value]


def _check_close(name: str, got: float, expected: float) -> None:
    if not math.isfinite(got) or abs(got - expected) > QUANT_SLACK + _SLACK_EPS:
        raise InvariantViolation(name, got, round(expected, 6))


def _check_label(name: str, value: str) -> None:
    if not value or value != value.strip() or "\n" in value or "\r" in value:
        raise InvariantViolation(name, value, "non-empty single-line string without surrounding whitespace")


@dataclass(frozen=True)
class EgoState:
    dimensions: Vec3
    velocity: Vec3
    speed: float
    position: Vec3 = (0.0, 0.0, 0.0)
    distance: float = 0.0
    label: str = EGO_LABEL

    def __post_init__(self):
        object.__setattr__(self, "dimensions", _vec3(self.dimensions, "ego.dimension_m"))
        object.__setattr__(self, "velocity", _vec3(self.velocity, "ego.velocity_mps"))
        object.__setattr__(self, "position", _vec3(self.position, "ego.position_m"))
        if self.label != EGO_LABEL:
            raise InvariantViolation("ego.label", self.label, EGO_LABEL)
        if any(c != 0.0 for c in self.position):
            raise InvariantViolation("ego.position_m", self.position, (0.0, 0.0, 0.0))
        if self.distance != 0.0:
            raise InvariantViolation("ego.distance_m", self.distance, 0.0)
        if not all(c > 0.0 for c in self.dimensions):
            raise InvariantViolation("ego.dimension_m", self.dimensions, "all > 0")
        _check_close("ego.speed_mps", float(self.speed), norm3(self.velocity))

    @classmethod
    def from_velocity(cls, dimensions: Sequence[float], velocity: Sequence[float]) -> "EgoState":
        return cls(dimensions=tuple(dimensions), velocity=tuple(velocity), speed=norm3(velocity))


@dataclass(frozen=True)
class Obstacle:
    label: str
    partition: Partition
    position: Vec3
    distance: float
    velocity: Vec3
    speed: float

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "obstacle.position_m"))
        object.__setattr__(self, "velocity", _vec3(self.velocity, "obstacle.velocity_mps"))
        object.__setattr__(self, "partition", Partition(self.partition))
        _check_label("obstacle.label", self.label)
        _check_close("obstacle.distance_m", float(self.distance), norm3(self.position))
        _check_close("obstacle.speed_mps", float(self.speed), norm3(self.velocity))
        if self.distance > 50.0 + _SLACK_EPS:
            raise InvariantViolation("obstacle.distance_m", self.distance, "<= 50.0")
        expected = partition_of(self.position)
        if self.partition is not expected:
            raise InvariantViolation("obstacle.partition", self.partition.value, expected.value)

    @classmethod
    def from_kinematics(cls, label: str, position: Sequence[float], velocity: Sequence[float]) -> "Obstacle":
        """Build an obstacle, deriving distance, speed and partition."""
        return cls(
            label=label,
            partition=partition_of(position),
            position=tuple(position),
            distance=norm3(position),
            velocity=tuple(velocity),
            speed=norm3(velocity),
        )

    def sort_key(self):
        return (self.distance, self.label, self.position[0])


@dataclass(frozen=True)
class SceneDescription:
    ego: EgoState
    obstacles: Tuple[Obstacle, ...] = ()
    frame_id: str = "frame"

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        _check_label("frame_id", self.frame_id)
        keys = [o.sort_key() for o in self.obstacles]
        if keys != sorted(keys):
            raise InvariantViolation("obstacles", "unordered", "ascending by (distance, label, x)")

    @classmethod
    def build(cls, ego: EgoState, obstacles: Iterable[Obstacle], frame_id: str) -> "SceneDescription":
        """Construct a scene, sorting obstacles into file order."""
        return cls(ego=ego, obstacles=tuple(sorted(obstacles, key=Obstacle.sort_key)), frame_id=frame_id)


def quantize_scene(scene: SceneDescription) -> SceneDescription:
    """Return the scene as it reads back from text.

    Vector fields are rounded to two decimals; distance, speed and partition
    are re-derived from the rounded vectors and obstacles are re-sorted, since
    rounding can reorder near-ties.
    """
    ego = scene.ego
    ego_v = _q2v(ego.velocity)
    qego = EgoState(dimensions=_q2v(ego.dimensions), velocity=ego_v, speed=q2(norm3(ego_v)))
    obstacles = []
    for o in scene.obstacles:
        pos, vel = _q2v(o.position), _q2v(o.velocity)
        obstacles.append(
            Obstacle(
                label=o.label,
                partition=partition_of(pos),
                position=pos,
                distance=q2(norm3(pos)),
                velocity=vel,
                speed=q2(norm3(vel)),
            )
        )
    return SceneDescription.build(qego, obstacles, scene.frame_id)


def _fmt(value: float) -> str:
    return f"{q2(value):.2f}"


def _fmt3(v: Sequence[float]) -> str:
    return " ".join(_fmt(c) for c in v)


def serialize_scene(scene: SceneDescription) -> str:
    """Render ``scene`` in the versioned line format (LF endings, two decimals)."""
    s = quantize_scene(scene)
    lines = [
        HEADER,
        f"frame_id: {s.frame_id}",
        "[ego_vehicle]",
        f"label: {EGO_LABEL}",
        f"dimension_m: {_fmt3(s.ego.dimensions)}",
        "position_m: 0.00 0.00 0.00",
        "distance_m: 0.00",
        f"velocity_mps: {_fmt3(s.ego.velocity)}",
        f"speed_mps: {_fmt(s.ego.speed)}",
        f"obstacle_count: {len(s.obstacles)}",
    ]
    for i, o in enumerate(s.obstacles, start=1):
        lines += [
            f"[obstacle {i}]",
            f"label: {o.label}",
            f"partition: {o.partition.value}",
            f"position_m: {_fmt3(o.position)}",
            f"distance_m: {_fmt(o.distance)}",
            f"velocity_mps: {_fmt3(o.velocity)}",
            f"speed_mps: {_fmt(o.speed)}",
        ]
    return "\n".join(lines) + "\n"


_NUM = r"-?(?:0|[1-9]\d*)\.\d{2}"
_NUM_RE = re.compile(_NUM)
_VEC_RE = re.compile(rf"{_NUM} {_NUM} {_NUM}")
_COUNT_RE = re.compile(r"0|[1-9]\d*")


class _Lines:
    def __init__(self, text: str):
        if not text:
            raise SceneSyntaxError(1, "empty input")
        if "\r" in text:
            raise SceneSyntaxError(text[: text.index("\r")].count("\n") + 1, "carriage return; LF line endings required")
        if not text.endswith("\n"):
            raise SceneSyntaxError(text.count("\n") + 1, "missing final newline")
        self.lines = text[:-1].split("\n")
        self.pos = 0

    def next(self) -> Tuple[int, str]:
        if self.pos >= len(self.lines):
            raise SceneSyntaxError(len(self.lines) + 1, "unexpected end of input")
        self.pos += 1
        return self.pos, self.lines[self.pos - 1]

    def literal(self, expected: str) -> None:
        no, line = self.next()
        if line != expected:
            raise SceneSyntaxError(no, f"expected {expected!r}, got {line!r}")

    def field(self, key: str) -> Tuple[int, str]:
        no, line = self.next()
        prefix = f"{key}: "
        if not line.startswith(prefix):
            raise SceneSyntaxError(no, f"expected field {key!r}, got {line!r}")
        value = line[len(prefix):]
        if not value or value != value.strip():
            raise SceneSyntaxError(no, f"bad value for {key!r}: {value!r}")
        return no, value

    def number(self, key: str) -> float:
        no, value = self.field(key)
        if not _NUM_RE.fullmatch(value):
            raise SceneSyntaxError(no, f"{key}: expected a two-decimal number, got {value!r}")
        if value == "-0.00":
            raise SceneSyntaxError(no, f"{key}: negative zero is not canonical")
        return float(value)

    def vector(self, key: str) -> Vec3:
        no, value = self.field(key)
        if not _VEC_RE.fullmatch(value):
            raise SceneSyntaxError(no, f"{key}: expected three two-decimal numbers, got {value!r}")
        parts = value.split(" ")
        if "-0.00" in parts:
            raise SceneSyntaxError(no, f"{key}: negative zero is not canonical")
        return tuple(float(p) for p in parts)  # type: ignore[return-value]


def parse_scene(text: str) -> SceneDescription:
    """Parse scene text produced by :func:`serialize_scene`.

    Raises:
        SceneSyntaxError: on any structural or lexical deviation.
        InvariantViolation: when numbers disagree with each other beyond
            what two-decimal rounding explains, or obstacles are out of order.
    """
    r = _Lines(text)
    r.literal(HEADER)
    _, frame_id = r.field("frame_id")
    r.literal("[ego_vehicle]")
    r.literal(f"label: {EGO_LABEL}")
    dims = r.vector("dimension_m")
    pos = r.vector("position_m")
    dist = r.number("distance_m")
    vel = r.vector("velocity_mps")
    speed = r.number("speed_mps")
    no, count_text = r.field("obstacle_count")
    if not _COUNT_RE.fullmatch(count_text):
        raise SceneSyntaxError(no, f"obstacle_count: expected a non-negative integer, got {count_text!r}")
    count = int(count_text)

    ego = EgoState(dimensions=dims, velocity=vel, speed=speed, position=pos, distance=dist)

    obstacles = []
    for i in range(1, count + 1):
        r.literal(f"[obstacle {i}]")
        _, label = r.field("label")
        no, part_text = r.field("partition")
        try:
            partition = Partition(part_text)
        except ValueError:
            raise SceneSyntaxError(no, f"unknown partition {part_text!r}") from None
        opos = r.vector("position_m")
        odist = r.number("distance_m")
        ovel = r.vector("velocity_mps")
        ospeed = r.number("speed_mps")
        if opos[0] == 0.0 and opos[1] == 0.0:
            raise InvariantViolation(f"obstacle {i}.position_m", opos, "nonzero (x, y)")
        try:
            obstacle = Obstacle(label, partition, opos, odist, ovel, ospeed)
        except InvariantViolation as exc:
            raise InvariantViolation(f"obstacle {i}: {exc.field}", exc.got, exc.expected) from None
        obstacles.append(obstacle)

    if r.pos != len(r.lines):
        raise SceneSyntaxError(r.pos + 1, "trailing content after last obstacle")
    return SceneDescription(ego=ego, obstacles=tuple(obstacles), frame_id=frame_id)
