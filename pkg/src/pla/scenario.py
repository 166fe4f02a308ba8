"""Frame bundle format and the synthetic construction-zone following scenario.

Randomness comes from numpy's PCG64 bit generator seeded with
``ScenarioParams.seed``; draws happen in a fixed order per frame and object,
so equal params always give byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from .perception import LidarDetection, RadarPoint, to_ego_frame

FORMAT_VERSION = "pla-frames/1"
CAMERA_NAMES = (
    "CAM_FRONT",
    "CAM_FRONT_RIGHT",
    "CAM_BACK_RIGHT",
    "CAM_BACK",
    "CAM_BACK_LEFT",
    "CAM_FRONT_LEFT",
    "FRONT_OVERLAY",
)
EGO_DIMENSIONS = (3.99, 2.06, 1.84)


class SchemaError(ValueError):
    def __init__(self, path, field: str, reason: str = "missing or invalid"):
        self.path = str(path)
        self.field = field
        super().__init__(f"{path}: {field}: {reason}")


class FrameIOError(OSError):
    pass


@dataclass(frozen=True)
class EgoPose:
    position: Tuple[float, float, float]
    yaw: float  # rad, global
    velocity: Tuple[float, float, float]  # global
    dimensions: Tuple[float, float, float] = EGO_DIMENSIONS
    steer: float = 0.0  # current front-wheel angle, rad, left positive


@dataclass(frozen=True)
class GroundTruth:
    waypoints: Tuple[Tuple[float, float], ...]  # ego frame, every dt from t = dt
    speed: float  # m/s at horizon end
    steering: float  # rad at horizon end, left positive

    @property
    def steering_deg(self) -> float:
        return math.degrees(self.steering)


@dataclass(frozen=True)
class FrameBundle:
    frame_id: str
    timestamp: int  # microseconds
    ego: EgoPose
    radar_points: Tuple[RadarPoint, ...] = ()
    lidar_detections: Tuple[LidarDetection, ...] = ()
    camera_images: Tuple[Tuple[str, str], ...] = ()
    ground_truth: Optional[GroundTruth] = None


@dataclass(frozen=True)
class ScenarioParams:
    seed: int = 42
    frame_count: int = 40
    frame_interval: float = 0.5  # s
    ego_initial_speed: float = 8.28  # m/s
    # Ego speed eases down by speed_dip and back over speed_period seconds.
    speed_dip: float = 2.5
    speed_period: float = 20.0
    # The lead vehicle drives the ego path lead_headway seconds ahead of the ego.
    lead_headway: float = 2.5
    pedestrian_start: Tuple[float, float] = (38.0, -12.0)
    pedestrian_velocity: Tuple[float, float] = (0.0, 1.26)
    barrier_xs: Tuple[float, ...] = (65.0, 70.0, 75.0, 80.0, 85.0, 90.0, 95.0, 100.0, 105.0)
    barrier_y: float = -1.2
    # Leftward lane shift past the construction zone.
    lane_shift: float = 1.5
    shift_start: float = 50.0
    shift_end: float = 110.0
    shift_length: float = 25.0
    radar_sigma: float = 0.1  # m on position, m/s on velocity
    dropout: float = 0.05
    # Placement of the scenario's local frame in the global frame.
    origin: Tuple[float, float] = (400.0, 1100.0)
    origin_yaw: float = 0.4
    gt_dt: float = 0.1
    gt_horizon: float = 1.0
    wheelbase: float = 2.7

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.radar_sigma < 0:
            raise ValueError("radar_sigma must be >= 0")
        if not 0.0 <= self.dropout <= 1.0:
            raise ValueError("dropout must be within [0, 1]")
        if self.frame_interval <= 0 or self.gt_dt <= 0 or self.gt_horizon <= 0:
            raise ValueError("time steps must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario params: {sorted(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kwargs)


# --- scripted kinematics (scenario-local frame, x along the road) ---------


def _smoothstep(u: float) -> Tuple[float, float, float]:
    """Value, first and second derivative of 3u^2 - 2u^3 clamped to [0, 1]."""
    if u <= 0.0:
        return 0.0, 0.0, 0.0
    if u >= 1.0:
        return 1.0, 0.0, 0.0
    return 3 * u * u - 2 * u ** 3, 6 * u - 6 * u * u, 6 - 12 * u


class _Script:
    def __init__(self, p: ScenarioParams):
        self.p = p
        self.omega = 2 * math.pi / p.speed_period

    def lane(self, x: float) -> Tuple[float, float, float]:
        """Lateral path offset y(x) and its first two derivatives."""
        p = self.p
        a = _smoothstep((x - p.shift_start) / p.shift_length)
        b = _smoothstep((x - p.shift_end) / p.shift_length)
        d = p.shift_length
        return (
            p.lane_shift * (a[0] - b[0]),
            p.lane_shift * (a[1] - b[1]) / d,
            p.lane_shift * (a[2] - b[2]) / (d * d),
        )

    def progress(self, t: float) -> Tuple[float, float]:
        """Longitudinal position X(t) and rate dX/dt."""
        p, w = self.p, self.omega
        x = p.ego_initial_speed * t - 0.5 * p.speed_dip * (t - math.sin(w * t) / w)
        v = p.ego_initial_speed - 0.5 * p.speed_dip * (1 - math.cos(w * t))
        return x, v

    def state(self, t: float):
        """Local-frame (x, y, heading, vx, vy, speed, steer) on the ego path."""
        x, xd = self.progress(t)
        y, dy, ddy = self.lane(x)
        heading = math.atan(dy)
        curvature = ddy / (1 + dy * dy) ** 1.5
        steer = math.atan(self.p.wheelbase * curvature)
        speed = xd * math.sqrt(1 + dy * dy)
        return x, y, heading, xd, dy * xd, speed, steer


def _to_global(p: ScenarioParams, x: float, y: float) -> Tuple[float, float]:
    c, s = math.cos(p.origin_yaw), math.sin(p.origin_yaw)
    return (p.origin[0] + c * x - s * y, p.origin[1] + s * x + c * y)


def _vel_to_global(p: ScenarioParams, vx: float, vy: float) -> Tuple[float, float]:
    c, s = math.cos(p.origin_yaw), math.sin(p.origin_yaw)
    return (c * vx - s * vy, s * vx + c * vy)


@dataclass(frozen=True)
class _Body:
    label: str
    x: float
    y: float
    z: float
    yaw: float
    vx: float
    vy: float
    size: Tuple[float, float, float]
    radar_points: int  # 0 for static objects


def _perimeter_points(body: _Body, rng: np.random.Generator, sigma: float) -> List[RadarPoint]:
    """Evenly spaced points around the box footprint, random phase and height."""
    length, width, height = body.size
    perimeter = 2 * (length + width)
    n = body.radar_points
    phase = rng.random()
    heights = rng.random(n)
    noise = rng.normal(0.0, 1.0, size=(n, 5)) * sigma
    c, s = math.cos(body.yaw), math.sin(body.yaw)
    corners = [(length / 2, width / 2), (-length / 2, width / 2), (-length / 2, -width / 2), (length / 2, -width / 2)]
    edges = [length, width, length, width]
    out = []
    for k in range(n):
        d = (k + phase) / n * perimeter
        i = 0
        while d > edges[i] and i < 3:
            d -= edges[i]
            i += 1
        (ax, ay), (bx, by) = corners[i], corners[(i + 1) % 4]
        f = min(d / edges[i], 1.0)
        lx, ly = ax + (bx - ax) * f, ay + (by - ay) * f
        gx = body.x + c * lx - s * ly + noise[k, 0]
        gy = body.y + s * lx + c * ly + noise[k, 1]
        gz = body.z + (heights[k] - 0.5) * height + noise[k, 2]
        out.append(RadarPoint((float(gx), float(gy), float(gz)), (float(body.vx + noise[k, 3]), float(body.vy + noise[k, 4]))))
    return out


def _bodies(p: ScenarioParams, script: _Script, t: float) -> List[_Body]:
    bodies = []
    lx, ly, lh, lvx, lvy, _, _ = script.state(t + p.lead_headway)
    gx, gy = _to_global(p, lx, ly)
    gvx, gvy = _vel_to_global(p, lvx, lvy)
    bodies.append(_Body("vehicle.car", gx, gy, 0.8, lh + p.origin_yaw, gvx, gvy, (4.6, 1.9, 1.6), 16))

    px = p.pedestrian_start[0] + p.pedestrian_velocity[0] * t
    py = p.pedestrian_start[1] + p.pedestrian_velocity[1] * t
    gx, gy = _to_global(p, px, py)
    gvx, gvy = _vel_to_global(p, *p.pedestrian_velocity)
    ped_yaw = math.atan2(p.pedestrian_velocity[1], p.pedestrian_velocity[0]) + p.origin_yaw
    bodies.append(_Body("human.pedestrian.adult", gx, gy, 0.86, ped_yaw, gvx, gvy, (0.7, 0.7, 1.75), 4))

    for bx in p.barrier_xs:
        gx, gy = _to_global(p, bx, p.barrier_y)
        bodies.append(_Body("movable_object.barrier", gx, gy, 0.5, p.origin_yaw, 0.0, 0.0, (1.0, 0.3, 1.0), 0))
    return bodies


def generate_following_scenario(params: ScenarioParams = ScenarioParams()) -> List[FrameBundle]:
    """Ego follows a lead car through an intersection past a construction zone.

    The lane shifts left around a row of barriers and a pedestrian crosses
    ahead.  Ground truth is the ego's own scripted future motion.
    """
    p = params
    rng = np.random.Generator(np.random.PCG64(p.seed))
    script = _Script(p)
    n_gt = round(p.gt_horizon / p.gt_dt)
    frames = []
    for k in range(p.frame_count):
        t = k * p.frame_interval
        ex, ey, eh, evx, evy, _, esteer = script.state(t)
        gpos = (*_to_global(p, ex, ey), 0.0)
        gyaw = eh + p.origin_yaw
        ego = EgoPose(
            position=gpos,
            yaw=gyaw,
            velocity=(*_vel_to_global(p, evx, evy), 0.0),
            dimensions=EGO_DIMENSIONS,
            steer=esteer,
        )

        radar, detections = [], []
        for body in _bodies(p, script, t):
            dropped = rng.random() < p.dropout
            if body.radar_points:
                radar.extend(_perimeter_points(body, rng, p.radar_sigma))
            if not dropped:
                detections.append(
                    LidarDetection(body.label, (body.x, body.y, body.z), body.size, body.yaw, (body.vx, body.vy, 0.0))
                )

        waypoints = []
        for j in range(1, n_gt + 1):
            fx, fy, *_ = script.state(t + j * p.gt_dt)
            wx, wy, _ = to_ego_frame(gpos, gyaw, (*_to_global(p, fx, fy), 0.0))
            waypoints.append((wx, wy))
        *_, end_speed, end_steer = script.state(t + p.gt_horizon)

        fid = f"f{k:02d}"
        frames.append(
            FrameBundle(
                frame_id=fid,
                timestamp=round(t * 1_000_000),
                ego=ego,
                radar_points=tuple(radar),
                lidar_detections=tuple(detections),
                camera_images=tuple((name, f"images/{fid}/{name}.jpg") for name in CAMERA_NAMES),
                ground_truth=GroundTruth(tuple(waypoints), end_speed, end_steer),
            )
        )
    return frames


def sample_frame() -> FrameBundle:
    """One frame: ego at 8.28 m/s, a pedestrian ahead-right and a truck behind.

    Placed at an arbitrary global pose so that fusing it exercises the full
    frame transform.  The pedestrian carries only a LiDAR velocity annotation;
    the truck also has radar returns.
    """
    pos, yaw = (312.4, -87.1, 0.0), 0.6
    c, s = math.cos(yaw), math.sin(yaw)

    def world(x: float, y: float, z: float) -> Tuple[float, float, float]:
        return (pos[0] + c * x - s * y, pos[1] + s * x + c * y, pos[2] + z)

    def world_v(vx: float, vy: float, vz: float) -> Tuple[float, float, float]:
        return (c * vx - s * vy, s * vx + c * vy, vz)

    truck_v = world_v(5.1, 0.2, 0.0)
    truck_c = world(-14.3, 3.6, 1.7)
    radar = tuple(
        RadarPoint((truck_c[0] + dx, truck_c[1] + dy, 0.9), truck_v[:2]) for dx, dy in ((0.5, 0.3), (-0.5, 0.3), (0.5, -0.3), (-0.5, -0.3))
    )
    return FrameBundle(
        frame_id="sample",
        timestamp=0,
        ego=EgoPose(position=pos, yaw=yaw, velocity=world_v(8.28, 0.0, 0.0), dimensions=EGO_DIMENSIONS),
        radar_points=radar,
        lidar_detections=(
            LidarDetection("human.pedestrian.adult", world(25.17, -21.64, 0.86), (0.7, 0.7, 1.75), yaw, world_v(1.26, -0.06, -0.03)),
            LidarDetection("vehicle.truck", truck_c, (7.5, 2.6, 3.4), yaw, None),
        ),
        camera_images=tuple((name, f"images/sample/{name}.jpg") for name in CAMERA_NAMES),
        ground_truth=None,
    )


# --- JSON I/O --------------------------------------------------------------


def _frame_to_json(f: FrameBundle) -> dict:
    gt = f.ground_truth
    return {
        "frame_id": f.frame_id,
        "timestamp": f.timestamp,
        "ego": {
            "position": list(f.ego.position),
            "yaw": f.ego.yaw,
            "velocity": list(f.ego.velocity),
            "dimensions": list(f.ego.dimensions),
            "steer": f.ego.steer,
        },
        "radar_points": [{"position": list(r.position), "velocity": list(r.velocity)} for r in f.radar_points],
        "lidar_detections": [
            {
                "label": d.label,
                "center": list(d.center),
                "size": list(d.size),
                "yaw": d.yaw,
                "velocity": None if d.velocity is None else list(d.velocity),
            }
            for d in f.lidar_detections
        ],
        "camera_images": [{"name": n, "path": path} for n, path in f.camera_images],
        "ground_truth": None
        if gt is None
        else {"waypoints": [list(w) for w in gt.waypoints], "speed": gt.speed, "steering": gt.steering},
    }


def dumps_frames(frames: Sequence[FrameBundle]) -> str:
    """One frame per line; ``indent=`` would drop json to its slow pure-Python encoder."""
    body = ",\n".join(json.dumps(_frame_to_json(f), ensure_ascii=False) for f in frames)
    return f'{{"version": {json.dumps(FORMAT_VERSION)}, "frames": [\n{body}\n]}}\n'


def save_frames(frames: Sequence[FrameBundle], path) -> None:
    try:
        Path(path).write_text(dumps_frames(frames), encoding="utf-8")
    except OSError as exc:
        raise FrameIOError(f"cannot write {path}: {exc}") from exc


class _Reader:
    def __init__(self, path):
        self.path = path

    def get(self, obj: Any, key: str, where: str):
        if not isinstance(obj, dict) or key not in obj:
            raise SchemaError(self.path, f"{where}.{key}" if where else key)
        return obj[key]

    def num(self, obj, key, where) -> float:
        v = self.get(obj, key, where)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SchemaError(self.path, f"{where}.{key}", "expected a finite number")
        return float(v)

    def vec(self, obj, key, where, n: int) -> tuple:
        v = self.get(obj, key, where)
        if (
            not isinstance(v, list)
            or len(v) != n
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) or not math.isfinite(c) for c in v)
        ):
            raise SchemaError(self.path, f"{where}.{key}", f"expected {n} finite numbers")
        return tuple(float(c) for c in v)

    def string(self, obj, key, where) -> str:
        v = self.get(obj, key, where)
        if not isinstance(v, str) or not v:
            raise SchemaError(self.path, f"{where}.{key}", "expected a non-empty string")
        return v

    def items(self, obj, key, where) -> list:
        v = self.get(obj, key, where)
        if not isinstance(v, list):
            raise SchemaError(self.path, f"{where}.{key}", "expected a list")
        return v

    def frame(self, raw, where: str) -> FrameBundle:
        ego_raw = self.get(raw, "ego", where)
        ew = f"{where}.ego"
        ego = EgoPose(
            position=self.vec(ego_raw, "position", ew, 3),
            yaw=self.num(ego_raw, "yaw", ew),
            velocity=self.vec(ego_raw, "velocity", ew, 3),
            dimensions=self.vec(ego_raw, "dimensions", ew, 3),
            steer=self.num(ego_raw, "steer", ew) if isinstance(ego_raw, dict) and "steer" in ego_raw else 0.0,
        )
        radar = []
        for i, r in enumerate(self.items(raw, "radar_points", where)):
            w = f"{where}.radar_points[{i}]"
            radar.append(RadarPoint(self.vec(r, "position", w, 3), self.vec(r, "velocity", w, 2)))
        dets = []
        for i, d in enumerate(self.items(raw, "lidar_detections", where)):
            w = f"{where}.lidar_detections[{i}]"
            vel = self.get(d, "velocity", w)
            size = self.vec(d, "size", w, 3)
            if not all(c > 0 for c in size):
                raise SchemaError(self.path, f"{w}.size", "sizes must be positive")
            dets.append(
                LidarDetection(
                    self.string(d, "label", w),
                    self.vec(d, "center", w, 3),
                    size,
                    self.num(d, "yaw", w),
                    None if vel is None else self.vec(d, "velocity", w, 3),
                )
            )
        cams = []
        for i, c in enumerate(self.items(raw, "camera_images", where)):
            w = f"{where}.camera_images[{i}]"
            cams.append((self.string(c, "name", w), self.string(c, "path", w)))
        gt_raw = self.get(raw, "ground_truth", where)
        gt = None
        if gt_raw is not None:
            gw = f"{where}.ground_truth"
            wps = []
            for i, _ in enumerate(self.items(gt_raw, "waypoints", gw)):
                wps.append(self.vec({"wp": gt_raw["waypoints"][i]}, "wp", f"{gw}.waypoints[{i}]", 2))
            gt = GroundTruth(tuple(wps), self.num(gt_raw, "speed", gw), self.num(gt_raw, "steering", gw))
        ts = self.get(raw, "timestamp", where)
        if isinstance(ts, bool) or not isinstance(ts, int):
            raise SchemaError(self.path, f"{where}.timestamp", "expected an integer (microseconds)")
        return FrameBundle(
            frame_id=self.string(raw, "frame_id", where),
            timestamp=ts,
            ego=ego,
            radar_points=tuple(radar),
            lidar_detections=tuple(dets),
            camera_images=tuple(cams),
            ground_truth=gt,
        )


def loads_frames(text: str, path="<string>") -> List[FrameBundle]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(path, "<document>", f"invalid JSON: {exc}") from None
    reader = _Reader(path)
    version = reader.get(doc, "version", "")
    if version != FORMAT_VERSION:
        raise SchemaError(path, "version", f"expected {FORMAT_VERSION!r}, got {version!r}")
    frames = [reader.frame(raw, f"frames[{i}]") for i, raw in enumerate(reader.items(doc, "frames", ""))]
    for i in range(1, len(frames)):
        if frames[i].timestamp <= frames[i - 1].timestamp:
            raise SchemaError(path, f"frames[{i}].timestamp", "timestamps must be strictly increasing")
    ids = [f.frame_id for f in frames]
    if len(set(ids)) != len(ids):
        raise SchemaError(path, "frames.frame_id", "frame ids must be unique")
    return frames


def load_frames(path) -> List[FrameBundle]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FrameIOError(f"cannot read {path}: {exc}") from exc
    return loads_frames(text, path)
