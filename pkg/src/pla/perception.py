"""Radar clustering, LiDAR/radar association and ego-frame fusion."""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .scene import EgoState, Obstacle, SceneDescription, Vec3, norm3, q2

logger = logging.getLogger(__name__)

Vec2 = Tuple[float, float]


class EmptyCluster(ValueError):
    pass


class InvalidPose(ValueError):
    pass


@dataclass(frozen=True)
class RadarPoint:
    position: Vec3
    velocity: Vec2  # planar, m/s

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (*self.position, *self.velocity)):
            raise ValueError(f"non-finite radar point {self!r}")


@dataclass(frozen=True)
class RadarObject:
    centroid: Vec3
    extent: Vec3
    mean_velocity: Vec3
    member_count: int


@dataclass(frozen=True)
class LidarDetection:
    label: str
    center: Vec3
    size: Vec3
    yaw: float
    velocity: Optional[Vec3] = None

    def __post_init__(self):
        if not all(s > 0.0 for s in self.size):
            raise ValueError(f"detection size must be positive, got {self.size}")


@dataclass(frozen=True)
class FusionConfig:
    cluster_radius: float = 1.5
    min_points: int = 2
    association_gate: float = 2.0
    inclusion_radius: float = 50.0

    def __post_init__(self):
        for name in ("cluster_radius", "min_points", "association_gate", "inclusion_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"FusionConfig.{name} must be > 0, got {getattr(self, name)!r}")


def euclidean_cluster(points: Sequence[RadarPoint], radius: float, min_points: int) -> List[List[int]]:
    """Group points into connected components under a distance threshold.

    Two points are linked when their 3-D distance is at most ``radius``.
    Components with fewer than ``min_points`` members are dropped.  Each
    cluster is a sorted index list; clusters are ordered by their smallest
    index.
    """
    if radius <= 0 or min_points < 1:
        raise ValueError("radius must be > 0 and min_points >= 1")
    n = len(points)
    if n == 0:
        return []
    xyz = np.array([p.position for p in points], dtype=float)
    tree = cKDTree(xyz)
    r2 = radius * radius
    visited = np.zeros(n, dtype=bool)
    clusters = []
    for seed in range(n):
        if visited[seed]:
            continue
        visited[seed] = True
        members = [seed]
        queue = deque([seed])
        while queue:
            j = queue.popleft()
            # Slightly widened query, then the exact predicate.
            for k in tree.query_ball_point(xyz[j], radius * (1.0 + 1e-9) + 1e-12):
                if visited[k]:
                    continue
                d = xyz[k] - xyz[j]
                if float(d @ d) <= r2:
                    visited[k] = True
                    members.append(k)
                    queue.append(k)
        if len(members) >= min_points:
            clusters.append(sorted(members))
    return clusters


def fit_cluster(points: Sequence[RadarPoint]) -> RadarObject:
    """Fit an axis-aligned box and mean planar velocity to a point group."""
    if not points:
        raise EmptyCluster("cannot fit an empty cluster")
    xyz = np.array([p.position for p in points], dtype=float)
    vel = np.array([p.velocity for p in points], dtype=float)
    centroid = xyz.mean(axis=0)
    extent = xyz.max(axis=0) - xyz.min(axis=0)
    mean_v = vel.mean(axis=0)
    return RadarObject(
        centroid=tuple(float(c) for c in centroid),
        extent=tuple(float(c) for c in extent),
        mean_velocity=(float(mean_v[0]), float(mean_v[1]), 0.0),
        member_count=len(points),
    )


def cluster_radar(points: Sequence[RadarPoint], config: FusionConfig) -> List[RadarObject]:
    clusters = euclidean_cluster(points, config.cluster_radius, config.min_points)
    return [fit_cluster([points[i] for i in c]) for c in clusters]


def associate(
    detections: Sequence[LidarDetection],
    radar_objects: Sequence[RadarObject],
    gate: float,
) -> List[Tuple[int, Optional[int]]]:
    """Greedy globally-nearest matching of detections to radar objects.

    The closest unmatched (detection, radar object) pair within ``gate`` is
    matched first, repeatedly.  Returns one ``(detection_index, radar_index)``
    entry per detection in input order; ``radar_index`` is None when
    unmatched.  Ties are broken on radar object content, not list position,
    so the match set does not depend on radar list order.
    """
    if gate <= 0:
        raise ValueError("gate must be > 0")
    candidates = []
    for i, det in enumerate(detections):
        for j, obj in enumerate(radar_objects):
            d = math.dist(det.center, obj.centroid)
            if d <= gate:
                candidates.append((d, i, obj.centroid, obj.extent, obj.mean_velocity, j))
    candidates.sort()
    det_match: dict = {}
    used = set()
    for d, i, *_, j in candidates:
        if i in det_match or j in used:
            continue
        det_match[i] = j
        used.add(j)
    return [(i, det_match.get(i)) for i in range(len(detections))]


def rotate_into(yaw: float, vx: float, vy: float) -> Vec2:
    """Express a global planar vector in a frame rotated by ``yaw``."""
    c, s = math.cos(yaw), math.sin(yaw)
    return (c * vx + s * vy, -s * vx + c * vy)


def to_ego_frame(ego_position: Sequence[float], ego_yaw: float, point: Sequence[float]) -> Vec3:
    dx = point[0] - ego_position[0]
    dy = point[1] - ego_position[1]
    x, y = rotate_into(ego_yaw, dx, dy)
    return (x, y, point[2] - ego_position[2])


def fuse_frame(
    ego_pose: Tuple[Sequence[float], float],
    ego_velocity: Sequence[float],
    detections: Sequence[LidarDetection],
    radar_objects: Sequence[RadarObject],
    config: FusionConfig = FusionConfig(),
    ego_dimensions: Sequence[float] = (3.99, 2.06, 1.84),
    frame_id: str = "frame",
) -> SceneDescription:
    """Fuse global-frame detections and radar objects into an ego-frame scene.

    Obstacle velocity comes from the associated radar object when there is
    one, else the detection's own annotation, else zero.  Obstacles beyond
    ``config.inclusion_radius`` (3-D) are dropped.
    """
    position, yaw = ego_pose
    yaw = float(yaw)
    if not math.isfinite(yaw) or not all(math.isfinite(float(c)) for c in position):
        raise InvalidPose(f"non-finite ego pose {tuple(position)}, yaw={yaw}")

    evx, evy = rotate_into(yaw, ego_velocity[0], ego_velocity[1])
    ego = EgoState.from_velocity(ego_dimensions, (evx, evy, float(ego_velocity[2])))

    matches = associate(detections, radar_objects, config.association_gate)
    obstacles = []
    for i, j in matches:
        det = detections[i]
        pos = to_ego_frame(position, yaw, det.center)
        dist = norm3(pos)
        # Also checked after rounding so the printed distance never exceeds the radius.
        if dist > config.inclusion_radius or q2(norm3([q2(c) for c in pos])) > config.inclusion_radius:
            continue
        if q2(pos[0]) == 0.0 and q2(pos[1]) == 0.0:
            logger.debug("frame %s: dropping %s coincident with ego origin", frame_id, det.label)
            continue
        if j is not None:
            gvx, gvy, _ = radar_objects[j].mean_velocity
            vel = (*rotate_into(yaw, gvx, gvy), 0.0)
        elif det.velocity is not None:
            vel = (*rotate_into(yaw, det.velocity[0], det.velocity[1]), float(det.velocity[2]))
        else:
            vel = (0.0, 0.0, 0.0)
        obstacles.append(Obstacle.from_kinematics(det.label, pos, vel))
    return SceneDescription.build(ego, obstacles, frame_id)
