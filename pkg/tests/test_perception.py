import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import connected_components, lexicographic_greedy_matching
from pla.perception import (
    EmptyCluster,
    FusionConfig,
    InvalidPose,
    LidarDetection,
    RadarObject,
    RadarPoint,
    associate,
    cluster_radar,
    euclidean_cluster,
    fit_cluster,
    fuse_frame,
    to_ego_frame,
)
from pla.scene import Partition, norm3, parse_scene, serialize_scene


def pts(*coords, v=(0.0, 0.0)):
    return [RadarPoint(tuple(float(a) for a in c), v) for c in coords]


def as_sets(clusters):
    return sorted(tuple(sorted(c)) for c in clusters)


def random_points(rng, n, spread):
    return [RadarPoint((rng.uniform(0, spread), rng.uniform(0, spread), rng.uniform(0, 1)), (0.0, 0.0)) for _ in range(n)]


# clustering


def test_cluster_empty():
    assert euclidean_cluster([], 1.0, 2) == []


def test_cluster_two_groups():
    rng = random.Random(0)
    a = [(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 0) for _ in range(5)]
    b = [(10 + rng.uniform(-0.2, 0.2), 10 + rng.uniform(-0.2, 0.2), 0) for _ in range(5)]
    clusters = euclidean_cluster(pts(*a, *b), 1.0, 2)
    assert as_sets(clusters) == [tuple(range(5)), tuple(range(5, 10))]


def test_cluster_singleton():
    assert euclidean_cluster(pts((1, 2, 3)), 1.0, 1) == [[0]]
    assert euclidean_cluster(pts((1, 2, 3)), 1.0, 2) == []


def test_cluster_chain_is_transitive():
    # Neighbours at exactly the radius link; the ends are far apart.
    chain = pts(*[(i * 1.0, 0, 0) for i in range(6)])
    assert euclidean_cluster(chain, 1.0, 2) == [list(range(6))]


def test_cluster_matches_oracle():
    rng = random.Random(5)
    for _ in range(30):
        points = random_points(rng, rng.randrange(1, 150), rng.uniform(5, 40))
        radius = rng.uniform(0.3, 3.0)
        min_points = rng.randrange(1, 4)
        expected = [g for g in connected_components([p.position for p in points], radius) if len(g) >= min_points]
        assert as_sets(euclidean_cluster(points, radius, min_points)) == as_sets(expected)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.2, 4.0))
def test_cluster_permutation_invariant(seed, radius):
    rng = random.Random(seed)
    points = random_points(rng, rng.randrange(0, 80), 15)
    perm = list(range(len(points)))
    rng.shuffle(perm)
    shuffled = [points[i] for i in perm]
    base = as_sets(euclidean_cluster(points, radius, 2))
    mapped = as_sets([{perm[i] for i in c} for c in euclidean_cluster(shuffled, radius, 2)])
    assert base == mapped


def test_cluster_rejects_bad_params():
    with pytest.raises(ValueError):
        euclidean_cluster(pts((0, 0, 0)), 0.0, 1)


# fitting


def test_fit_two_points():
    obj = fit_cluster([RadarPoint((0, 0, 0), (1, 0)), RadarPoint((2, 0, 0), (3, 0))])
    assert obj.centroid == (1.0, 0.0, 0.0)
    assert obj.extent == (2.0, 0.0, 0.0)
    assert obj.mean_velocity == (2.0, 0.0, 0.0)
    assert obj.member_count == 2


def test_fit_singleton_and_square():
    assert fit_cluster(pts((4, 5, 6))).centroid == (4.0, 5.0, 6.0)
    assert fit_cluster(pts((4, 5, 6))).extent == (0.0, 0.0, 0.0)
    square = fit_cluster(pts((1, 1, 0), (-1, 1, 0), (-1, -1, 0), (1, -1, 0)))
    assert square.centroid == (0.0, 0.0, 0.0)


def test_fit_empty():
    with pytest.raises(EmptyCluster):
        fit_cluster([])


def test_radar_point_rejects_nan():
    with pytest.raises(ValueError):
        RadarPoint((math.nan, 0, 0), (0, 0))


# association


def det(x, y=0.0, z=0.0, label="vehicle.car", velocity=None):
    return LidarDetection(label, (x, y, z), (4.0, 2.0, 1.5), 0.0, velocity)


def radar(x, y=0.0, z=0.0, v=(0.0, 0.0)):
    return RadarObject((x, y, z), (0.5, 0.5, 0.0), (v[0], v[1], 0.0), 3)


def test_associate_examples():
    assert associate([det(5)], [radar(5.2)], 1.0) == [(0, 0)]
    assert associate([det(5)], [radar(5.2)], 0.1) == [(0, None)]
    assert associate([det(5), det(9)], [], 2.0) == [(0, None), (1, None)]


def test_associate_matches_exhaustive_oracle():
    rng = random.Random(9)
    for _ in range(200):
        dets = [det(rng.uniform(0, 8), rng.uniform(0, 8)) for _ in range(rng.randrange(0, 7))]
        rads = [radar(rng.uniform(0, 8), rng.uniform(0, 8)) for _ in range(rng.randrange(0, 7))]
        gate = rng.uniform(0.5, 4.0)
        got = {i: j for i, j in associate(dets, rads, gate) if j is not None}
        expected = lexicographic_greedy_matching([d.center for d in dets], [r.centroid for r in rads], gate)
        assert got == expected


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_associate_radar_order_symmetric(seed):
    rng = random.Random(seed)
    # A coarse grid makes exact distance ties common.
    dets = [det(rng.randrange(0, 5), rng.randrange(0, 5)) for _ in range(rng.randrange(1, 6))]
    rads = [radar(rng.randrange(0, 5) + 0.5, rng.randrange(0, 5)) for _ in range(rng.randrange(1, 6))]
    perm = list(range(len(rads)))
    rng.shuffle(perm)
    shuffled = [rads[k] for k in perm]
    base = {(i, rads[j].centroid) for i, j in associate(dets, rads, 1.5) if j is not None}
    other = {(i, shuffled[j].centroid) for i, j in associate(dets, shuffled, 1.5) if j is not None}
    assert base == other


# fusion


def test_fuse_reference_pedestrian():
    yaw = 0.6
    ego = (312.4, -87.1, 0.0)
    local = (25.17, -21.64, 0.86)
    c, s = math.cos(yaw), math.sin(yaw)
    center = (ego[0] + c * local[0] - s * local[1], ego[1] + s * local[0] + c * local[1], local[2])
    gvel = (c * 1.26 + s * 0.06, s * 1.26 - c * 0.06, -0.03)
    ped = LidarDetection("human.pedestrian.adult", center, (0.7, 0.7, 1.8), yaw, gvel)
    ego_v = (8.28 * c, 8.28 * s, 0.0)
    scene = fuse_frame((ego, yaw), ego_v, [ped], [])
    (o,) = scene.obstacles
    assert o.partition is Partition.FRONT_RIGHT
    assert round(o.distance, 2) == 33.20
    assert round(o.speed, 2) == 1.26
    for got, want in zip(o.position, local):
        assert got == pytest.approx(want, abs=1e-9)
    text = serialize_scene(scene)
    assert "distance_m: 33.20" in text and "speed_mps: 8.28" in text


def test_fuse_drops_far_detection():
    scene = fuse_frame(((0, 0, 0), 0.0), (5, 0, 0), [det(60.0), det(20.0)], [])
    assert [o.position[0] for o in scene.obstacles] == [20.0]


def test_fuse_radius_is_3d():
    # Planar distance 49.9, but 3-D distance above 50.
    scene = fuse_frame(((0, 0, 0), 0.0), (5, 0, 0), [det(49.9, 0, 4.0)], [])
    assert scene.obstacles == ()


def test_fuse_yaw_ninety_degrees():
    ego = (100.0, 200.0, 0.0)
    scene = fuse_frame((ego, math.pi / 2), (0, 5, 0), [det(100.0, 210.0)], [])
    (o,) = scene.obstacles
    assert o.position == pytest.approx((10.0, 0.0, 0.0), abs=1e-12)
    assert o.partition is Partition.FRONT
    assert scene.ego.velocity == pytest.approx((5.0, 0.0, 0.0), abs=1e-12)


def test_velocity_priority_radar_then_lidar_then_zero():
    dets = [det(10.0, velocity=(1.0, 1.0, 0.5)), det(20.0, velocity=(2.0, 0.0, 0.1)), det(30.0)]
    scene = fuse_frame(((0, 0, 0), 0.0), (5, 0, 0), dets, [radar(10.3, v=(4.0, 0.0))])
    vel = {o.position[0]: o.velocity for o in scene.obstacles}
    assert vel[10.0] == (4.0, 0.0, 0.0)
    assert vel[20.0] == (2.0, 0.0, 0.1)
    assert vel[30.0] == (0.0, 0.0, 0.0)


def test_invalid_pose():
    with pytest.raises(InvalidPose):
        fuse_frame(((math.nan, 0, 0), 0.0), (0, 0, 0), [], [])


def test_fused_scene_round_trips():
    rng = random.Random(2)
    dets = [det(rng.uniform(-60, 60), rng.uniform(-60, 60), rng.uniform(-1, 1)) for _ in range(40)]
    scene = fuse_frame(((1.0, 2.0, 0.0), 0.3), (3, 1, 0), dets, [])
    assert all(o.distance <= 50.0 for o in scene.obstacles)
    parse_scene(serialize_scene(scene))


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-1e4, 1e4),
    st.floats(-1e4, 1e4),
    st.floats(-math.pi * 4, math.pi * 4),
    st.floats(-50, 50),
    st.floats(-50, 50),
    st.floats(-5, 5),
)
def test_rigid_transform_preserves_distance(ex, ey, yaw, dx, dy, dz):
    point = (ex + dx, ey + dy, 1.0 + dz)
    local = to_ego_frame((ex, ey, 1.0), yaw, point)
    global_dist = math.dist(point, (ex, ey, 1.0))
    assert abs(norm3(local) - global_dist) <= 1e-9


def test_cluster_radar_filters_sparse():
    points = pts((0, 0, 0), (0.5, 0, 0), (30, 0, 0))
    objects = cluster_radar(points, FusionConfig())
    assert len(objects) == 1 and objects[0].member_count == 2


def test_fusion_config_validation():
    with pytest.raises(ValueError):
        FusionConfig(association_gate=0)
