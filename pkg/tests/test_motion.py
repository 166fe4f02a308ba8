import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import discrete_speed_sum, fine_bicycle
from pla.motion import RolloutParams, Trajectory, Waypoint, rollout
from pla.reasoning import DrivingCommand, SpeedAction, SteeringDirection


def cmd(action="maintain", direction="straight", angle=0.0):
    return DrivingCommand(SpeedAction(action), SteeringDirection(direction), angle, "")


def test_straight_maintain():
    traj = rollout(8.28, 0.0, cmd())
    last = traj.waypoints[-1]
    assert len(traj) == 10
    assert last.x == pytest.approx(8.28, abs=1e-12)
    assert (last.y, last.heading, last.speed) == (0.0, 0.0, 8.28)
    assert [w.t for w in traj.waypoints] == pytest.approx([0.1 * k for k in range(1, 11)], abs=1e-12)


def test_accelerate_matches_discrete_sum():
    traj = rollout(5.0, 0.0, cmd("accelerate"))
    x, speeds = discrete_speed_sum(5.0, 1.0, 0.1, 10)
    assert traj.waypoints[-1].x == pytest.approx(x, abs=1e-9)
    assert x == pytest.approx(5.55, abs=1e-12)
    assert traj.waypoints[-1].speed == pytest.approx(6.0, abs=1e-12)
    assert [w.speed for w in traj.waypoints] == pytest.approx(speeds, abs=1e-12)


def test_decelerate_clamps_at_min_speed():
    traj = rollout(0.5, 0.0, cmd("decelerate"), RolloutParams(min_speed=0.2))
    assert min(w.speed for w in traj.waypoints) == 0.2
    x, _ = discrete_speed_sum(0.5, -1.5, 0.1, 10, min_speed=0.2)
    assert traj.waypoints[-1].x == pytest.approx(x, abs=1e-9)


def test_constant_steer_matches_fine_reference():
    traj = rollout(8.0, 5.0, cmd("maintain", "left", 5.0))
    ref_x, ref_y, ref_h = fine_bicycle(8.0, 5.0, 2.7, 1.0)
    last = traj.waypoints[-1]
    assert abs(last.heading - ref_h) < 1e-3
    assert abs(last.heading - 8 * math.tan(math.radians(5)) / 2.7) < 1e-3
    assert math.hypot(last.x - ref_x, last.y - ref_y) < 1e-2


def test_euler_option_is_first_order():
    p = lambda dt: RolloutParams(dt=dt, integrator="euler")  # noqa: E731
    ends = [rollout(8.0, 5.0, cmd("maintain", "left", 5.0), p(dt)).waypoints[-1] for dt in (0.1, 0.05, 0.025)]
    d1 = math.hypot(ends[0].x - ends[1].x, ends[0].y - ends[1].y)
    d2 = math.hypot(ends[1].x - ends[2].x, ends[1].y - ends[2].y)
    # Halving dt roughly halves the change in the final waypoint.
    assert 1.6 < d1 / d2 < 2.4


def test_arc_converges_under_rate_limit():
    p = lambda dt: RolloutParams(dt=dt)  # noqa: E731
    ends = [rollout(10.0, 0.0, cmd("decelerate", "right", 12.0), p(dt)).waypoints[-1] for dt in (0.1, 0.05, 0.025)]
    d1 = math.hypot(ends[0].x - ends[1].x, ends[0].y - ends[1].y)
    d2 = math.hypot(ends[1].x - ends[2].x, ends[1].y - ends[2].y)
    # Speed and steer are piecewise constant per step, so the error is first order.
    assert 1.6 < d1 / d2 < 2.4


def test_steer_rate_limited():
    traj = rollout(8.0, 0.0, cmd("maintain", "left", 5.0))
    assert traj.steer[:4] == pytest.approx((1.5, 3.0, 4.5, 5.0), abs=1e-12)
    assert traj.steer[-1] == 5.0


@given(
    st.floats(0, 30),
    st.floats(-45, 45),
    st.sampled_from(list(SpeedAction)),
    st.sampled_from(["left", "right"]),
    st.floats(0.01, 45),
    st.floats(1.0, 40.0),
)
def test_rate_bound_property(v, steer0, action, direction, angle, rate):
    params = RolloutParams(max_steer_rate=rate)
    traj = rollout(v, steer0, DrivingCommand(action, SteeringDirection(direction), angle, ""), params)
    series = (steer0,) + traj.steer
    for a, b in zip(series, series[1:]):
        assert abs(b - a) <= rate * params.dt + 1e-12
    assert all(w.speed >= params.min_speed for w in traj.waypoints)
    if action is SpeedAction.MAINTAIN:
        assert all(w.speed == v for w in traj.waypoints)


@given(st.floats(0, 30), st.floats(-45, 45), st.sampled_from(list(SpeedAction)), st.floats(0.01, 45))
def test_mirror_symmetry(v, steer0, action, angle):
    left = rollout(v, steer0, DrivingCommand(action, SteeringDirection.LEFT, angle, ""))
    right = rollout(v, -steer0, DrivingCommand(action, SteeringDirection.RIGHT, angle, ""))
    for a, b in zip(left.waypoints, right.waypoints):
        assert abs(a.x - b.x) <= 1e-12
        assert abs(a.y + b.y) <= 1e-12
        assert abs(a.heading + b.heading) <= 1e-12


@pytest.mark.parametrize("action", ["maintain", "decelerate"])
def test_zero_speed_stays_at_origin(action):
    traj = rollout(0.0, 0.0, cmd(action, "left", 30.0))
    assert all((w.x, w.y, w.heading) == (0.0, 0.0, 0.0) for w in traj.waypoints)


def test_zero_speed_accelerate_matches_sum():
    traj = rollout(0.0, 0.0, cmd("accelerate"))
    x, _ = discrete_speed_sum(0.0, 1.0, 0.1, 10)
    assert traj.waypoints[-1].x == pytest.approx(x, abs=1e-9)


def test_params_validation():
    with pytest.raises(ValueError):
        RolloutParams(horizon=1.05, dt=0.1)
    with pytest.raises(ValueError):
        RolloutParams(dt=0)
    with pytest.raises(ValueError):
        RolloutParams(integrator="rk4")
    with pytest.raises(ValueError):
        rollout(-1.0, 0.0, cmd())
    assert RolloutParams(dt=0.05, horizon=2.0).steps == 40


def test_trajectory_round_trip_and_order():
    traj = rollout(6.0, 2.0, cmd("accelerate", "right", 3.0))
    assert Trajectory.from_dict(traj.to_dict()) == traj
    with pytest.raises(ValueError):
        Trajectory((Waypoint(0.2, 0, 0, 0, 0), Waypoint(0.1, 0, 0, 0, 0)))
    pts = Trajectory.from_xy([(1, 0), (2, 0)], dt=0.5)
    assert [w.speed for w in pts.waypoints] == [2.0, 2.0]
