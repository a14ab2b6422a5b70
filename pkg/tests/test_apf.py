import math

import numpy as np
import pytest

from safecell import apf
from safecell.apf import (
    ApfController,
    Case,
    CoincidentObstacleError,
    ControllerParams,
    GoalSpec,
    ObstacleState,
    ObstacleType,
    blend,
    cap_speed,
    classify_obstacle,
    fdcm_update,
    position_controller,
    position_velocity,
    repulsive_velocity_type1,
    repulsive_velocity_type2,
)
from safecell.kinematics import ArmModel, JointState, RobotState, robot_state
from safecell.transforms import Transform


PARAMS = ControllerParams()


def synthetic_robot(x_r, v_tcp=(0.0, 0.0, 0.0)):
    """RobotState with a hand-authored TCP pose/twist (identity Jacobian tests)."""
    joints = JointState(q=np.zeros(6), qdot=np.zeros(6))
    twist = np.concatenate([np.asarray(v_tcp, dtype=float), np.zeros(3)])
    return RobotState(joints=joints, tcp_pose=Transform.from_translation(x_r), tcp_twist=twist)


def synthetic_controller(params=PARAMS):
    rows = np.zeros((6, 4))
    rows[0, 0] = 1.0
    model = ArmModel(dh_rows=rows, rate_caps=np.full(6, 10.0))
    return ApfController(model, params, damping=0.0)


IDENTITY_J = np.eye(6)


# ---------------------------------------------------------------------------
# position controller
# ---------------------------------------------------------------------------

def test_position_controller_converged():
    goal = GoalSpec(x_g=np.zeros(3))
    v, qdot = position_controller(PARAMS, np.zeros(3), goal, IDENTITY_J, 0.0)
    assert np.allclose(v, 0.0)
    assert np.allclose(qdot, 0.0)


def test_position_controller_saturates_tanh():
    # k1*tanh(k2*1) with k1=0.2, k2=10: tanh(10) = 0.999999995877693
    goal = GoalSpec(x_g=np.array([1.0, 0.0, 0.0]))
    v = position_velocity(PARAMS, np.zeros(3), goal)
    assert v[0] == pytest.approx(0.2 * math.tanh(10.0), abs=1e-15)
    assert abs(v[0] - 0.2) < 1e-7
    assert v[1] == v[2] == 0.0


def test_position_controller_linear_regime():
    goal = GoalSpec(x_g=np.array([0.001, 0.0, 0.0]))
    v = position_velocity(PARAMS, np.zeros(3), goal)
    assert v[0] == pytest.approx(PARAMS.k_pc1 * PARAMS.k_pc2 * 0.001, rel=0.01)


def test_position_controller_caps_speed():
    big = ControllerParams(k_pc1=1.0)  # would exceed v_max without the cap
    goal = GoalSpec(x_g=np.array([1.0, 1.0, 0.0]))
    v = position_velocity(big, np.zeros(3), goal)
    assert np.linalg.norm(v) == pytest.approx(big.v_max)


def test_goal_feedforward_added():
    goal = GoalSpec(x_g=np.zeros(3), xdot_g=np.array([0.05, 0.0, 0.0]))
    v = position_velocity(PARAMS, np.zeros(3), goal)
    assert np.allclose(v, [0.05, 0.0, 0.0])


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def test_classify_head_on_is_type1():
    kind, theta, stationary = classify_obstacle(
        np.array([1.0, 0, 0]), np.zeros(3), np.array([1.0, 0, 0]), math.radians(45)
    )
    assert kind is ObstacleType.TYPE1
    assert theta == pytest.approx(0.0, abs=1e-12)
    assert not stationary


def test_classify_receding_is_type2():
    kind, theta, _ = classify_obstacle(
        np.array([1.0, 0, 0]), np.zeros(3), np.array([-1.0, 0, 0]), math.radians(45)
    )
    assert kind is ObstacleType.TYPE2
    assert theta == pytest.approx(math.pi, abs=1e-12)


def test_classify_boundary_goes_to_type1():
    # arccos(0) == pi/2 bitwise, so the equality theta_c == theta_obs is exact
    kind, theta, _ = classify_obstacle(
        np.array([1.0, 0, 0]), np.zeros(3), np.array([0.0, 1.0, 0]), np.pi / 2
    )
    assert theta == np.pi / 2
    assert kind is ObstacleType.TYPE1


def test_classify_stationary_tcp_is_conservative():
    kind, theta, stationary = classify_obstacle(
        np.zeros(3), np.zeros(3), np.array([0.0, 1.0, 0]), math.radians(45)
    )
    assert kind is ObstacleType.TYPE1
    assert stationary


# ---------------------------------------------------------------------------
# repulsive velocities
# ---------------------------------------------------------------------------

def rep1_oracle(params, x_r, x_o, v_tcp, x_g):
    """Symbol-by-symbol evaluation of the three-component construction."""
    axis = np.asarray(x_o, float) - np.asarray(x_r, float)
    axis = axis / np.linalg.norm(axis)
    parts = [-axis]
    t = np.asarray(v_tcp, float) - (np.asarray(v_tcp, float) @ axis) * axis
    if np.linalg.norm(t) > 1e-12:
        parts.append(t / np.linalg.norm(t))
    g = np.asarray(x_g, float) - np.asarray(x_r, float)
    g = g - (g @ axis) * axis
    if np.linalg.norm(g) > 1e-12:
        parts.append(g / np.linalg.norm(g))
    s = np.sum(parts, axis=0)
    return params.rep_gain * s / np.linalg.norm(s)


def test_rep1_collinear_degenerates_to_normal():
    v = repulsive_velocity_type1(
        PARAMS,
        x_r=np.zeros(3),
        x_o=np.array([0.2, 0.0, 0.0]),
        v_tcp=np.array([0.1, 0.0, 0.0]),
        x_g=np.array([1.0, 0.0, 0.0]),
    )
    assert np.allclose(v, PARAMS.rep_gain * np.array([-1.0, 0.0, 0.0]), atol=1e-12)


def test_rep1_matches_vector_oracle():
    x_r = np.zeros(3)
    x_o = np.array([0.0, 0.2, 0.0])
    v_tcp = np.array([0.1, 0.0, 0.0])
    x_g = np.array([1.0, 0.0, 0.5])
    got = repulsive_velocity_type1(PARAMS, x_r, x_o, v_tcp, x_g)
    assert np.allclose(got, rep1_oracle(PARAMS, x_r, x_o, v_tcp, x_g), atol=1e-12)
    # normal + tangential directions both present
    assert got[1] < 0 and got[0] > 0


def test_rep1_magnitude_is_rep_gain():
    rng = np.random.default_rng(11)
    for _ in range(100):
        x_r = rng.uniform(-1, 1, 3)
        x_o = x_r + rng.uniform(-0.5, 0.5, 3)
        if np.linalg.norm(x_o - x_r) < 1e-3:
            continue
        v = repulsive_velocity_type1(
            PARAMS, x_r, x_o, rng.uniform(-0.2, 0.2, 3), rng.uniform(-1, 1, 3)
        )
        assert np.linalg.norm(v) == pytest.approx(PARAMS.rep_gain, abs=1e-12)


def test_rep1_rejects_coincident():
    with pytest.raises(CoincidentObstacleError):
        repulsive_velocity_type1(PARAMS, np.zeros(3), np.zeros(3), np.ones(3), np.ones(3))


def test_rep2_definition():
    v = repulsive_velocity_type2(PARAMS, np.zeros(3), np.array([0.0, 0.15, 0.0]))
    assert np.allclose(v, PARAMS.rep_gain * np.array([0.0, -1.0, 0.0]), atol=1e-12)


def test_rep2_antiparallel_and_unit():
    rng = np.random.default_rng(12)
    for _ in range(100):
        x_r = rng.uniform(-1, 1, 3)
        x_o = x_r + rng.uniform(-0.5, 0.5, 3)
        d = np.linalg.norm(x_o - x_r)
        if d < 1e-3:
            continue
        v = repulsive_velocity_type2(PARAMS, x_r, x_o)
        assert np.linalg.norm(v) == pytest.approx(PARAMS.rep_gain, abs=1e-12)
        cos = v @ (x_o - x_r) / (np.linalg.norm(v) * d)
        assert cos == pytest.approx(-1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# blending
# ---------------------------------------------------------------------------

def test_blend_at_zero_distance_is_pure_repulsion():
    v_pc = np.array([0.1, 0.0, 0.0])
    v_rep = np.array([0.0, 0.2, 0.0])
    assert np.array_equal(blend(v_pc, v_rep, 15.0, 0.0), v_rep)


def test_blend_far_away_is_pure_position_control():
    v_pc = np.array([0.1, 0.0, 0.0])
    v_rep = np.array([0.0, 0.2, 0.0])
    out = blend(v_pc, v_rep, 15.0, 50.0 / 15.0)  # tau*d = 50
    assert np.allclose(out, v_pc, rtol=1e-20, atol=1e-21)


def test_blend_midpoint():
    v_pc = np.array([0.1, 0.0, 0.0])
    v_rep = np.array([0.0, 0.2, 0.0])
    d_half = math.log(2.0) / 10.0
    out = blend(v_pc, v_rep, 10.0, d_half)
    assert np.allclose(out, 0.5 * v_pc + 0.5 * v_rep, atol=1e-12)


def test_blend_weight_strictly_decreasing():
    v_pc = np.array([1.0, 0.0, 0.0])
    v_rep = np.array([0.0, 1.0, 0.0])
    ds = np.linspace(0.0, 0.5, 100)
    weights = [blend(v_pc, v_rep, 15.0, d)[1] for d in ds]
    assert np.all(np.diff(weights) < 0)


# ---------------------------------------------------------------------------
# free-drive hysteresis
# ---------------------------------------------------------------------------

def test_fdcm_activates_below_critical():
    assert fdcm_update(False, 0.08, True, PARAMS) is True


def test_fdcm_holds_inside_band():
    assert fdcm_update(True, 0.12, True, PARAMS) is True


def test_fdcm_releases_above_deactivation():
    assert fdcm_update(True, 0.16, True, PARAMS) is False


def test_fdcm_engages_on_marker_loss():
    assert fdcm_update(False, 1.0, False, PARAMS) is True
    assert fdcm_update(True, 1.0, False, PARAMS) is True


def test_fdcm_no_chatter_inside_band():
    # sweep d_RO sinusoidally strictly inside (d_ACT, d_DCT): flag never toggles
    for start in (True, False):
        active = start
        for t in np.linspace(0, 10, 2000):
            d = 0.125 + 0.02 * math.sin(2 * math.pi * t)
            active = fdcm_update(active, d, True, PARAMS)
            assert active == start


# ---------------------------------------------------------------------------
# behavior-tree step
# ---------------------------------------------------------------------------

def test_step_far_obstacle_is_pure_position_control():
    ctrl = synthetic_controller()
    robot = synthetic_robot(np.zeros(3), v_tcp=(0.1, 0, 0))
    goal = GoalSpec(x_g=np.array([1.0, 0.0, 0.0]))
    obstacle = ObstacleState(x_o=np.array([0.0, 0.4, 0.0]))
    d = ctrl.step(robot, goal, obstacle, False, jac=IDENTITY_J)
    assert d.case is Case.NO_AVOIDANCE
    assert d.blend_weight == 0.0
    assert np.allclose(d.tcp_velocity_cmd, position_velocity(PARAMS, np.zeros(3), goal))


def test_step_head_on_blends_type1():
    ctrl = synthetic_controller()
    robot = synthetic_robot(np.zeros(3), v_tcp=(0.1, 0, 0))
    goal = GoalSpec(x_g=np.array([1.0, 0.0, 0.0]))
    obstacle = ObstacleState(x_o=np.array([0.20, 0.0, 0.0]))
    d = ctrl.step(robot, goal, obstacle, False, jac=IDENTITY_J)
    assert d.case is Case.AVOID_TYPE1
    assert d.blend_weight == pytest.approx(math.exp(-PARAMS.tau * 0.20))
    expected = cap_speed(
        blend(
            position_velocity(PARAMS, np.zeros(3), goal),
            repulsive_velocity_type1(PARAMS, np.zeros(3), obstacle.x_o, robot.tcp_twist[:3], goal.x_g),
            PARAMS.tau,
            0.20,
        ),
        PARAMS.v_max,
    )
    assert np.allclose(d.tcp_velocity_cmd, expected, atol=1e-12)


def test_step_lateral_obstacle_uses_type2():
    ctrl = synthetic_controller()
    robot = synthetic_robot(np.zeros(3), v_tcp=(0.1, 0, 0))
    goal = GoalSpec(x_g=np.array([1.0, 0.0, 0.0]))
    obstacle = ObstacleState(x_o=np.array([0.0, 0.0, 0.2]))  # 90 deg off travel
    d = ctrl.step(robot, goal, obstacle, False, jac=IDENTITY_J)
    assert d.case is Case.AVOID_TYPE2
    assert d.theta_c == pytest.approx(np.pi / 2)


def test_step_critical_distance_enters_fdcm():
    ctrl = synthetic_controller()
    robot = synthetic_robot(np.zeros(3), v_tcp=(0.1, 0, 0))
    goal = GoalSpec(x_g=np.array([1.0, 0.0, 0.0]))
    obstacle = ObstacleState(x_o=np.array([0.08, 0.0, 0.0]))
    d = ctrl.step(robot, goal, obstacle, False, jac=IDENTITY_J)
    assert d.case is Case.FDCM
    assert np.all(d.qdot_cmd == 0.0)
    assert np.all(d.tcp_velocity_cmd == 0.0)


def test_step_fdcm_releases_with_hysteresis():
    ctrl = synthetic_controller()
    robot = synthetic_robot(np.zeros(3), v_tcp=(0.1, 0, 0))
    goal = GoalSpec(x_g=np.array([1.0, 0.0, 0.0]))
    inside_band = ObstacleState(x_o=np.array([0.12, 0.0, 0.0]))
    d = ctrl.step(robot, goal, inside_band, True, jac=IDENTITY_J)
    assert d.case is Case.FDCM  # 0.12 < d_DCT keeps the hold
    released = ObstacleState(x_o=np.array([0.25, 0.0, 0.0]))
    d2 = ctrl.step(robot, goal, released, True, jac=IDENTITY_J)
    assert d2.case is not Case.FDCM


def test_step_invisible_marker_forces_fdcm():
    ctrl = synthetic_controller()
    robot = synthetic_robot(np.zeros(3))
    goal = GoalSpec(x_g=np.array([1.0, 0.0, 0.0]))
    obstacle = ObstacleState(x_o=np.array([0.5, 0.0, 0.0]), visible=False, age=0.2)
    d = ctrl.step(robot, goal, obstacle, False, jac=IDENTITY_J)
    assert d.case is Case.FDCM


def test_step_coincident_obstacle_forces_fdcm():
    ctrl = synthetic_controller()
    robot = synthetic_robot(np.zeros(3), v_tcp=(0.1, 0, 0))
    goal = GoalSpec(x_g=np.array([1.0, 0.0, 0.0]))
    obstacle = ObstacleState(x_o=np.zeros(3))
    d = ctrl.step(robot, goal, obstacle, False, jac=IDENTITY_J)
    assert d.case is Case.FDCM


def test_step_without_obstacle():
    ctrl = synthetic_controller()
    robot = synthetic_robot(np.zeros(3))
    goal = GoalSpec(x_g=np.array([0.3, 0.0, 0.0]))
    d = ctrl.step(robot, goal, None, False, jac=IDENTITY_J)
    assert d.case is Case.NO_AVOIDANCE
    assert math.isinf(d.d_ro)


def test_step_is_deterministic():
    ctrl = synthetic_controller()
    robot = synthetic_robot(np.array([0.1, 0.2, 0.3]), v_tcp=(0.05, -0.02, 0.0))
    goal = GoalSpec(x_g=np.array([1.0, 0.5, 0.3]))
    obstacle = ObstacleState(x_o=np.array([0.3, 0.25, 0.3]))
    a = ctrl.step(robot, goal, obstacle, False, jac=IDENTITY_J)
    b = ctrl.step(robot, goal, obstacle, False, jac=IDENTITY_J)
    assert a.case == b.case
    assert np.array_equal(a.tcp_velocity_cmd, b.tcp_velocity_cmd)
    assert np.array_equal(a.qdot_cmd, b.qdot_cmd)


def test_step_speed_cap_holds_over_random_inputs():
    # 10^4 random goal/obstacle/twist combinations over a few arm postures
    ctrl_params = ControllerParams()
    rng = np.random.default_rng(13)
    from safecell import kinematics as kin

    model = kin.builtin_arm()
    ctrl = ApfController(model, ctrl_params)
    states = []
    for _ in range(8):
        q = rng.uniform(-np.pi, np.pi, 6)
        joints = JointState(q=q, qdot=rng.uniform(-0.3, 0.3, 6))
        states.append((robot_state(model, joints), kin.jacobian(model, q)))
    for i in range(10_000):
        robot, jac = states[i % len(states)]
        goal = GoalSpec(x_g=robot.x_r + rng.uniform(-1, 1, 3))
        obstacle = ObstacleState(x_o=robot.x_r + rng.uniform(-0.6, 0.6, 3))
        if np.linalg.norm(obstacle.x_o - robot.x_r) < 1e-6:
            continue
        d = ctrl.step(robot, goal, obstacle, False, jac=jac)
        assert np.linalg.norm(d.tcp_velocity_cmd) <= ctrl_params.v_max + 1e-12


def test_step_velocity_continuous_at_avoidance_boundary():
    # with tau*d_AT = 4.5 the residual repulsive weight at the ring is ~1.1%
    ctrl = synthetic_controller()
    goal = GoalSpec(x_g=np.array([1.0, 0.0, 0.0]))
    eps = 1e-6
    direction = np.array([0.0, 1.0, 0.0])
    robot = synthetic_robot(np.zeros(3), v_tcp=(0.1, 0, 0))
    outside = ObstacleState(x_o=(PARAMS.d_at + eps) * direction)
    inside = ObstacleState(x_o=(PARAMS.d_at - eps) * direction)
    v_out = ctrl.step(robot, goal, outside, False, jac=IDENTITY_J).tcp_velocity_cmd
    v_in = ctrl.step(robot, goal, inside, False, jac=IDENTITY_J).tcp_velocity_cmd
    jump = np.linalg.norm(v_out - v_in)
    assert jump < 0.05 * PARAMS.rep_gain


def test_params_validation():
    with pytest.raises(ValueError):
        ControllerParams(d_act=0.2, d_dct=0.15, d_at=0.3)
    with pytest.raises(ValueError):
        ControllerParams(tau=0.0)
    with pytest.raises(ValueError):
        ControllerParams(theta_obs=4.0)
    with pytest.raises(ValueError):
        ControllerParams(v_max=-1.0)


def test_obstacle_state_invariant():
    with pytest.raises(ValueError):
        ObstacleState(x_o=np.zeros(3), visible=False, age=0.0)
