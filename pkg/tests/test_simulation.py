import math

import numpy as np
import pytest

from tacreorient.geometry import Frame, Rotation, RpyVector, axis_angle_matrix
from tacreorient.gripper import HAND_FROM_SENSOR, GripperCommand
from tacreorient.simulation import (
    SUITE_IDS,
    Environment,
    make_object_suite,
    suite_template,
)
from tacreorient.simulation.world import (
    GRAVITY,
    ObjectDropped,
    SimWorld,
    accumulated_tangential_slip,
    object_orientation_error,
    step,
)
from tacreorient.tactile import LEFT, RIGHT, slip_metrics


def hold(force, velocity=(0.0, 0.0, 0.0), rpy=(0.0, 0.0, 0.0)):
    return GripperCommand(np.asarray(velocity, dtype=float), RpyVector(*rpy), force)


@pytest.fixture(scope="module")
def textured():
    return suite_template("textured")


def test_suite_has_five_objects():
    suite = make_object_suite()
    assert len(suite) == 5
    assert tuple(t.name for t in suite) == SUITE_IDS


def test_equilibrium_without_loads(textured):
    w = SimWorld(textured, gravity=False, grip_force=10.0)
    q0 = w.q.copy()
    for _ in range(20):
        frame = w.step(hold(10.0))
    assert np.array_equal(w.q, q0)
    for f in (frame.left, frame.right):
        assert np.array_equal(f.displacements[:, :2], np.zeros((f.n_markers, 2)))


def test_static_grasp_deflection_matches_statics(textured):
    # grasp through the centre of mass with ample friction: weight shared by 2 x N pins
    w = SimWorld(textured, grasp_point=textured.com, grip_force=30.0)
    for _ in range(30):
        frame = w.step(hold(30.0))
    p = textured.patch
    expected = textured.mass * GRAVITY / 1000.0 / (2 * p.k_t * p.grid ** 2)
    for f in (frame.left, frame.right):
        tangential = np.linalg.norm(f.displacements[:, :2], axis=1)
        assert np.allclose(tangential, expected, rtol=1e-6)


def test_static_grasp_does_not_drift(textured):
    w = SimWorld(textured, grasp_point=textured.com, grip_force=30.0)
    for _ in range(30):
        w.step(hold(30.0))
    q0 = w.q.copy()
    for _ in range(int(round(5.0 / w.cycle_time))):
        w.step(hold(30.0))
    assert np.linalg.norm(w.q[:2] - q0[:2]) < 0.01
    assert abs(math.degrees(w.q[2] - q0[2])) < 0.01


@pytest.mark.parametrize("offset", [20.0, -20.0])
def test_eccentric_grasp_s2_sign_follows_gravity_torque(textured, offset):
    w = SimWorld(textured, grasp_point=textured.com + [offset, 0.0], grip_force=10.0)
    for _ in range(30):
        frame = w.step(hold(10.0))
    # weight at r = com - grasp on the hand x axis; torque about the grasp (hand y) axis
    r = np.array([-offset, 0.0, 0.0])
    torque_y = np.cross(r, [0.0, 0.0, -textured.mass * GRAVITY])[1]
    s_left = slip_metrics(frame.left).s2
    assert np.sign(s_left) == np.sign(torque_y)
    assert slip_metrics(frame.right).s2 == pytest.approx(-s_left)


def test_energy_non_increasing(textured):
    w = SimWorld(textured, grasp_point=textured.com + [15.0, 0.0], grip_force=6.0)
    energies = [w.energy()]
    for _ in range(int(round(3.0 / w.cycle_time))):
        w.step(hold(6.0))
        energies.append(w.energy())
    per_second = int(round(1.0 / w.cycle_time))
    for i in range(len(energies) - per_second):
        assert energies[i + per_second] <= energies[i] + 1e-6


@pytest.mark.parametrize("velocity,rot", [((2, 0, 0), 0.0), ((0, 0, 2), 0.0), ((0, 0, 0), 0.005),
                                          ((0, 0, 0), -0.005)])
def test_marker_senses_follow_commanded_twist(textured, velocity, rot):
    w = SimWorld(textured, grip_force=10.0, fixed_object=True, gravity=False)
    for _ in range(3):
        frame = w.step(hold(10.0, velocity, (0.0, rot, 0.0)))
    for finger in (LEFT, RIGHT):
        s = slip_metrics(frame.field(finger))
        s1_hand = HAND_FROM_SENSOR[finger].matrix @ s.s1
        v = np.asarray(velocity, dtype=float)
        if np.any(v):
            # the object lags behind the gripper, so the gel is dragged against the motion
            assert s1_hand @ v < 0
            assert np.linalg.norm(np.cross(s1_hand * [1, 0, 1], v)) < 1e-9
        else:
            sense = 1 if finger == LEFT else -1
            assert np.sign(sense * s.s2) == -np.sign(rot)


def test_determinism(textured):
    def run():
        w = SimWorld(textured, grasp_point=textured.com + [10.0, 0.0], grip_force=5.0,
                     environment=Environment.floor(-60.0), seed=3)
        out = []
        for k in range(40):
            frame = w.step(hold(5.0, (1.0, 0.0, -3.0), (0.0, 0.002 * (k % 3), 0.0)))
            out.append(np.concatenate([frame.left.displacements.ravel(), frame.right.displacements.ravel(), w.q]))
        return np.array(out)
    assert np.array_equal(run(), run())


def test_functional_step_leaves_input(textured):
    w = SimWorld(textured, grip_force=10.0)
    q0 = w.q.copy()
    nxt, frame = step(w, hold(10.0, (1.0, 0.0, 0.0)))
    assert np.array_equal(w.q, q0) and w.tick == 0 and nxt.tick == 1 and frame.tick == 1


def test_orientation_error(textured):
    w = SimWorld(textured, object_angle=0.3)
    cur = w.object_rotation(Frame.G)
    assert object_orientation_error(w, cur) == pytest.approx(0.0, abs=1e-12)
    axis = np.array([0.3, -0.4, 0.5])
    five = Rotation(cur.matrix @ axis_angle_matrix(axis, math.radians(5)), Frame.G, Frame.G)
    assert object_orientation_error(w, five) == pytest.approx(5.0, abs=1e-9)
    rng = np.random.default_rng(0)
    for _ in range(20):
        m = axis_angle_matrix(rng.normal(size=3), rng.uniform(0, math.pi))
        rel = cur.matrix.T @ m
        oracle = math.degrees(math.acos(np.clip((np.trace(rel) - 1) / 2, -1, 1)))
        assert object_orientation_error(w, Rotation(m, Frame.G, Frame.G)) == pytest.approx(oracle, abs=1e-6)
    with pytest.raises(ValueError):
        object_orientation_error(w, Rotation.identity(Frame.G, Frame.H))


def test_no_slip_accumulates_nothing(textured):
    w = SimWorld(textured, grasp_point=textured.com, grip_force=30.0)
    for _ in range(20):
        w.step(hold(30.0))
    assert accumulated_tangential_slip(w) == {LEFT: 0.0, RIGHT: 0.0}


def test_scripted_slide_is_measured(textured):
    w = SimWorld(textured, grip_force=5.0, fixed_object=True, gravity=False)
    n = int(math.ceil(25.0 / (5.0 * w.cycle_time)))
    for _ in range(n):
        w.step(hold(5.0, (5.0, 0.0, 0.0)))
    travelled = 5.0 * w.time
    slip = accumulated_tangential_slip(w)
    assert abs(slip[LEFT] - travelled) < 0.5 and abs(slip[RIGHT] - travelled) < 0.5
    # back again: the path integral adds up, it does not cancel
    for _ in range(n):
        w.step(hold(5.0, (-5.0, 0.0, 0.0)))
    assert abs(accumulated_tangential_slip(w)[LEFT] - 2 * travelled) < 1.0


def test_command_limits(textured):
    w = SimWorld(textured, grip_force=10.0, v_max=50.0)
    with pytest.raises(ValueError):
        w.step(hold(10.0, (60.0, 0.0, 0.0)))
    with pytest.raises(ValueError):
        w.step(hold(10.0, rpy=(0.0, math.radians(4), 0.0)))
    with pytest.raises(ValueError):
        w.step(hold(100.0))


def test_drop_when_released(textured):
    w = SimWorld(textured, grip_force=5.0)
    with pytest.raises(ObjectDropped):
        for _ in range(200):
            w.step(hold(0.0))


def test_floor_contact_pushes_back(textured):
    # pressing the object onto a floor makes it pivot in hand
    from tacreorient.harness.scenes import lowest_point

    floor = lowest_point(textured, math.radians(30)) - 2.0
    w = SimWorld(textured, grip_force=3.0, object_angle=math.radians(30),
                 environment=Environment.floor(floor))
    for _ in range(90):
        w.step(hold(3.0, (0.0, 0.0, -5.0)))
    assert abs(w.q[2] - math.radians(30)) > math.radians(1)
