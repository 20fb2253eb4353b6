import math

import numpy as np
import pytest

from fetchbot.arms import (
    GRASP_APPROACH_OFFSET,
    GraspInfeasible,
    HandoverMonitor,
    PARKED_Q,
    check_payload,
    check_self_collision,
    default_chain,
    forward_kinematics,
    jacobian,
    monitor_target,
    plan_grasp,
    select_arm,
    solve_ik,
)
from fetchbot.geometry import Transform3D, quat_from_axis_angle

LEFT = default_chain("left")
RIGHT = default_chain("right")


def random_q(rng, chain=RIGHT):
    return chain.random_configuration(rng)


class TestForwardKinematics:
    def test_home_pose_extends_along_mount(self):
        t = forward_kinematics(RIGHT, np.zeros(7))
        mount_dir = RIGHT.mount.rotation_matrix()[:, 0]
        expected = RIGHT.shoulder + 1.0 * mount_dir
        assert np.allclose(t.translation, expected, atol=1e-12)
        assert t.translation[2] == pytest.approx(1.0)

    def test_joint1_rotates_about_base_z(self):
        q = np.zeros(7)
        q[0] = math.pi / 2
        p0 = forward_kinematics(RIGHT, np.zeros(7)).translation
        p1 = forward_kinematics(RIGHT, q).translation
        rel0 = p0 - RIGHT.shoulder
        rel1 = p1 - RIGHT.shoulder
        rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(rel1, rot @ rel0, atol=1e-12)

    def test_matches_homogeneous_matrix_oracle(self, rng):
        """Independent FK oracle: accumulate 4x4 homogeneous matrices."""
        def rot_about(axis, angle):
            x, y, z = axis
            c, s, t = math.cos(angle), math.sin(angle), 1 - math.cos(angle)
            return np.array([
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ])

        def homogeneous(R, p):
            T = np.eye(4)
            T[:3, :3] = R
            T[:3, 3] = p
            return T

        for _ in range(25):
            q = random_q(rng)
            T = homogeneous(RIGHT.mount.rotation_matrix(), RIGHT.mount.translation)
            for joint, qi in zip(RIGHT.joints, q):
                T = T @ homogeneous(np.eye(3), joint.offset_t)
                T = T @ homogeneous(rot_about(joint.axis, qi), np.zeros(3))
            T = T @ homogeneous(np.eye(3), RIGHT.tool_t)
            got = forward_kinematics(RIGHT, q)
            assert np.allclose(got.translation, T[:3, 3], atol=1e-12)
            assert np.allclose(got.rotation_matrix(), T[:3, :3], atol=1e-12)

    def test_jacobian_matches_finite_differences(self, rng):
        q = random_q(rng)
        J = jacobian(RIGHT, q)
        h = 1e-7
        for i in range(7):
            dq = np.zeros(7)
            dq[i] = h
            plus = forward_kinematics(RIGHT, q + dq)
            minus = forward_kinematics(RIGHT, q - dq)
            fd_v = (plus.translation - minus.translation) / (2 * h)
            assert np.allclose(J[:3, i], fd_v, atol=1e-5)


class TestInverseKinematics:
    def test_fixed_point(self):
        q0 = np.array([0.3, -0.4, 0.2, 0.9, -0.2, 0.5, 0.1])
        target = forward_kinematics(RIGHT, q0)
        out = solve_ik(RIGHT, target, q0)
        assert out is not None
        assert np.allclose(out, q0, atol=1e-9)

    def test_roundtrip_sample(self, rng):
        for _ in range(50):
            q = random_q(rng)
            target = forward_kinematics(RIGHT, q)
            seed = RIGHT.clamp(q + rng.uniform(-0.1, 0.1, 7))
            out = solve_ik(RIGHT, target, seed)
            assert out is not None
            reached = forward_kinematics(RIGHT, out)
            assert np.linalg.norm(reached.translation - target.translation) < 1e-3
            assert reached.rotation_angle_to(target) < 1e-2
            assert RIGHT.within_limits(out)

    def test_double_reach_unreachable(self):
        target = Transform3D.from_translation(*(RIGHT.shoulder + np.array([2.0, 0.0, 0.0])))
        assert solve_ik(RIGHT, target, np.zeros(7)) is None


class TestSelectArm:
    def test_left_object_goes_left(self):
        pose = Transform3D.from_translation(0.5, 0.4, 0.9)
        assert select_arm(LEFT, RIGHT, pose) == "left"

    def test_centered_tie_goes_right(self):
        pose = Transform3D.from_translation(0.6, 0.0, 1.0)
        assert select_arm(LEFT, RIGHT, pose) == "right"

    def test_out_of_reach_none(self):
        pose = Transform3D.from_translation(1.8, 0.0, 1.0)
        assert select_arm(LEFT, RIGHT, pose) is None

    def test_reflection_swaps_arms(self, rng):
        for _ in range(30):
            p = np.array([rng.uniform(0.2, 0.8), rng.uniform(0.05, 0.5), rng.uniform(0.6, 1.3)])
            a = select_arm(LEFT, RIGHT, Transform3D.from_translation(*p))
            mirrored = p * np.array([1.0, -1.0, 1.0])
            b = select_arm(LEFT, RIGHT, Transform3D.from_translation(*mirrored))
            if a is None:
                assert b is None
            else:
                assert {a, b} == {"left", "right"}


class TestGraspPlanning:
    OBJECT = Transform3D.from_translation(0.62, -0.15, 0.85)

    def test_three_waypoints_with_vertical_offset(self):
        plan = plan_grasp(RIGHT, "cup", self.OBJECT, 0.4, seed_q=PARKED_Q)
        fk_mid = forward_kinematics(RIGHT, plan.intermediate)
        fk_grasp = forward_kinematics(RIGHT, plan.grasp)
        fk_retreat = forward_kinematics(RIGHT, plan.retreat)
        assert fk_mid.translation[2] - fk_grasp.translation[2] == pytest.approx(
            GRASP_APPROACH_OFFSET, abs=2e-3)
        assert fk_retreat.translation[2] - fk_grasp.translation[2] == pytest.approx(
            GRASP_APPROACH_OFFSET, abs=2e-3)
        assert [name for name, _ in plan.waypoints] == ["intermediate", "grasp", "retreat"]

    def test_edge_of_workspace_infeasible_names_waypoint(self):
        # graspable only at full stretch: the +10 cm intermediate cannot be reached
        edge = RIGHT.shoulder + np.array([0.0, 0.0, -1.0 + 1e-4])
        target = Transform3D.from_translation(*edge)
        with pytest.raises(GraspInfeasible) as err:
            plan_grasp(RIGHT, "cup", target, 0.4, seed_q=PARKED_Q)
        assert err.value.waypoint == "intermediate"

    def test_monitor_keep_and_replan(self):
        plan = plan_grasp(RIGHT, "cup", self.OBJECT, 0.4, seed_q=PARKED_Q)
        assert monitor_target(plan, self.OBJECT) == "keep"
        moved = Transform3D.from_translation(0.62 + 0.05, -0.15, 0.85)
        assert monitor_target(plan, moved) == "replan"
        rotated = Transform3D(
            quat_from_axis_angle((0, 0, 1), 0.2), self.OBJECT.translation)
        assert monitor_target(plan, rotated) == "replan"

    def test_small_displacement_kept(self):
        plan = plan_grasp(RIGHT, "cup", self.OBJECT, 0.4, seed_q=PARKED_Q)
        nudged = Transform3D.from_translation(0.62 + 0.02, -0.15, 0.85)
        assert monitor_target(plan, nudged) == "keep"


class TestSelfCollision:
    def test_parked_arms_clear(self):
        assert check_self_collision(LEFT, RIGHT, PARKED_Q, PARKED_Q) is None

    def test_home_arms_clear(self):
        assert check_self_collision(LEFT, RIGHT, np.zeros(7), np.zeros(7)) is None

    def test_crossed_end_effectors_collide(self):
        target = Transform3D(np.array([0.0, 1.0, 0.0, 0.0]), np.array([0.55, 0.0, 0.85]))
        ql = solve_ik(LEFT, target, PARKED_Q)
        qr = solve_ik(RIGHT, target, PARKED_Q)
        assert ql is not None and qr is not None
        assert check_self_collision(LEFT, RIGHT, ql, qr) is not None

    def test_matches_sampling_oracle(self, rng):
        """Capsule distances agree with a dense point-sampling oracle."""
        for _ in range(8):
            ql = random_q(rng, LEFT)
            qr = random_q(rng, RIGHT)
            lp = LEFT.link_points(ql)
            rp = RIGHT.link_points(qr)
            ts = np.linspace(0, 1, 60)
            min_d = np.inf
            for i in range(7):
                a = lp[i] + ts[:, None] * (lp[i + 1] - lp[i])
                for j in range(7):
                    b = rp[j] + ts[:, None] * (rp[j + 1] - rp[j])
                    d = np.min(np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2))
                    min_d = min(min_d, d)
            margin_d = min_d - (LEFT.capsule_radius + RIGHT.capsule_radius)
            verdict = check_self_collision(LEFT, RIGHT, ql, qr)
            if margin_d < 0.02 - 1e-3:
                assert verdict is not None
            elif margin_d > 0.02 + 1e-3:
                assert verdict is None


class TestPayload:
    def test_light_ok(self):
        assert check_payload(0.3)

    def test_limit_inclusive(self):
        assert check_payload(2.2)

    def test_heavy_rejected(self):
        assert not check_payload(5.0)

    def test_negative_faults(self):
        with pytest.raises(ValueError):
            check_payload(-0.1)


class TestHandoverMonitor:
    def test_zero_stream_holds(self):
        mon = HandoverMonitor()
        assert not any(mon.update(0.0) for _ in range(100))

    def test_debounce_releases_on_third_consecutive(self):
        mon = HandoverMonitor()
        readings = [0.0, 6.0, 6.0, 6.0]
        results = [mon.update(f) for f in readings]
        assert results == [False, False, False, True]

    def test_interrupted_pulls_hold(self):
        mon = HandoverMonitor()
        for f in [6.0, 0.0, 6.0, 0.0, 6.0, 0.0, 6.0, 6.0]:
            assert not mon.update(f)

    def test_negative_pull_counts(self):
        mon = HandoverMonitor()
        assert [mon.update(f) for f in [-6, -6, -6]] == [False, False, True]

    def test_latched_after_release(self):
        mon = HandoverMonitor()
        for f in [6, 6, 6]:
            mon.update(f)
        assert mon.update(0.0)
