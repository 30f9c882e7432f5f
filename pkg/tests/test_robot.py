"""Kinematics: FK poses, Jacobians against finite differences, limit hinges."""

import numpy as np
import pytest

from locoplan.errors import InvalidArgument, NotFound
from locoplan.fixtures import fixture_names, load_fixture
from locoplan.robot import (
    forward_kinematics,
    frame_jacobian,
    joint_limit_violation,
    load_robot_file,
    robot_from_dict,
    save_robot_file,
)

from conftest import Q0_BIPED


def random_config(model, rng, scale=1.0):
    q = rng.uniform(-scale, scale, model.n)
    lo, up = model.joint_lower(), model.joint_upper()
    if lo.size:
        q[model.base_dof :] = rng.uniform(0.8 * lo, 0.8 * up)
    return q


def test_arm_fk_reference_poses(arm):
    poses = forward_kinematics(arm, np.zeros(2))
    assert np.allclose(poses["tip"][:2], [2.0, 0.0], atol=1e-12)

    poses = forward_kinematics(arm, np.array([np.pi / 2, 0.0]))
    assert np.allclose(poses["tip"][:2], [0.0, 2.0], atol=1e-12)

    poses = forward_kinematics(arm, np.array([0.0, np.pi / 2]))
    assert np.allclose(poses["tip"][:2], [1.0, 1.0], atol=1e-12)
    assert abs(poses["tip"][2] - np.pi / 2) < 1e-12


def test_arm_jacobian_columns(arm):
    J = frame_jacobian(arm, np.zeros(2), "tip")
    # at full extension: joint 1 swings (0, 2), joint 2 swings (0, 1)
    assert np.allclose(J[:, 0], [0.0, 2.0, 1.0], atol=1e-12)
    assert np.allclose(J[:, 1], [0.0, 1.0, 1.0], atol=1e-12)


def test_base_translation_columns(biped):
    J = frame_jacobian(biped, Q0_BIPED, "foot_l")
    assert np.allclose(J[:, 0], [1.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(J[:, 1], [0.0, 1.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("name", fixture_names())
def test_frame_jacobians_match_fd(name):
    model = load_fixture(name)
    rng = np.random.default_rng(7)
    h = 1e-6
    for _ in range(100):
        q = random_config(model, rng)
        fk = model.fk(q)
        for frame in model.frame_ids:
            J = fk.frame_jacobian(frame)
            for k in range(model.n):
                qp = q.copy()
                qp[k] += h
                qm = q.copy()
                qm[k] -= h
                pp = model.fk(qp).pose(frame)
                pm = model.fk(qm).pose(frame)
                fd = (pp - pm) / (2 * h)
                assert np.allclose(J[:, k], fd, atol=1e-6), (name, frame, k)


@pytest.mark.parametrize("name", fixture_names())
def test_com_jacobian_matches_fd(name):
    model = load_fixture(name)
    rng = np.random.default_rng(11)
    h = 1e-6
    for _ in range(40):
        q = random_config(model, rng)
        J = model.fk(q).com_jacobian()
        for k in range(model.n):
            qp = q.copy()
            qp[k] += h
            qm = q.copy()
            qm[k] -= h
            fd = (model.fk(qp).com() - model.fk(qm).com()) / (2 * h)
            assert np.allclose(J[:, k], fd, atol=1e-6)


def test_point_jacobian_offset(biped):
    fk = biped.fk(Q0_BIPED)
    rng = np.random.default_rng(3)
    h = 1e-6
    off = (0.07, -0.02)
    J = fk.point_jacobian("knee_r", off)
    for k in range(biped.n):
        qp = Q0_BIPED.copy()
        qp[k] += h
        qm = Q0_BIPED.copy()
        qm[k] -= h
        fd = (biped.fk(qp).point("knee_r", off) - biped.fk(qm).point("knee_r", off)) / (2 * h)
        assert np.allclose(J[:, k], fd, atol=1e-6)
    del rng


def test_translation_equivariance(biped):
    fk0 = biped.fk(Q0_BIPED)
    q = Q0_BIPED.copy()
    q[0] += 1.3
    q[1] -= 0.2
    fk1 = biped.fk(q)
    for frame in biped.frame_ids:
        d = fk1.pose(frame) - fk0.pose(frame)
        assert np.allclose(d, [1.3, -0.2, 0.0], atol=1e-12)
    assert np.allclose(fk1.com() - fk0.com(), [1.3, -0.2], atol=1e-12)


def test_com_mass_weighting(biped):
    total = sum(m.mass for m in biped.masses)
    assert abs(biped.total_mass - total) < 1e-12
    fk = biped.fk(Q0_BIPED)
    acc = np.zeros(2)
    for m in biped.masses:
        acc += m.mass * fk.point(m.frame, m.com)
    assert np.allclose(fk.com(), acc / total, atol=1e-12)


def test_joint_limit_hinge_values(biped):
    q = Q0_BIPED.copy()
    assert np.all(joint_limit_violation(biped, q) == 0.0)

    q[3] = 2.4  # hip_l upper limit is 2.2
    v = joint_limit_violation(biped, q)
    assert abs(v[0] - 0.2) < 1e-12
    assert np.all(v[1:] == 0.0)

    q[3] = 2.2
    v = joint_limit_violation(biped, q, margin=0.05)
    assert abs(v[0] - 0.05) < 1e-12

    q[3] = -2.4
    v = joint_limit_violation(biped, q)
    assert abs(v[0] - 0.2) < 1e-12


def test_joint_limit_margin_precondition(biped):
    with pytest.raises(InvalidArgument):
        joint_limit_violation(biped, Q0_BIPED, margin=2.3)
    with pytest.raises(InvalidArgument):
        joint_limit_violation(biped, Q0_BIPED, margin=-0.01)


def test_limits_and_clamping(biped):
    lo, up = biped.joint_lower(), biped.joint_upper()
    assert lo.shape == (4,) and up.shape == (4,)
    q = Q0_BIPED.copy()
    q[3] = 5.0
    qc = biped.clamp_to_limits(q)
    assert qc[3] == up[0]
    assert biped.within_limits(qc)
    assert not biped.within_limits(q)
    # clamping leaves the base untouched
    assert np.all(qc[:3] == q[:3])


def test_velocity_limit_layout(wheeler):
    v = wheeler.velocity_limits()
    assert v.shape == (6,)
    assert np.allclose(v[:3], [1.0, 1.0, 1.5])
    assert np.allclose(v[3:], 3.0)


def test_config_validation(biped):
    with pytest.raises(InvalidArgument):
        biped.check_configuration(np.zeros(6))
    with pytest.raises(InvalidArgument):
        biped.check_configuration(np.array([np.nan] + [0.0] * 6))


def test_unknown_frame(biped):
    fk = biped.fk(Q0_BIPED)
    with pytest.raises(NotFound):
        fk.pose("elbow")
    with pytest.raises(NotFound):
        fk.point_jacobian("elbow")


def test_model_roundtrip(tmp_path, biped):
    p = tmp_path / "robot.json"
    save_robot_file(biped, p)
    back = load_robot_file(p)
    assert back.name == biped.name
    assert back.n == biped.n and back.base_dof == biped.base_dof
    q = Q0_BIPED
    for frame in biped.frame_ids:
        assert np.allclose(back.fk(q).pose(frame), biped.fk(q).pose(frame), atol=1e-15)


def test_model_from_dict_errors(biped):
    data = biped.to_dict()
    data["base_dof"] = 1
    with pytest.raises(InvalidArgument):
        robot_from_dict(data)
