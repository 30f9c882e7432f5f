"""Built-in desk-scale robot fixtures.

Three planner-facing robots plus a two-link arm used by kinematics tests:

  planar-biped-7dof   floating base (x, z, theta) + two 2-DoF legs
  point-robot-2d      translating point with one collision sphere
  planar-wheeler-6dof floating base + 3-DoF arm, four wheel frames
  arm-2link           fixed-base 2R arm, unit links
"""

from __future__ import annotations

import math

from .errors import NotFound
from .robot import (
    CollisionSphere,
    FrameSpec,
    JointSpec,
    MassSpec,
    RobotModel,
)


def _biped() -> RobotModel:
    hip = dict(axis="revolute", lower=-2.2, upper=2.2, vel_limit=4.0)
    knee = dict(axis="revolute", lower=-2.5, upper=2.5, vel_limit=4.0)
    return RobotModel(
        name="planar-biped-7dof",
        base_dof=3,
        joints=[
            JointSpec("hip_l", "base", origin=(-0.1, -0.05, -math.pi / 2), **hip),
            JointSpec("knee_l", "hip_l", origin=(0.25, 0.0, 0.0), **knee),
            JointSpec("hip_r", "base", origin=(0.1, -0.05, -math.pi / 2), **hip),
            JointSpec("knee_r", "hip_r", origin=(0.25, 0.0, 0.0), **knee),
        ],
        frames=[
            FrameSpec("foot_l", "knee_l", (0.25, 0.0, 0.0)),
            FrameSpec("foot_r", "knee_r", (0.25, 0.0, 0.0)),
        ],
        end_effectors=["foot_l", "foot_r"],
        collision_spheres=[
            CollisionSphere("base", (0.0, 0.1), 0.18),
            CollisionSphere("hip_l", (0.125, 0.0), 0.06),
            CollisionSphere("hip_r", (0.125, 0.0), 0.06),
            CollisionSphere("knee_l", (0.125, 0.0), 0.05),
            CollisionSphere("knee_r", (0.125, 0.0), 0.05),
        ],
        masses=[
            MassSpec("base", 5.0, (0.0, 0.1)),
            MassSpec("hip_l", 0.4, (0.125, 0.0)),
            MassSpec("hip_r", 0.4, (0.125, 0.0)),
            MassSpec("knee_l", 0.3, (0.125, 0.0)),
            MassSpec("knee_r", 0.3, (0.125, 0.0)),
        ],
        base_vel_limits=[0.8, 0.8, 2.0],
    )


def _point_robot() -> RobotModel:
    return RobotModel(
        name="point-robot-2d",
        base_dof=2,
        joints=[],
        frames=[],
        end_effectors=["base"],
        collision_spheres=[CollisionSphere("base", (0.0, 0.0), 0.1)],
        masses=[MassSpec("base", 1.0, (0.0, 0.0))],
        base_vel_limits=[1.0, 1.0],
    )


def _wheeler() -> RobotModel:
    arm = dict(axis="revolute", lower=-2.8, upper=2.8, vel_limit=3.0)
    return RobotModel(
        name="planar-wheeler-6dof",
        base_dof=3,
        joints=[
            JointSpec("shoulder", "base", origin=(0.2, 0.0, 0.0), **arm),
            JointSpec("elbow", "shoulder", origin=(0.15, 0.0, 0.0), **arm),
            JointSpec("wrist", "elbow", origin=(0.15, 0.0, 0.0), **arm),
        ],
        frames=[
            FrameSpec("tool", "wrist", (0.15, 0.0, 0.0)),
            FrameSpec("wheel_fl", "base", (0.25, 0.1, 0.0)),
            FrameSpec("wheel_fr", "base", (0.25, -0.1, 0.0)),
            FrameSpec("wheel_rl", "base", (-0.25, 0.1, 0.0)),
            FrameSpec("wheel_rr", "base", (-0.25, -0.1, 0.0)),
        ],
        end_effectors=["tool"],
        collision_spheres=[
            CollisionSphere("base", (-0.12, 0.0), 0.16),
            CollisionSphere("base", (0.12, 0.0), 0.16),
            CollisionSphere("shoulder", (0.075, 0.0), 0.05),
            CollisionSphere("elbow", (0.075, 0.0), 0.05),
            CollisionSphere("wrist", (0.075, 0.0), 0.05),
        ],
        masses=[
            MassSpec("base", 10.0, (0.0, 0.0)),
            MassSpec("shoulder", 0.5, (0.075, 0.0)),
            MassSpec("elbow", 0.4, (0.075, 0.0)),
            MassSpec("wrist", 0.3, (0.075, 0.0)),
        ],
        base_vel_limits=[1.0, 1.0, 1.5],
    )


def _arm_2link() -> RobotModel:
    j = dict(axis="revolute", lower=-3.2, upper=3.2, vel_limit=2.0)
    return RobotModel(
        name="arm-2link",
        base_dof=0,
        joints=[
            JointSpec("j1", "base", origin=(0.0, 0.0, 0.0), **j),
            JointSpec("j2", "j1", origin=(1.0, 0.0, 0.0), **j),
        ],
        frames=[FrameSpec("tip", "j2", (1.0, 0.0, 0.0))],
        end_effectors=["tip"],
        collision_spheres=[
            CollisionSphere("j1", (0.5, 0.0), 0.1),
            CollisionSphere("j2", (0.5, 0.0), 0.1),
        ],
        masses=[
            MassSpec("j1", 1.0, (0.5, 0.0)),
            MassSpec("j2", 1.0, (0.5, 0.0)),
        ],
    )


_BUILDERS = {
    "planar-biped-7dof": _biped,
    "point-robot-2d": _point_robot,
    "planar-wheeler-6dof": _wheeler,
    "arm-2link": _arm_2link,
}


def fixture_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILDERS))


def load_fixture(name: str) -> RobotModel:
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise NotFound(
            f"unknown robot fixture {name!r}; available: {', '.join(fixture_names())}"
        ) from None
