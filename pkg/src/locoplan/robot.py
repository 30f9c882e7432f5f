"""Planar kinematic robot models: forward kinematics, Jacobians, limits.

A robot lives in a 2D plane with coordinates (x, z) and in-plane rotation
theta. The floating base contributes 0, 2 (x, z) or 3 (x, z, theta) degrees
of freedom, followed by the joint values, so a configuration is a vector of
length n = base_dof + #joints.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, NotFound, ScenarioError

ROBOT_FORMAT = "locoplan-robot/1"

REVOLUTE = "revolute"
PRISMATIC_X = "prismatic_x"
PRISMATIC_Z = "prismatic_z"
_AXES = (REVOLUTE, PRISMATIC_X, PRISMATIC_Z)

BASE = "base"


@dataclass(frozen=True)
class JointSpec:
    name: str
    parent: str
    axis: str
    origin: tuple[float, float, float]  # fixed transform from parent frame
    lower: float
    upper: float
    vel_limit: float


@dataclass(frozen=True)
class FrameSpec:
    """Fixed attachment frame (end-effector tip, wheel center)."""

    id: str
    parent: str
    origin: tuple[float, float, float]


@dataclass(frozen=True)
class CollisionSphere:
    frame: str
    offset: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class MassSpec:
    frame: str
    mass: float
    com: tuple[float, float]  # local CoM offset in the frame


def _compose(a: np.ndarray, b) -> np.ndarray:
    """Compose planar poses a*b, each (x, z, theta)."""
    c, s = math.cos(a[2]), math.sin(a[2])
    return np.array(
        [a[0] + c * b[0] - s * b[1], a[1] + s * b[0] + c * b[1], a[2] + b[2]]
    )


def _apply(pose: np.ndarray, point) -> np.ndarray:
    """Map a local point into the world through a planar pose."""
    c, s = math.cos(pose[2]), math.sin(pose[2])
    return np.array(
        [pose[0] + c * point[0] - s * point[1], pose[1] + s * point[0] + c * point[1]]
    )


class RobotModel:
    """Immutable planar robot description.

    Frame ids are "base", every joint name (the frame after the joint's
    motion) and every fixed FrameSpec id. Parents must be declared before
    children so a single forward pass resolves all poses.
    """

    def __init__(
        self,
        name: str,
        base_dof: int,
        joints: list[JointSpec],
        frames: list[FrameSpec],
        end_effectors: list[str],
        collision_spheres: list[CollisionSphere],
        masses: list[MassSpec],
        base_vel_limits: list[float] | None = None,
    ):
        if base_dof not in (0, 2, 3):
            raise InvalidArgument(f"base_dof must be 0, 2 or 3, got {base_dof}")
        self.name = name
        self.base_dof = base_dof
        self.joints = tuple(joints)
        self.frames = tuple(frames)
        self.end_effectors = tuple(end_effectors)
        self.collision_spheres = tuple(collision_spheres)
        self.masses = tuple(masses)
        self.n = base_dof + len(self.joints)
        if self.n <= 0:
            raise InvalidArgument("robot has no degrees of freedom")
        if base_vel_limits is None:
            base_vel_limits = [1.0] * base_dof
        if len(base_vel_limits) != base_dof:
            raise InvalidArgument("base_vel_limits length must equal base_dof")
        self.base_vel_limits = tuple(float(v) for v in base_vel_limits)

        self._joint_index = {j.name: k for k, j in enumerate(self.joints)}
        known = {BASE}
        for j in self.joints:
            if j.axis not in _AXES:
                raise InvalidArgument(f"joint {j.name}: unknown axis {j.axis!r}")
            if not j.lower < j.upper:
                raise InvalidArgument(f"joint {j.name}: lower must be < upper")
            if not j.vel_limit > 0:
                raise InvalidArgument(f"joint {j.name}: vel_limit must be > 0")
            if j.parent not in known:
                raise InvalidArgument(f"joint {j.name}: undeclared parent {j.parent!r}")
            if j.name in known:
                raise InvalidArgument(f"duplicate frame id {j.name!r}")
            known.add(j.name)
        for f in self.frames:
            if f.parent not in known:
                raise InvalidArgument(f"frame {f.id}: undeclared parent {f.parent!r}")
            if f.id in known:
                raise InvalidArgument(f"duplicate frame id {f.id!r}")
            known.add(f.id)
        self.frame_ids = tuple(known)
        for ee in self.end_effectors:
            if ee not in known:
                raise InvalidArgument(f"end effector {ee!r} is not a frame")
        for s in self.collision_spheres:
            if s.frame not in known:
                raise InvalidArgument(f"collision sphere on unknown frame {s.frame!r}")
            if not s.radius > 0:
                raise InvalidArgument("collision sphere radius must be > 0")
        for m in self.masses:
            if m.frame not in known:
                raise InvalidArgument(f"mass on unknown frame {m.frame!r}")
            if m.mass <= 0:
                raise InvalidArgument("link mass must be > 0")
        self.total_mass = sum(m.mass for m in self.masses)

        # parent chain (frame id -> parent frame id) for Jacobian walks
        self._parent = {BASE: None}
        for j in self.joints:
            self._parent[j.name] = j.parent
        for f in self.frames:
            self._parent[f.id] = f.parent

    # -- limits -----------------------------------------------------------

    def joint_lower(self) -> np.ndarray:
        return np.array([j.lower for j in self.joints])

    def joint_upper(self) -> np.ndarray:
        return np.array([j.upper for j in self.joints])

    def velocity_limits(self) -> np.ndarray:
        """Per-DoF velocity limits, base DoFs first."""
        return np.array(
            list(self.base_vel_limits) + [j.vel_limit for j in self.joints]
        )

    def clamp_to_limits(self, q: np.ndarray) -> np.ndarray:
        out = q.copy()
        b = self.base_dof
        out[b:] = np.clip(q[b:], self.joint_lower(), self.joint_upper())
        return out

    def within_limits(self, q: np.ndarray, margin: float = 0.0) -> bool:
        b = self.base_dof
        return bool(
            np.all(q[b:] >= self.joint_lower() + margin)
            and np.all(q[b:] <= self.joint_upper() - margin)
        )

    def check_configuration(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.n,):
            raise InvalidArgument(
                f"configuration has shape {q.shape}, expected ({self.n},)"
            )
        if not np.all(np.isfinite(q)):
            raise InvalidArgument("configuration contains non-finite values")
        return q

    def fk(self, q: np.ndarray) -> "FrameTree":
        return FrameTree(self, self.check_configuration(q))

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": ROBOT_FORMAT,
            "name": self.name,
            "base_dof": self.base_dof,
            "base_vel_limits": list(self.base_vel_limits),
            "joints": [
                {
                    "name": j.name,
                    "parent": j.parent,
                    "axis": j.axis,
                    "origin": list(j.origin),
                    "limits": [j.lower, j.upper],
                    "vel_limit": j.vel_limit,
                }
                for j in self.joints
            ],
            "frames": [
                {"id": f.id, "parent": f.parent, "origin": list(f.origin)}
                for f in self.frames
            ],
            "end_effectors": list(self.end_effectors),
            "collision_spheres": [
                {"frame": s.frame, "offset": list(s.offset), "radius": s.radius}
                for s in self.collision_spheres
            ],
            "masses": [
                {"frame": m.frame, "mass": m.mass, "com": list(m.com)}
                for m in self.masses
            ],
        }


def robot_from_dict(data: dict, path: str = "robot") -> RobotModel:
    """Build a RobotModel from a fixture dict, with field-path diagnostics."""
    if not isinstance(data, dict):
        raise ScenarioError(path, "expected an object")
    fmt = data.get("format")
    if fmt != ROBOT_FORMAT:
        raise ScenarioError(f"{path}.format", f"expected {ROBOT_FORMAT!r}, got {fmt!r}")
    try:
        joints = [
            JointSpec(
                name=j["name"],
                parent=j.get("parent", BASE),
                axis=j.get("axis", REVOLUTE),
                origin=tuple(j.get("origin", (0.0, 0.0, 0.0))),
                lower=float(j["limits"][0]),
                upper=float(j["limits"][1]),
                vel_limit=float(j["vel_limit"]),
            )
            for j in data.get("joints", [])
        ]
        frames = [
            FrameSpec(id=f["id"], parent=f["parent"], origin=tuple(f["origin"]))
            for f in data.get("frames", [])
        ]
        spheres = [
            CollisionSphere(
                frame=s["frame"], offset=tuple(s["offset"]), radius=float(s["radius"])
            )
            for s in data.get("collision_spheres", [])
        ]
        masses = [
            MassSpec(frame=m["frame"], mass=float(m["mass"]), com=tuple(m["com"]))
            for m in data.get("masses", [])
        ]
        return RobotModel(
            name=data["name"],
            base_dof=int(data["base_dof"]),
            joints=joints,
            frames=frames,
            end_effectors=list(data.get("end_effectors", [])),
            collision_spheres=spheres,
            masses=masses,
            base_vel_limits=data.get("base_vel_limits"),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ScenarioError(path, f"malformed robot fixture: {exc!r}") from exc


def load_robot_file(path: str | Path) -> RobotModel:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ScenarioError(str(path), f"invalid JSON: {exc}") from exc
    return robot_from_dict(data, path=str(path))


def save_robot_file(model: RobotModel, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(model.to_dict(), f, indent=2)


class FrameTree:
    """Forward-kinematics result for one configuration.

    Caches world poses of every frame plus joint anchor data so repeated
    Jacobian queries against the same configuration stay cheap.
    """

    def __init__(self, model: RobotModel, q: np.ndarray):
        self.model = model
        self.q = q
        b = model.base_dof
        base = np.zeros(3)
        base[:b] = q[:b]
        poses = {BASE: base}
        for k, j in enumerate(model.joints):
            frame = _compose(poses[j.parent], j.origin)
            qk = q[b + k]
            if j.axis == REVOLUTE:
                frame = frame.copy()
                frame[2] += qk
            elif j.axis == PRISMATIC_X:
                frame = _compose(frame, (qk, 0.0, 0.0))
            else:  # PRISMATIC_Z
                frame = _compose(frame, (0.0, qk, 0.0))
            poses[j.name] = frame
        for f in model.frames:
            poses[f.id] = _compose(poses[f.parent], f.origin)
        self.poses = poses
        # q-index -> (kind, anchor/axis) for Jacobian columns
        self._joint_world: list[tuple[str, np.ndarray]] = []
        for j in model.joints:
            pose = poses[j.name]
            if j.axis == REVOLUTE:
                self._joint_world.append((REVOLUTE, pose[:2].copy()))
            else:
                ang = poses[j.parent][2] + j.origin[2]
                axis = np.array([math.cos(ang), math.sin(ang)])
                if j.axis == PRISMATIC_Z:
                    axis = np.array([-axis[1], axis[0]])
                self._joint_world.append(("prismatic", axis))

    def pose(self, frame: str) -> np.ndarray:
        try:
            return self.poses[frame]
        except KeyError:
            raise NotFound(f"unknown frame {frame!r}") from None

    def point(self, frame: str, offset=(0.0, 0.0)) -> np.ndarray:
        return _apply(self.pose(frame), offset)

    def _path_joints(self, frame: str) -> list[int]:
        """Indices (into model.joints) of joints between base and frame."""
        out = []
        model = self.model
        cur = frame
        while cur is not None:
            if cur in model._joint_index:
                out.append(model._joint_index[cur])
            cur = model._parent.get(cur)
        out.reverse()
        return out

    def point_jacobian(self, frame: str, offset=(0.0, 0.0)) -> np.ndarray:
        """2 x n Jacobian of the world position of a point fixed to `frame`."""
        model = self.model
        p = self.point(frame, offset)
        J = np.zeros((2, model.n))
        b = model.base_dof
        if b >= 2:
            J[0, 0] = 1.0
            J[1, 1] = 1.0
        if b == 3:
            rel = p - self.poses[BASE][:2]
            J[0, 2] = -rel[1]
            J[1, 2] = rel[0]
        for k in self._path_joints(frame):
            kind, data = self._joint_world[k]
            if kind == REVOLUTE:
                rel = p - data
                J[0, b + k] = -rel[1]
                J[1, b + k] = rel[0]
            else:
                J[:, b + k] = data
        return J

    def frame_jacobian(self, frame: str) -> np.ndarray:
        """3 x n Jacobian of the (x, z, theta) pose of `frame`."""
        model = self.model
        J = np.zeros((3, model.n))
        J[:2] = self.point_jacobian(frame)
        b = model.base_dof
        if b == 3:
            J[2, 2] = 1.0
        for k in self._path_joints(frame):
            if self.model.joints[k].axis == REVOLUTE:
                J[2, b + k] = 1.0
        return J

    def com(self) -> np.ndarray:
        model = self.model
        if not model.masses:
            raise InvalidArgument(f"robot {model.name!r} declares no link masses")
        acc = np.zeros(2)
        for m in model.masses:
            acc += m.mass * self.point(m.frame, m.com)
        return acc / model.total_mass

    def com_jacobian(self) -> np.ndarray:
        model = self.model
        J = np.zeros((2, model.n))
        for m in model.masses:
            J += m.mass * self.point_jacobian(m.frame, m.com)
        return J / model.total_mass

    def sphere_centers(self) -> list[tuple[CollisionSphere, np.ndarray]]:
        return [(s, self.point(s.frame, s.offset)) for s in self.model.collision_spheres]


# -- module-level operations ----------------------------------------------


def forward_kinematics(model: RobotModel, q: np.ndarray) -> dict[str, np.ndarray]:
    """World pose (x, z, theta) of every frame of the model."""
    return dict(model.fk(q).poses)


def frame_jacobian(model: RobotModel, q: np.ndarray, frame: str) -> np.ndarray:
    """3 x n Jacobian of a frame pose; zero columns off the kinematic path."""
    return model.fk(q).frame_jacobian(frame)


def joint_limit_violation(
    model: RobotModel, q: np.ndarray, margin: float = 0.0
) -> np.ndarray:
    """Per-joint hinge distance outside [lower+margin, upper-margin].

    Base DoFs are unbounded and excluded; the result has one entry per joint.
    """
    q = model.check_configuration(q)
    if margin < 0:
        raise InvalidArgument("margin must be >= 0")
    lo = model.joint_lower()
    up = model.joint_upper()
    if np.any(margin >= (up - lo) / 2):
        raise InvalidArgument("margin exceeds half the joint range")
    qj = q[model.base_dof :]
    return np.maximum(0.0, qj - (up - margin)) + np.maximum(0.0, (lo + margin) - qj)
