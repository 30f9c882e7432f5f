"""Scenario and plan file formats.

A scenario bundles a robot, the contactable surfaces, initial obstacles,
the task (initial configuration and stance plus either a goal stance or a
goal base displacement) and optional scripted world edits. Plan files are
self contained: they embed the scenario they were planned for, so the
validator and the simulator need nothing else.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .balance import Contact, Stance
from .errors import ScenarioError
from .fixtures import fixture_names, load_fixture
from .robot import RobotModel, robot_from_dict
from .wholebody import Motion
from .world import Box, ContactSurface, Disc, Obstacle, WorldState

SCENARIO_FORMAT = "locoplan-scenario/1"
PLAN_FORMAT = "locoplan-plan/1"
TRAJ_FORMAT = "locoplan-traj/1"


@dataclass(frozen=True)
class WorldEvent:
    """Scripted world edit applied when the sim clock reaches `time`."""

    time: float
    action: str  # add | move | remove
    obstacle_id: str
    shape: Disc | Box | None = None

    def to_dict(self) -> dict:
        out = {"time": self.time, "action": self.action, "id": self.obstacle_id}
        if self.shape is not None:
            out["shape"] = _shape_to_dict(self.shape)
        return out


@dataclass(frozen=True)
class Task:
    q_init: np.ndarray
    sigma_init: Stance
    sigma_goal: Stance | None = None
    goal_displacement: np.ndarray | None = None


@dataclass
class Scenario:
    name: str
    robot: RobotModel
    world: WorldState
    task: Task
    gravity: np.ndarray
    events: list = field(default_factory=list)
    n_discretize: int = 50
    window: int = 20
    raw: dict = field(default_factory=dict)

    def scenario_hash(self) -> str:
        payload = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# parsing helpers; every failure names the offending field path


def _fail(path: str, where: str, msg: str):
    raise ScenarioError(path, f"{where}: {msg}")


def _get(data: dict, key: str, path: str, where: str, required=True, default=None):
    if key not in data:
        if required:
            _fail(path, f"{where}.{key}", "missing required field")
        return default
    return data[key]


def _vec(value, n: int, path: str, where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        _fail(path, where, "expected a list of numbers")
    if arr.shape != (n,) or not np.all(np.isfinite(arr)):
        _fail(path, where, f"expected {n} finite numbers, got {value!r}")
    return arr


def _shape_to_dict(shape: Disc | Box) -> dict:
    if isinstance(shape, Disc):
        return {"type": "disc", "center": list(shape.center), "radius": shape.radius}
    return {"type": "box", "min": list(shape.lo), "max": list(shape.hi)}


def _shape_from_dict(data: dict, path: str, where: str) -> Disc | Box:
    kind = _get(data, "type", path, where)
    if kind == "disc":
        center = _vec(_get(data, "center", path, where), 2, path, f"{where}.center")
        radius = float(_get(data, "radius", path, where))
        if radius <= 0:
            _fail(path, f"{where}.radius", "radius must be positive")
        return Disc(center=(float(center[0]), float(center[1])), radius=radius)
    if kind == "box":
        lo = _vec(_get(data, "min", path, where), 2, path, f"{where}.min")
        hi = _vec(_get(data, "max", path, where), 2, path, f"{where}.max")
        if not np.all(lo < hi):
            _fail(path, where, "box min must be strictly below max componentwise")
        return Box(lo=tuple(map(float, lo)), hi=tuple(map(float, hi)))
    _fail(path, f"{where}.type", f"unknown shape type {kind!r}")


def contact_to_dict(contact: Contact) -> dict:
    return {
        "end_effector": contact.end_effector,
        "position": [float(v) for v in contact.position],
        "normal": [float(v) for v in contact.normal],
        "mu": contact.mu,
    }


def _contact_from_dict(
    data: dict, model: RobotModel, world: WorldState, path: str, where: str
) -> Contact:
    ee = _get(data, "end_effector", path, where)
    if ee not in model.end_effectors:
        _fail(path, f"{where}.end_effector", f"{ee!r} is not an end effector of {model.name!r}")
    if "surface" in data:
        sid = data["surface"]
        if sid not in world.surfaces:
            _fail(path, f"{where}.surface", f"unknown surface {sid!r}")
        t = float(_get(data, "t", path, where))
        if not 0.0 <= t <= 1.0:
            _fail(path, f"{where}.t", f"t must lie in [0, 1], got {t}")
        surf = world.surfaces[sid]
        pos = surf.point_at(t)
        return Contact(ee, (float(pos[0]), float(pos[1])), tuple(surf.normal), surf.mu)
    pos = _vec(_get(data, "position", path, where), 2, path, f"{where}.position")
    nrm = _vec(_get(data, "normal", path, where), 2, path, f"{where}.normal")
    mu = float(_get(data, "mu", path, where))
    try:
        return Contact(ee, tuple(pos), tuple(nrm), mu)
    except Exception as exc:
        _fail(path, where, str(exc))


def stance_to_list(stance: Stance) -> list:
    return [contact_to_dict(c) for c in stance]


def _stance_from_list(entries, model, world, path, where) -> Stance:
    if not isinstance(entries, list):
        _fail(path, where, "expected a list of contacts")
    contacts = [
        _contact_from_dict(e, model, world, path, f"{where}[{k}]")
        for k, e in enumerate(entries)
    ]
    try:
        return Stance(contacts)
    except Exception as exc:
        _fail(path, where, str(exc))


def _surfaces_from_list(entries, path) -> list[ContactSurface]:
    surfaces = []
    for k, e in enumerate(entries):
        where = f"surfaces[{k}]"
        sid = _get(e, "id", path, where)
        p0 = _vec(_get(e, "p0", path, where), 2, path, f"{where}.p0")
        p1 = _vec(_get(e, "p1", path, where), 2, path, f"{where}.p1")
        nrm = _vec(_get(e, "normal", path, where), 2, path, f"{where}.normal")
        mu = float(_get(e, "mu", path, where))
        try:
            surfaces.append(ContactSurface(sid, tuple(p0), tuple(p1), tuple(nrm), mu))
        except Exception as exc:
            _fail(path, where, str(exc))
    return surfaces


def _obstacles_from_list(entries, path) -> list[Obstacle]:
    out = []
    for k, e in enumerate(entries):
        where = f"obstacles[{k}]"
        oid = _get(e, "id", path, where)
        shape = _shape_from_dict(_get(e, "shape", path, where), path, f"{where}.shape")
        out.append(Obstacle(oid, shape, created_at=float(e.get("created_at", 0.0))))
    return out


def _events_from_list(entries, path) -> list[WorldEvent]:
    events = []
    for k, e in enumerate(entries):
        where = f"events[{k}]"
        t = float(_get(e, "time", path, where))
        action = _get(e, "action", path, where)
        if action not in ("add", "move", "remove"):
            _fail(path, f"{where}.action", f"unknown action {action!r}")
        oid = _get(e, "id", path, where)
        shape = None
        if action in ("add", "move"):
            shape = _shape_from_dict(_get(e, "shape", path, where), path, f"{where}.shape")
        events.append(WorldEvent(t, action, oid, shape))
    return sorted(events, key=lambda ev: ev.time)


def scenario_from_dict(data: dict, path: str = "<dict>") -> Scenario:
    if not isinstance(data, dict):
        _fail(path, "$", "scenario root must be a JSON object")
    fmt = _get(data, "format", path, "$")
    if fmt != SCENARIO_FORMAT:
        _fail(path, "format", f"expected {SCENARIO_FORMAT!r}, got {fmt!r}")
    name = data.get("name", Path(path).stem)
    robot_spec = _get(data, "robot", path, "$")
    if isinstance(robot_spec, str):
        if robot_spec not in fixture_names():
            _fail(path, "robot", f"unknown fixture {robot_spec!r}; have {fixture_names()}")
        model = load_fixture(robot_spec)
    elif isinstance(robot_spec, dict):
        try:
            model = robot_from_dict(robot_spec)
        except Exception as exc:
            _fail(path, "robot", str(exc))
    else:
        _fail(path, "robot", "expected a fixture name or an inline robot object")

    surfaces = _surfaces_from_list(data.get("surfaces", []), path)
    obstacles = _obstacles_from_list(data.get("obstacles", []), path)
    world = WorldState(surfaces=surfaces, obstacles=obstacles)
    gravity = _vec(data.get("gravity", [0.0, -9.81]), 2, path, "gravity")

    task_d = _get(data, "task", path, "$")
    q_init = np.asarray(_get(task_d, "q_init", path, "task"), dtype=float)
    try:
        q_init = model.check_configuration(q_init)
    except Exception as exc:
        _fail(path, "task.q_init", str(exc))
    sigma_init = _stance_from_list(
        _get(task_d, "sigma_init", path, "task"), model, world, path, "task.sigma_init"
    )
    has_goal_stance = "sigma_goal" in task_d
    has_goal_disp = "goal_displacement" in task_d
    if has_goal_stance == has_goal_disp:
        _fail(path, "task", "exactly one of sigma_goal or goal_displacement is required")
    sigma_goal = None
    goal_disp = None
    if has_goal_stance:
        sigma_goal = _stance_from_list(
            task_d["sigma_goal"], model, world, path, "task.sigma_goal"
        )
    else:
        goal_disp = _vec(task_d["goal_displacement"], 2, path, "task.goal_displacement")

    events = _events_from_list(data.get("events", []), path)
    n_disc = int(data.get("n_discretize", 50))
    window = int(data.get("window", 20))
    if n_disc < 2:
        _fail(path, "n_discretize", "need at least 2 vertices")
    if window < 2:
        _fail(path, "window", "window must be >= 2")

    task = Task(q_init, sigma_init, sigma_goal, goal_disp)
    return Scenario(
        name=name,
        robot=model,
        world=world,
        task=task,
        gravity=gravity,
        events=events,
        n_discretize=n_disc,
        window=window,
        raw=data,
    )


SCENARIO_DIR = Path(__file__).parent / "scenarios"


def builtin_scenario_names() -> tuple[str, ...]:
    return tuple(sorted(p.stem for p in SCENARIO_DIR.glob("*.json")))


def load_scenario(path) -> Scenario:
    """Load a scenario file; bare names resolve against the built-in set."""
    p = Path(path)
    if not p.exists() and "/" not in str(path):
        cand = SCENARIO_DIR / f"{path}.json"
        if cand.exists():
            p = cand
    if not p.exists():
        raise ScenarioError(
            str(p), f"file not found; built-ins: {', '.join(builtin_scenario_names())}"
        )
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(str(p), f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return scenario_from_dict(data, str(p))


# ---------------------------------------------------------------------------
# plan files


def motion_to_dict(motion: Motion) -> dict:
    return {
        "stance": stance_to_list(motion.stance),
        "knots": [[float(v) for v in q] for q in motion.knots],
        "timestamps": [float(t) for t in motion.timestamps],
        "duration": motion.duration,
    }


def _motion_from_dict(data, model, world, path, where) -> Motion:
    stance = _stance_from_list(_get(data, "stance", path, where), model, world, path, f"{where}.stance")
    knots = [np.asarray(k, dtype=float) for k in _get(data, "knots", path, where)]
    stamps = [float(t) for t in _get(data, "timestamps", path, where)]
    duration = float(_get(data, "duration", path, where))
    try:
        return Motion(knots=knots, timestamps=stamps, duration=duration, stance=stance)
    except Exception as exc:
        _fail(path, where, str(exc))


def save_plan_file(path, scenario: Scenario, motions, stance_solution=None, meta=None):
    """Write a self contained trajectory plan.

    stance_solution, when present, is the offline contact search output:
    {"stances": [stance list per step], "configs": [...], "wrenches": [...],
     "stats": {...}}.
    """
    doc = {
        "format": TRAJ_FORMAT,
        "scenario": scenario.raw,
        "motions": [motion_to_dict(m) for m in motions],
        "meta": dict(meta or {}),
    }
    if stance_solution is not None:
        doc["stance_solution"] = {"format": PLAN_FORMAT, **stance_solution}
    Path(path).write_text(json.dumps(doc, indent=1))
    return doc


@dataclass
class PlanFile:
    scenario: Scenario
    motions: list
    stance_solution: dict | None
    meta: dict
    raw: dict


def load_plan_file(path) -> PlanFile:
    p = Path(path)
    if not p.exists():
        raise ScenarioError(str(p), "file not found")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(str(p), f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    fmt = data.get("format")
    if fmt != TRAJ_FORMAT:
        raise ScenarioError(str(p), f"format: expected {TRAJ_FORMAT!r}, got {fmt!r}")
    scenario = scenario_from_dict(_get(data, "scenario", str(p), "$"), str(p))
    motions = [
        _motion_from_dict(m, scenario.robot, scenario.world, str(p), f"motions[{k}]")
        for k, m in enumerate(_get(data, "motions", str(p), "$"))
    ]
    if not motions:
        raise ScenarioError(str(p), "motions: plan contains no motions")
    sol = data.get("stance_solution")
    if sol is not None and sol.get("format") != PLAN_FORMAT:
        raise ScenarioError(str(p), f"stance_solution.format: expected {PLAN_FORMAT!r}")
    return PlanFile(scenario, motions, sol, data.get("meta", {}), data)
