"""Headless kinematic simulator.

Executes a planned trajectory at a fixed tick rate, applies scripted and
queued world edits at tick boundaries, runs the moving-horizon refiner,
and records a replayable JSON-lines run log. One authoritative loop owns
all mutation; API handlers only enqueue commands.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, NotFound
from .refiner import OnlineRefiner, RefinerParams, update_horizon
from .scenario import Scenario, WorldEvent, _shape_to_dict
from .wholebody import discretize_trajectory
from .world import Obstacle, signed_distance

RUNLOG_FORMAT = "locoplan-runlog/1"
TICK_DT = 0.01
# wall-clock measurements; stripped when comparing logs for determinism
NONDETERMINISTIC_KEYS = ("refine_ms", "total_refine_ms", "max_tick_ms", "wall_time")


@dataclass
class SimParams:
    tick_dt: float = TICK_DT
    refiner: RefinerParams = field(default_factory=RefinerParams)


def min_clearance(model, q, world) -> float:
    fk = model.fk(q)
    worst = float("inf")
    for sphere, center in fk.sphere_centers():
        d, _ = signed_distance(world, center)
        worst = min(worst, d - sphere.radius)
    return worst


class SimService:
    """Single-loop simulator over a multi-motion plan."""

    def __init__(self, scenario: Scenario, motions, params: SimParams | None = None, seed: int = 0):
        if not motions:
            raise InvalidArgument("nothing to simulate: empty motion list")
        self.scenario = scenario
        self.model = scenario.robot
        self.world = scenario.world.snapshot()
        self.params = params or SimParams()
        self.seed = seed
        self.motions = list(motions)
        self.pending_events = list(scenario.events)  # sorted by time
        self.command_queue: list = []
        self.lock = threading.RLock()

        self.clock = 0.0
        self.tick = 0
        self.motion_index = 0
        self.motion_start = 0.0
        self.paused = False
        self.terminal = False
        self.executed: list[np.ndarray] = []
        self.records: list[dict] = []
        self.min_clearance_seen = float("inf")
        self.total_refine_ms = 0.0
        self.max_tick_ms = 0.0
        self.last_tick_record: dict = {}

        self._begin_motion(0)
        self.records.append(
            {
                "record": "header",
                "format": RUNLOG_FORMAT,
                "scenario": scenario.name,
                "scenario_hash": scenario.scenario_hash(),
                "seed": seed,
                "tick_dt": self.params.tick_dt,
                "n_motions": len(self.motions),
                "window": self.params.refiner.window,
            }
        )

    # -- motion bookkeeping ------------------------------------------------

    def _begin_motion(self, index: int):
        motion = self.motions[index]
        n = max(2, self.scenario.n_discretize)
        configs, dt = discretize_trajectory(motion, n)
        self.configs_dt = dt
        self.refiner = OnlineRefiner(
            self.model,
            motion.stance,
            self.scenario.gravity,
            configs,
            dt,
            self.params.refiner,
        )
        self.motion_index = index
        self.motion_start = self.clock

    def executed_config(self) -> np.ndarray:
        """Linear interpolation of the published window at the current clock."""
        pub = self.refiner.published
        t_local = self.clock - self.motion_start
        s = t_local / self.configs_dt
        k = int(np.floor(s + 1e-12))
        if k >= len(pub) - 1:
            return pub[-1].copy()
        if k < 0:
            return pub[0].copy()
        a = s - k
        return (1.0 - a) * pub[k] + a * pub[k + 1]

    # -- world edits ---------------------------------------------------------

    def apply_world_update(self, action: str, obstacle_id: str, shape=None, source="api") -> int:
        """Shared mutation path for scripted events and live commands."""
        if action == "add":
            rev = self.world.add_obstacle(
                Obstacle(obstacle_id, shape, created_at=self.clock)
            )
        elif action == "move":
            rev = self.world.move_obstacle(obstacle_id, shape)
        elif action == "remove":
            rev = self.world.remove_obstacle(obstacle_id)
        else:
            raise InvalidArgument(f"unknown world update action {action!r}")
        rec = {
            "record": "event",
            "tick": self.tick,
            "time": round(self.clock, 9),
            "action": action,
            "id": obstacle_id,
            "revision": rev,
            "source": source,
        }
        if shape is not None:
            rec["shape"] = _shape_to_dict(shape)
        self.records.append(rec)
        return rev

    def enqueue(self, command: dict):
        with self.lock:
            self.command_queue.append(command)

    def _drain_due_edits(self):
        while self.pending_events and self.pending_events[0].time <= self.clock + 1e-12:
            ev: WorldEvent = self.pending_events.pop(0)
            self.apply_world_update(ev.action, ev.obstacle_id, ev.shape, source="scripted")
        with self.lock:
            queued, self.command_queue = self.command_queue, []
        for cmd in queued:
            if cmd.get("kind") == "refiner":
                self._apply_refiner_patch(cmd)
                continue
            try:
                self.apply_world_update(
                    cmd["action"], cmd["id"], cmd.get("shape"), source="api"
                )
            except (NotFound, InvalidArgument) as exc:
                self.records.append(
                    {
                        "record": "event",
                        "tick": self.tick,
                        "time": round(self.clock, 9),
                        "action": cmd.get("action"),
                        "id": cmd.get("id"),
                        "error": str(exc),
                        "source": "api",
                    }
                )

    def _apply_refiner_patch(self, cmd: dict):
        from dataclasses import replace

        weights = replace(self.params.refiner.weights, **cmd.get("weights", {}))
        new_params = replace(self.params.refiner, weights=weights)
        self.params.refiner = new_params
        self.refiner.params = new_params
        self.refiner.last_converged = False  # force one re-solve under new weights
        self.records.append(
            {
                "record": "event",
                "tick": self.tick,
                "time": round(self.clock, 9),
                "action": "refiner",
                "weights": cmd.get("weights", {}),
                "source": "api",
            }
        )

    # -- stepping ------------------------------------------------------------

    def step(self, dt: float | None = None):
        """One tick: advance clock, apply due edits, shift horizon, refine.

        The execution index follows the clock, so two half ticks land on
        the same state as one full tick.
        """
        if self.terminal:
            return
        dt = self.params.tick_dt if dt is None else float(dt)
        if dt <= 0:
            raise InvalidArgument("tick dt must be positive")
        t_wall = time.perf_counter()
        with self.lock:
            self.clock = round(self.clock + dt, 9)
            self.tick += 1
            self._drain_due_edits()

            st = self.refiner.state
            t_local = self.clock - self.motion_start
            i_target = min(int((t_local + 1e-12) / self.configs_dt), st.n - 1)
            while st.i < i_target:
                i_new = st.i + 1
                update_horizon(st, i_new, self.refiner.published[i_new])

            report = self.refiner.refine_tick(self.world)
            self.total_refine_ms += report.refine_ms

            q = self.executed_config()
            self.executed.append(q)
            clear = min_clearance(self.model, q, self.world)
            self.min_clearance_seen = min(self.min_clearance_seen, clear)

            rec = {
                "record": "tick",
                "tick": self.tick,
                "time": round(self.clock, 9),
                "motion": self.motion_index,
                "q": [float(v) for v in q],
                "clearance": clear,
                "revision": self.world.revision,
            }
            rec.update(report.telemetry())
            self.records.append(rec)
            self.last_tick_record = rec

            motion = self.motions[self.motion_index]
            if self.clock - self.motion_start >= motion.duration - 1e-12:
                if self.motion_index + 1 < len(self.motions):
                    self._begin_motion(self.motion_index + 1)
                else:
                    self.terminal = True
                    self._finalize()
        ms = (time.perf_counter() - t_wall) * 1e3
        self.max_tick_ms = max(self.max_tick_ms, ms)

    def _finalize(self):
        endpoint = self.executed[-1] if self.executed else self.scenario.task.q_init
        self.records.append(
            {
                "record": "final",
                "success": self.min_clearance_seen >= 0.0,
                "ticks": self.tick,
                "min_clearance": self.min_clearance_seen,
                "endpoint": [float(v) for v in endpoint],
                "duration": round(self.clock, 9),
                "total_refine_ms": self.total_refine_ms,
                "max_tick_ms": self.max_tick_ms,
            }
        )

    def run(self, max_ticks: int = 10_000_000, realtime: bool = False, stop=None):
        """Drive ticks until the plan finishes.

        Pause freezes the loop, not the clock math: while paused no tick
        runs, so scripted events and execution hold still together. A
        headless run never pauses (nothing could resume it).
        """
        while not self.terminal and self.tick < max_ticks:
            if stop is not None and stop.is_set():
                break
            if realtime and self.paused:
                time.sleep(self.params.tick_dt)
                continue
            t0 = time.perf_counter()
            self.step()
            if realtime:
                leftover = self.params.tick_dt - (time.perf_counter() - t0)
                if leftover > 0:
                    time.sleep(leftover)
        return self

    # -- output ----------------------------------------------------------------

    def state_dict(self) -> dict:
        with self.lock:
            q = self.executed_config()
            lo, hi = self.refiner.state.window_range()
            return {
                "tick": self.tick,
                "time": round(self.clock, 9),
                "robot": self.model.name,
                "q": [float(v) for v in q],
                "motion": self.motion_index,
                "i": self.refiner.state.i,
                "window": [lo, hi],
                "revision": self.world.revision,
                "paused": self.paused,
                "terminal": self.terminal,
                "obstacles": [
                    {"id": o.id, "shape": _shape_to_dict(o.shape), "created_at": o.created_at}
                    for o in self.world.obstacles.values()
                ],
                "surfaces": [
                    {
                        "id": s.id,
                        "p0": [float(v) for v in s.p0],
                        "p1": [float(v) for v in s.p1],
                        "normal": [float(v) for v in s.normal],
                        "mu": s.mu,
                    }
                    for s in self.world.surfaces.values()
                ],
                "configs": [[float(v) for v in c] for c in self.refiner.published],
            }

    def write_runlog(self, path):
        lines = [json.dumps(r, separators=(",", ":")) for r in self.records]
        Path(path).write_text("\n".join(lines) + "\n")
        return path


def load_runlog(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def strip_wall_times(records: list[dict]) -> list[dict]:
    out = []
    for r in records:
        out.append({k: v for k, v in r.items() if k not in NONDETERMINISTIC_KEYS})
    return out


def replay_events(records: list[dict]) -> list[WorldEvent]:
    """Rebuild the world-edit schedule a run log captured, API edits included."""
    from .scenario import _shape_from_dict

    events = []
    for r in records:
        if r.get("record") != "event" or "error" in r or r.get("action") == "refiner":
            continue
        shape = None
        if "shape" in r:
            shape = _shape_from_dict(r["shape"], "<runlog>", "event.shape")
        events.append(WorldEvent(float(r["time"]), r["action"], r["id"], shape))
    return sorted(events, key=lambda ev: ev.time)


def replay(scenario: Scenario, motions, records: list[dict], params: SimParams | None = None) -> SimService:
    """Re-run a logged session headlessly; the executed path must reproduce."""
    import copy

    scenario = copy.copy(scenario)
    scenario.events = replay_events(records)
    header = records[0] if records and records[0].get("record") == "header" else {}
    sim = SimService(scenario, motions, params=params, seed=int(header.get("seed", 0)))
    sim.run()
    return sim
