"""Offline planning pipeline: scenario in, executable plan out.

Two routes. A goal stance triggers the full contact search followed by
one whole-body motion per stance transition. A goal displacement skips
the contact search (the stance never changes) and plans a single motion
to the shifted base pose.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .scenario import Scenario, save_plan_file, stance_to_list
from .stance_planner import PlanStats, StancePlannerParams, plan_stances
from .wholebody import GlobalPlan, Motion, WholeBodyParams, plan_motion


@dataclass
class PipelineResult:
    success: bool
    motions: list = field(default_factory=list)
    stance_solution: dict | None = None
    stats: PlanStats = field(default_factory=PlanStats)
    failure: str | None = None
    seed: int = 0

    @property
    def plan(self) -> GlobalPlan:
        return GlobalPlan(motions=self.motions)

    def save(self, path, scenario: Scenario):
        meta = {"seed": self.seed, "stats": self.stats.to_dict()}
        return save_plan_file(path, scenario, self.motions, self.stance_solution, meta)


def _trivial_motion(model, q, stance) -> Motion:
    return Motion(
        knots=[q.copy(), q.copy()],
        timestamps=[0.0, WholeBodyParams().min_duration],
        duration=WholeBodyParams().min_duration,
        stance=stance,
    )


def plan_scenario(
    scenario: Scenario,
    seed: int = 0,
    stance_params: StancePlannerParams = StancePlannerParams(),
    motion_params: WholeBodyParams = WholeBodyParams(),
) -> PipelineResult:
    model = scenario.robot
    world = scenario.world.snapshot()
    task = scenario.task
    g = scenario.gravity

    if task.goal_displacement is not None:
        t0 = time.perf_counter()
        q_goal = task.q_init.copy()
        if model.base_dof < 2:
            raise InvalidArgument(
                "goal_displacement tasks need a mobile base (base_dof >= 2)"
            )
        q_goal[0] += task.goal_displacement[0]
        q_goal[1] += task.goal_displacement[1]
        motion = plan_motion(
            model, world, task.q_init, q_goal, task.sigma_init,
            motion_params, seed=seed, gravity=g,
        )
        elapsed = time.perf_counter() - t0
        stats = PlanStats(
            planning_time=elapsed,
            transition_time=0.0,
            iterations=0,
            tree_vertices=1,
            solution_stances=1,
        )
        if motion is None:
            return PipelineResult(False, stats=stats, failure="motion planning failed", seed=seed)
        return PipelineResult(True, motions=[motion], stats=stats, seed=seed)

    result = plan_stances(
        model, world, task.sigma_init, task.q_init, task.sigma_goal,
        params=stance_params, seed=seed, gravity=g,
    )
    if not result.success:
        return PipelineResult(False, stats=result.stats, failure=result.failure, seed=seed)

    t0 = time.perf_counter()
    motions = []
    for j in range(len(result.S_sigma) - 1):
        motion = plan_motion(
            model, world, result.S_q[j], result.S_q[j + 1], result.S_sigma[j],
            motion_params, seed=seed + j, gravity=g,
        )
        if motion is None:
            return PipelineResult(
                False,
                stats=result.stats,
                failure=f"motion planning failed at transition {j}",
                seed=seed,
            )
        motions.append(motion)
    if not motions:  # degenerate: goal stance already held
        motions = [_trivial_motion(model, result.S_q[0], result.S_sigma[0])]
    result.stats.planning_time += time.perf_counter() - t0

    solution = {
        "stances": [stance_to_list(s) for s in result.S_sigma],
        "configs": [[float(v) for v in q] for q in result.S_q],
        "wrenches": [w.to_dict() for w in result.S_W],
        "stats": result.stats.to_dict(),
    }
    return PipelineResult(
        True, motions=motions, stance_solution=solution, stats=result.stats, seed=seed
    )
