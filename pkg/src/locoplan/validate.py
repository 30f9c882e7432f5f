"""Independent re-checking of planner output.

Everything here re-derives feasibility from scratch (FK, LP balance,
signed distances), sharing no state with the planners that produced the
solution. A plan that passes validate_solution satisfies the offline
contract; refined trajectories go through refiner.validate_refinement.
"""

from __future__ import annotations

import numpy as np

from .balance import Stance, is_balanced, stance_feasible
from .errors import InvalidArgument
from .robot import RobotModel
from .scenario import Scenario
from .wholebody import contact_residual
from .world import WorldState, signed_distance

CONTACT_TOL = 1e-6
VEL_TOL = 1e-9


def _balance_check(check, *args) -> bool:
    # a config that misses its contacts cannot be wrench-checked; that is
    # a validation failure, not a crash
    try:
        return check(*args)
    except InvalidArgument:
        return False


def _collision_free(model: RobotModel, q, world: WorldState) -> bool:
    fk = model.fk(q)
    for sphere, center in fk.sphere_centers():
        d, _ = signed_distance(world, center)
        if d - sphere.radius < 0.0:
            return False
    return True


def validate_stance_sequence(
    model: RobotModel,
    world: WorldState,
    stances: list,
    configs: list,
    sigma_init: Stance,
    sigma_goal: Stance | None,
    gravity,
) -> list[str]:
    errors = []
    if len(stances) != len(configs):
        return [f"{len(stances)} stances but {len(configs)} configs"]
    if not stances:
        return ["empty stance sequence"]
    if stances[0].signature() != sigma_init.signature():
        errors.append("sequence does not start at the initial stance")
    if sigma_goal is not None and stances[-1].signature() != sigma_goal.signature():
        errors.append("sequence does not end at the goal stance")
    g = np.asarray(gravity, dtype=float)
    for j, (sig, q) in enumerate(zip(stances, configs)):
        q = np.asarray(q, dtype=float)
        if not model.within_limits(q):
            errors.append(f"step {j}: configuration violates joint limits")
        res = contact_residual(model, q, sig)
        if res.size and float(np.abs(res).max()) > CONTACT_TOL:
            errors.append(
                f"step {j}: contact residual {float(np.abs(res).max()):.2e} > {CONTACT_TOL}"
            )
        if not _collision_free(model, q, world):
            errors.append(f"step {j}: configuration collides")
        if not _balance_check(stance_feasible, model, q, sig, g):
            errors.append(f"step {j}: not balanced under its stance")
    for j in range(len(stances) - 1):
        delta = stances[j].sym_diff_count(stances[j + 1])
        if delta != 1:
            errors.append(f"transition {j}: stance delta is {delta} contacts, expected 1")
        inter = stances[j].intersection(stances[j + 1])
        q_next = np.asarray(configs[j + 1], dtype=float)
        if float(np.linalg.norm(g)) > 0:
            if len(inter) == 0:
                errors.append(f"transition {j}: empty shared stance under gravity")
            elif not _balance_check(is_balanced, model, q_next, inter, g):
                errors.append(f"transition {j}: arrival config unbalanced under shared stance")
        union = stances[j].union(stances[j + 1])
        res = contact_residual(model, q_next, union)
        if res.size and float(np.abs(res).max()) > CONTACT_TOL:
            errors.append(f"transition {j}: arrival config misses combined contacts")
    return errors


def validate_motions(
    model: RobotModel, world: WorldState, motions: list, gravity
) -> list[str]:
    errors = []
    g = np.asarray(gravity, dtype=float)
    vmax = model.velocity_limits()
    for j, motion in enumerate(motions):
        for k, q in enumerate(motion.knots):
            res = contact_residual(model, q, motion.stance)
            if res.size and float(np.abs(res).max()) > CONTACT_TOL:
                errors.append(f"motion {j} knot {k}: contact residual too large")
            if not _balance_check(stance_feasible, model, q, motion.stance, g):
                errors.append(f"motion {j} knot {k}: unbalanced")
            if not model.within_limits(q):
                errors.append(f"motion {j} knot {k}: joint limits violated")
            if not _collision_free(model, q, world):
                errors.append(f"motion {j} knot {k}: collision")
        for k in range(len(motion.knots) - 1):
            span = motion.timestamps[k + 1] - motion.timestamps[k]
            if span <= 0:
                continue  # coincident knots carry no rate
            rate = np.abs(motion.knots[k + 1] - motion.knots[k]) / span
            if np.any(rate > vmax + VEL_TOL):
                errors.append(f"motion {j} segment {k}: velocity limit exceeded")
    for j in range(len(motions) - 1):
        if not np.array_equal(motions[j].knots[-1], motions[j + 1].knots[0]):
            errors.append(f"motions {j}->{j + 1}: endpoints do not chain")
    return errors


def validate_solution(scenario: Scenario, motions: list, stance_solution: dict | None) -> dict:
    """Full plan check; returns {"ok", "errors", counts}."""
    from .scenario import _stance_from_list  # deferred: avoids cycle at import time

    model = scenario.robot
    world = scenario.world
    errors = []
    n_stances = 0
    if stance_solution is not None:
        stances = [
            _stance_from_list(entry, model, world, "<plan>", f"stances[{k}]")
            for k, entry in enumerate(stance_solution["stances"])
        ]
        configs = [np.asarray(q, dtype=float) for q in stance_solution["configs"]]
        n_stances = len(stances)
        errors += validate_stance_sequence(
            model, world, stances, configs,
            scenario.task.sigma_init, scenario.task.sigma_goal, scenario.gravity,
        )
        if len(motions) == len(stances) - 1:
            for j, motion in enumerate(motions):
                if motion.stance.signature() != stances[j].signature():
                    errors.append(f"motion {j}: stance does not match the sequence")
                if not np.allclose(motion.knots[0], configs[j], atol=1e-12):
                    errors.append(f"motion {j}: does not start at step config {j}")
                if not np.allclose(motion.knots[-1], configs[j + 1], atol=1e-12):
                    errors.append(f"motion {j}: does not end at step config {j + 1}")
        elif (
            len(stances) == 1
            and len(motions) == 1
            and np.array_equal(motions[0].knots[0], motions[0].knots[-1])
        ):
            pass  # hold-in-place plan for an already-satisfied goal stance
        elif motions:
            errors.append(
                f"{len(motions)} motions for {len(stances)} stances (expected {len(stances) - 1})"
            )
    errors += validate_motions(model, world, motions, scenario.gravity)
    if motions and not np.allclose(motions[0].knots[0], scenario.task.q_init, atol=1e-9):
        errors.append("plan does not start at the task initial configuration")
    return {
        "ok": not errors,
        "errors": errors,
        "n_stances": n_stances,
        "n_motions": len(motions),
    }
