"""Stance-space planning: grow a tree of contact stances.

Each tree vertex carries a stance, a configuration that realizes it, and
the contact forces that balance that configuration. One expansion either
adds a contact (sampled on a surface, or the exact goal contact when the
draw is goal-biased) or removes one, and a new vertex is accepted only if
a transition configuration exists that is feasible for both the parent
stance and the candidate stance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .balance import (
    Contact,
    Stance,
    WrenchSet,
    solve_contact_wrenches,
    stance_feasible,
    support_interval,
)
from .errors import InvalidArgument, NotFound
from .robot import RobotModel
from .wholebody import contact_jacobian, contact_residual
from .world import WorldState, sample_contact_point, signed_distance

REJECT_IK = "ik-failed"
REJECT_UNBALANCED = "unbalanced"
REJECT_COLLISION = "collision"
REJECT_DUPLICATE = "duplicate-stance"


@dataclass(frozen=True)
class StancePlannerParams:
    max_iters: int = 5000
    p_goal: float = 0.2
    beta: float = 0.5  # stance-set mismatch weight in the distance metric
    ik_iters: int = 200
    ik_damping: float = 1e-3
    ik_step_clamp: float = 0.2
    residual_target: float = 1e-9


@dataclass
class StanceVertex:
    stance: Stance
    q: np.ndarray
    wrench: WrenchSet
    parent: int | None


@dataclass
class StanceTree:
    vertices: list = field(default_factory=list)
    seed: int = 0
    iterations: int = 0
    attempted: set = field(default_factory=set)
    rejections: dict = field(default_factory=dict)

    def add(self, vertex: StanceVertex) -> int:
        self.vertices.append(vertex)
        return len(self.vertices) - 1

    def reject(self, reason: str) -> None:
        self.rejections[reason] = self.rejections.get(reason, 0) + 1


@dataclass
class PlanStats:
    planning_time: float = 0.0
    transition_time: float = 0.0
    iterations: int = 0
    tree_vertices: int = 0
    solution_stances: int = 0

    def to_dict(self) -> dict:
        return {
            "planning_time_s": self.planning_time,
            "transition_time_s": self.transition_time,
            "iterations": self.iterations,
            "tree_vertices": self.tree_vertices,
            "solution_stances": self.solution_stances,
        }


@dataclass
class PlanResult:
    success: bool
    S_sigma: list | None
    S_q: list | None
    S_W: list | None
    stats: PlanStats
    failure: str | None = None


def _dls_project(
    model: RobotModel,
    q0: np.ndarray,
    stance: Stance,
    params: StancePlannerParams,
) -> np.ndarray | None:
    """Damped least-squares pull onto the stacked contact constraints.

    Iterates are clamped to joint limits and to a maximum per-step norm so
    the projection cannot tunnel through workspace boundaries.
    """
    q = q0.copy()
    if len(stance) == 0:
        return q
    damping = params.ik_damping**2
    for _ in range(params.ik_iters):
        r = contact_residual(model, q, stance)
        if float(np.linalg.norm(r, ord=np.inf)) <= params.residual_target:
            return q
        J = contact_jacobian(model, q, stance)
        JJt = J @ J.T + damping * np.eye(J.shape[0])
        dq = -J.T @ np.linalg.solve(JJt, r)
        step = float(np.linalg.norm(dq, ord=np.inf))
        if step > params.ik_step_clamp:
            dq *= params.ik_step_clamp / step
        q = model.clamp_to_limits(q + dq)
    if float(np.linalg.norm(contact_residual(model, q, stance), ord=np.inf)) <= params.residual_target:
        return q
    return None


def _dls_project_com(
    model: RobotModel,
    q0: np.ndarray,
    stance: Stance,
    com_x_target: float,
    params: StancePlannerParams,
) -> np.ndarray | None:
    """Pull onto the contacts while steering the CoM x over a target.

    The CoM row rides in the same damped least-squares system as the
    contact rows, so the solver trades base shift against crouching on
    its own instead of alternating between the two.
    """
    q = q0.copy()
    damping = params.ik_damping**2
    for _ in range(params.ik_iters):
        fk = model.fk(q)
        rows = [contact_residual(model, q, stance), np.array([fk.com()[0] - com_x_target])]
        r = np.concatenate(rows)
        if float(np.linalg.norm(r, ord=np.inf)) <= params.residual_target:
            return q
        J = np.vstack([contact_jacobian(model, q, stance), fk.com_jacobian()[0][None, :]])
        JJt = J @ J.T + damping * np.eye(J.shape[0])
        dq = -J.T @ np.linalg.solve(JJt, r)
        step = float(np.linalg.norm(dq, ord=np.inf))
        if step > params.ik_step_clamp:
            dq *= params.ik_step_clamp / step
        q = model.clamp_to_limits(q + dq)
    fk = model.fk(q)
    r = np.concatenate(
        [contact_residual(model, q, stance), np.array([fk.com()[0] - com_x_target])]
    )
    if float(np.linalg.norm(r, ord=np.inf)) <= params.residual_target:
        return q
    return None


def _collision_free(model: RobotModel, world: WorldState, q: np.ndarray) -> bool:
    fk = model.fk(q)
    for sphere, center in fk.sphere_centers():
        d, _ = signed_distance(world, center)
        if d - sphere.radius < 0.0:
            return False
    return True


def generate_transition(
    model: RobotModel,
    world: WorldState,
    sigma_a: Stance,
    sigma_b: Stance,
    q_seed: np.ndarray,
    gravity=(0.0, -9.81),
    params: StancePlannerParams = StancePlannerParams(),
):
    """Configuration feasible for two adjacent stances, with its wrenches.

    Returns ((q, wrench), None) on success or (None, reason) where reason
    is one of ik-failed | unbalanced | collision. The configuration places
    every contact of both stances; balance is required only under the
    stance intersection, which implies balance under either stance since
    extra consistent contacts never hurt feasibility.
    """
    if sigma_a.sym_diff_count(sigma_b) > 1:
        raise InvalidArgument("stances differ by more than one contact")
    union = sigma_a.union(sigma_b)
    inter = sigma_a.intersection(sigma_b)
    g = np.asarray(gravity, dtype=float)

    q = _dls_project(model, q_seed, union, params)
    if q is None:
        return None, REJECT_IK
    if len(inter) == 0 and float(np.linalg.norm(g)) > 0:
        return None, REJECT_UNBALANCED

    balanced = stance_feasible(model, q, inter, g)
    if not balanced and len(inter) > 0 and model.base_dof >= 2:
        fk = model.fk(q)
        lo, hi = support_interval(inter, fk)
        q_new = _dls_project_com(model, q, union, 0.5 * (lo + hi), params)
        if q_new is not None:
            q = q_new
            balanced = stance_feasible(model, q, inter, g)
    if not balanced:
        return None, REJECT_UNBALANCED
    if not _collision_free(model, world, q):
        return None, REJECT_COLLISION

    if len(inter) > 0:
        wrench = solve_contact_wrenches(model, q, inter, g)
        if wrench is None:  # stance_feasible said yes; defensive
            return None, REJECT_UNBALANCED
    else:
        wrench = WrenchSet({})
    return (q, wrench), None


def _stance_centroid(stance: Stance) -> np.ndarray:
    if len(stance) == 0:
        return np.zeros(2)
    pts = np.array([c.position for c in stance], dtype=float)
    return pts.mean(axis=0)


def _base_position(model: RobotModel, q: np.ndarray) -> np.ndarray:
    b = model.base_dof
    out = np.zeros(2)
    out[: min(b, 2)] = q[: min(b, 2)]
    return out


def stance_distance(
    model: RobotModel, vertex: StanceVertex, target_stance: Stance, target_base, beta: float
) -> float:
    d = float(np.linalg.norm(_base_position(model, vertex.q) - np.asarray(target_base)))
    return d + beta * vertex.stance.sym_diff_count(target_stance)


def _propose_move(
    vertex_stance: Stance, target: Stance, rng: np.random.Generator, allow_empty: bool
):
    """One candidate move toward the target stance: add or remove a contact."""
    candidates = []
    for c in target:
        mine = vertex_stance.get(c.end_effector)
        if mine is None:
            candidates.append(("add", c))
        elif mine.key() != c.key():
            candidates.append(("remove", c.end_effector))
    for c in vertex_stance:
        if target.get(c.end_effector) is None:
            candidates.append(("remove", c.end_effector))
    if not allow_empty and len(vertex_stance) == 1:
        candidates = [m for m in candidates if m[0] != "remove"]
    if not candidates:
        return None
    return candidates[int(rng.integers(len(candidates)))]


def expand_step(
    tree: StanceTree,
    model: RobotModel,
    world: WorldState,
    sigma_fin: Stance,
    rng: np.random.Generator,
    params: StancePlannerParams = StancePlannerParams(),
    gravity=(0.0, -9.81),
):
    """One tree-growth iteration; returns (vertex id, None) or (None, reason).

    Also returns the wall time spent inside transition generation so the
    caller can report it separately.
    """
    tree.iterations += 1
    g = np.asarray(gravity, dtype=float)
    surface_ids = sorted(world.surfaces)
    goal_biased = bool(rng.uniform() < params.p_goal) or not surface_ids

    if goal_biased:
        target_stance = sigma_fin
        target_base = _stance_centroid(sigma_fin)
    else:
        sid = surface_ids[int(rng.integers(len(surface_ids)))]
        pos, normal, mu = sample_contact_point(world, sid, rng)
        ees = sorted(model.end_effectors)
        ee = ees[int(rng.integers(len(ees)))]
        target_stance = Stance([Contact(ee, tuple(pos), tuple(normal), mu)])
        target_base = pos

    dists = [
        stance_distance(model, v, target_stance, target_base, params.beta)
        for v in tree.vertices
    ]
    ni = int(np.argmin(dists))
    vertex = tree.vertices[ni]

    allow_empty = float(np.linalg.norm(g)) == 0.0
    move = _propose_move(vertex.stance, target_stance, rng, allow_empty)
    if move is None:
        tree.reject(REJECT_DUPLICATE)
        return None, REJECT_DUPLICATE, 0.0
    if move[0] == "add":
        candidate = vertex.stance.with_contact(move[1])
    else:
        candidate = vertex.stance.without(move[1])

    memo_key = (ni, candidate.signature())
    if memo_key in tree.attempted:
        tree.reject(REJECT_DUPLICATE)
        return None, REJECT_DUPLICATE, 0.0
    tree.attempted.add(memo_key)

    t0 = time.perf_counter()
    result, reason = generate_transition(
        model, world, vertex.stance, candidate, vertex.q, g, params
    )
    dt = time.perf_counter() - t0
    if result is None:
        tree.reject(reason)
        return None, reason, dt

    q, wrench_inter = result
    if len(candidate) > 0:
        wrench = solve_contact_wrenches(model, q, candidate, g)
        if wrench is None:
            wrench = wrench_inter
    else:
        wrench = WrenchSet({})
    vid = tree.add(StanceVertex(candidate, q, wrench, parent=ni))
    return vid, None, dt


def extract_solution(tree: StanceTree, goal_id: int):
    """Root-to-goal stance/configuration/wrench sequences."""
    if not 0 <= goal_id < len(tree.vertices):
        raise NotFound(f"no tree vertex {goal_id}")
    chain = []
    k: int | None = goal_id
    while k is not None:
        v = tree.vertices[k]
        chain.append(v)
        k = v.parent
    chain.reverse()
    return (
        [v.stance for v in chain],
        [v.q.copy() for v in chain],
        [v.wrench for v in chain],
    )


def _check_root(
    model: RobotModel,
    world: WorldState,
    stance: Stance,
    q: np.ndarray,
    gravity,
) -> WrenchSet:
    q = model.check_configuration(q)
    r = contact_residual(model, q, stance)
    if r.size and float(np.linalg.norm(r, ord=np.inf)) > 1e-4:
        raise InvalidArgument("invalid root: initial contacts not at their poses")
    if not model.within_limits(q):
        raise InvalidArgument("invalid root: joint limits violated")
    if not _collision_free(model, world, q):
        raise InvalidArgument("invalid root: colliding configuration")
    if len(stance) == 0:
        if float(np.linalg.norm(np.asarray(gravity, dtype=float))) > 0:
            raise InvalidArgument("invalid root: empty stance under gravity")
        return WrenchSet({})
    wrench = solve_contact_wrenches(model, q, stance, gravity)
    if wrench is None:
        raise InvalidArgument("invalid root: initial stance not balanced")
    return wrench


def plan_stances(
    model: RobotModel,
    world: WorldState,
    sigma_init: Stance,
    q_init: np.ndarray,
    sigma_fin: Stance,
    params: StancePlannerParams = StancePlannerParams(),
    seed: int = 0,
    gravity=(0.0, -9.81),
) -> PlanResult:
    """Search for stance/transition/wrench sequences from init to goal."""
    t_start = time.perf_counter()
    root_wrench = _check_root(model, world, sigma_init, q_init, gravity)
    stats = PlanStats()

    tree = StanceTree(seed=seed)
    tree.add(StanceVertex(sigma_init, np.asarray(q_init, dtype=float).copy(), root_wrench, None))

    if sigma_init.signature() == sigma_fin.signature():
        stats.planning_time = time.perf_counter() - t_start
        stats.tree_vertices = 1
        stats.solution_stances = 1
        return PlanResult(
            True, [sigma_init], [np.asarray(q_init, dtype=float).copy()], [root_wrench], stats
        )

    rng = np.random.default_rng(seed)
    goal_sig = sigma_fin.signature()
    while tree.iterations < params.max_iters:
        vid, _, dt = expand_step(tree, model, world, sigma_fin, rng, params, gravity)
        stats.transition_time += dt
        if vid is not None and tree.vertices[vid].stance.signature() == goal_sig:
            S_sigma, S_q, S_W = extract_solution(tree, vid)
            stats.planning_time = time.perf_counter() - t_start
            stats.iterations = tree.iterations
            stats.tree_vertices = len(tree.vertices)
            stats.solution_stances = len(S_sigma)
            return PlanResult(True, S_sigma, S_q, S_W, stats)

    stats.planning_time = time.perf_counter() - t_start
    stats.iterations = tree.iterations
    stats.tree_vertices = len(tree.vertices)
    return PlanResult(False, None, None, None, stats, failure="iteration budget exhausted")
