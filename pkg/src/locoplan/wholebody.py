"""Whole-body motion planning on a fixed contact manifold.

Given two configurations that share a stance, find a configuration-space
path whose every knot keeps the stance's end-effectors at their contact
poses, stays balanced, within limits and collision-free, then assign a
duration from per-segment velocity limits. The path search is a
projection-based RRT: sampled steps are pulled back onto the contact
manifold with Gauss-Newton before being accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .balance import Stance, stance_feasible, support_interval
from .errors import InvalidArgument
from .robot import RobotModel
from .world import WorldState, signed_distance

RESIDUAL_TOL = 1e-6
_PROJECT_TOL = 1e-10


@dataclass(frozen=True)
class WholeBodyParams:
    eps_step: float = 0.1
    max_nodes: int = 2000
    shortcut_attempts: int = 50
    safety: float = 0.9
    goal_bias: float = 0.1
    min_duration: float = 1e-3


@dataclass
class Motion:
    """Piecewise-linear trajectory between two transitions under one stance."""

    knots: list  # configurations, first = q_a, last = q_b
    timestamps: list  # one per knot, starting at 0
    duration: float
    stance: Stance

    def __post_init__(self):
        if len(self.knots) < 2:
            raise InvalidArgument("motion needs at least 2 knots")
        if len(self.timestamps) != len(self.knots):
            raise InvalidArgument("one timestamp per knot required")
        if not self.duration > 0:
            raise InvalidArgument("motion duration must be > 0")

    def sample(self, t: float) -> np.ndarray:
        ts = self.timestamps
        if t <= ts[0]:
            return np.asarray(self.knots[0], dtype=float).copy()
        if t >= ts[-1]:
            return np.asarray(self.knots[-1], dtype=float).copy()
        s = int(np.searchsorted(ts, t, side="right")) - 1
        while s + 1 < len(ts) and ts[s + 1] <= ts[s]:
            s += 1
        q0 = np.asarray(self.knots[s], dtype=float)
        q1 = np.asarray(self.knots[s + 1], dtype=float)
        span = ts[s + 1] - ts[s]
        if span <= 0:
            return q1.copy()
        w = (t - ts[s]) / span
        return (1 - w) * q0 + w * q1

    def arc_length(self) -> float:
        return float(
            sum(
                np.linalg.norm(np.subtract(b, a))
                for a, b in zip(self.knots[:-1], self.knots[1:])
            )
        )


@dataclass
class GlobalPlan:
    """Chained motions covering the whole stance sequence."""

    motions: list = field(default_factory=list)

    def __post_init__(self):
        for a, b in zip(self.motions[:-1], self.motions[1:]):
            if not np.array_equal(a.knots[-1], b.knots[0]):
                raise InvalidArgument("motions do not chain: endpoint mismatch")

    @property
    def duration(self) -> float:
        return float(sum(m.duration for m in self.motions))


def contact_residual(model: RobotModel, q: np.ndarray, stance: Stance) -> np.ndarray:
    """Stacked end-effector position errors (2 rows per contact)."""
    fk = model.fk(q)
    if len(stance) == 0:
        return np.zeros(0)
    rows = []
    for c in stance:
        rows.append(fk.point(c.end_effector) - np.asarray(c.position))
    return np.concatenate(rows)


def contact_jacobian(model: RobotModel, q: np.ndarray, stance: Stance) -> np.ndarray:
    fk = model.fk(q)
    if len(stance) == 0:
        return np.zeros((0, model.n))
    return np.vstack([fk.point_jacobian(c.end_effector) for c in stance])


def project_to_manifold(
    model: RobotModel,
    q: np.ndarray,
    stance: Stance,
    max_iters: int = 100,
    damping: float = 1e-9,
) -> np.ndarray | None:
    """Pull q onto the stance's contact manifold (Gauss-Newton).

    Returns the projected configuration, or None if the residual cannot
    be brought under tolerance within the iteration budget.
    """
    q = model.check_configuration(q).copy()
    if len(stance) == 0:
        return q
    for _ in range(max_iters):
        r = contact_residual(model, q, stance)
        if float(np.linalg.norm(r, ord=np.inf)) <= _PROJECT_TOL:
            break
        J = contact_jacobian(model, q, stance)
        JJt = J @ J.T + damping * np.eye(J.shape[0])
        try:
            dq = -J.T @ np.linalg.solve(JJt, r)
        except np.linalg.LinAlgError:
            return None
        q = q + dq
    r = contact_residual(model, q, stance)
    if float(np.linalg.norm(r, ord=np.inf)) > RESIDUAL_TOL:
        return None
    return q


def _project_com(
    model: RobotModel,
    q: np.ndarray,
    stance: Stance,
    com_x_target: float,
    max_iters: int = 100,
    damping: float = 1e-9,
) -> np.ndarray | None:
    """Gauss-Newton on the contacts plus a CoM-x row."""
    q = q.copy()
    for _ in range(max_iters):
        fk = model.fk(q)
        r = np.concatenate(
            [contact_residual(model, q, stance), [fk.com()[0] - com_x_target]]
        )
        if float(np.linalg.norm(r, ord=np.inf)) <= _PROJECT_TOL:
            break
        J = np.vstack([contact_jacobian(model, q, stance), fk.com_jacobian()[0][None, :]])
        JJt = J @ J.T + damping * np.eye(J.shape[0])
        try:
            dq = -J.T @ np.linalg.solve(JJt, r)
        except np.linalg.LinAlgError:
            return None
        q = q + dq
    fk = model.fk(q)
    r = np.concatenate(
        [contact_residual(model, q, stance), [fk.com()[0] - com_x_target]]
    )
    if float(np.linalg.norm(r, ord=np.inf)) > RESIDUAL_TOL:
        return None
    return q


def _project_balanced(model: RobotModel, q: np.ndarray, stance: Stance, gravity):
    """Manifold projection that also lands statically balanced.

    Contacts alone first; when the wrench LP rejects the result, the CoM
    is steered over the support (nearest interval point, then midpoint).
    A one-point support makes balance an equality constraint, so sampling
    without this would never hit the feasible set.
    """
    qp = project_to_manifold(model, q, stance)
    if qp is None or len(stance) == 0:
        return qp
    g = np.asarray(gravity, dtype=float)
    if float(np.linalg.norm(g)) == 0.0 or stance_feasible(model, qp, stance, g):
        return qp
    fk = model.fk(qp)
    lo, hi = support_interval(stance, fk)
    com_x = float(fk.com()[0])
    for target in (min(max(com_x, lo), hi), 0.5 * (lo + hi)):
        qc = _project_com(model, qp, stance, target)
        if qc is not None and stance_feasible(model, qc, stance, g):
            return qc
    return None


def config_feasible(
    model: RobotModel,
    world: WorldState,
    q: np.ndarray,
    stance: Stance,
    gravity,
) -> bool:
    """Hard feasibility used by the samplers: limits, contact, balance, no hit."""
    if not model.within_limits(q):
        return False
    r = contact_residual(model, q, stance)
    if r.size and float(np.linalg.norm(r, ord=np.inf)) > RESIDUAL_TOL:
        return False
    fk = model.fk(q)
    for sphere, center in fk.sphere_centers():
        d, _ = signed_distance(world, center)
        if d - sphere.radius < 0.0:
            return False
    return stance_feasible(model, q, stance, gravity)


def _walk(
    model: RobotModel,
    world: WorldState,
    q_from: np.ndarray,
    q_to: np.ndarray,
    stance: Stance,
    gravity,
    eps: float,
) -> list | None:
    """Step toward q_to, projecting every step; None when any step fails."""
    path = [q_from]
    q = q_from
    guard = int(np.linalg.norm(q_to - q_from) / eps * 4) + 16
    for _ in range(guard):
        dist = float(np.linalg.norm(q_to - q))
        if dist <= eps:
            path.append(q_to.copy())
            return path
        q_try = q + (eps / dist) * (q_to - q)
        q_new = _project_balanced(model, q_try, stance, gravity)
        if q_new is None:
            return None
        if float(np.linalg.norm(q_new - q)) > 2 * eps:
            return None
        if float(np.linalg.norm(q_to - q_new)) >= dist:
            return None
        if not config_feasible(model, world, q_new, stance, gravity):
            return None
        path.append(q_new)
        q = q_new
    return None


def _path_length(path) -> float:
    return float(
        sum(np.linalg.norm(b - a) for a, b in zip(path[:-1], path[1:]))
    )


def _sample_config(
    model: RobotModel, rng: np.random.Generator, lo_base: np.ndarray, hi_base: np.ndarray
) -> np.ndarray:
    b = model.base_dof
    q = np.zeros(model.n)
    if b:
        q[:b] = rng.uniform(lo_base, hi_base)
    if model.n > b:
        q[b:] = rng.uniform(model.joint_lower(), model.joint_upper())
    return q


def plan_motion(
    model: RobotModel,
    world: WorldState,
    q_a: np.ndarray,
    q_b: np.ndarray,
    stance: Stance,
    params: WholeBodyParams = WholeBodyParams(),
    seed: int = 0,
    gravity=(0.0, -9.81),
) -> Motion | None:
    """Feasible motion from q_a to q_b under a fixed stance, or None.

    Tries the straight projected walk first, falls back to a constrained
    RRT, then greedily shortcuts. Deterministic for a given seed.
    """
    q_a = model.check_configuration(q_a).copy()
    q_b = model.check_configuration(q_b).copy()
    if not config_feasible(model, world, q_a, stance, gravity):
        raise InvalidArgument("motion start infeasible for the stance")
    if not config_feasible(model, world, q_b, stance, gravity):
        raise InvalidArgument("motion goal infeasible for the stance")
    rng = np.random.default_rng(seed)
    eps = params.eps_step

    path = _walk(model, world, q_a, q_b, stance, gravity, eps)
    if path is None:
        path = _rrt(model, world, q_a, q_b, stance, gravity, params, rng)
        if path is None:
            return None
        path = _shortcut(model, world, path, stance, gravity, params, rng)

    timestamps, duration = time_parameterize(path, model, params.safety)
    if duration <= 0.0:
        # degenerate zero-length request; give it a token positive duration
        duration = params.min_duration
        timestamps = [0.0, duration]
        path = [q_a, q_b]
    return Motion(knots=path, timestamps=timestamps, duration=duration, stance=stance)


def _rrt(model, world, q_a, q_b, stance, gravity, params, rng):
    b = model.base_dof
    if b:
        base_pts = np.stack([q_a[:b], q_b[:b]])
        lo_base = base_pts.min(axis=0) - 1.0
        hi_base = base_pts.max(axis=0) + 1.0
    else:
        lo_base = hi_base = np.zeros(0)
    eps = params.eps_step
    nodes = [q_a]
    parents = [-1]
    for _ in range(params.max_nodes):
        if rng.uniform() < params.goal_bias:
            target = q_b
        else:
            target = _sample_config(model, rng, lo_base, hi_base)
        dists = [float(np.linalg.norm(target - n)) for n in nodes]
        ni = int(np.argmin(dists))
        near = nodes[ni]
        d = dists[ni]
        if d < 1e-12:
            continue
        q_try = near + (min(eps, d) / d) * (target - near)
        q_new = _project_balanced(model, q_try, stance, gravity)
        if q_new is None:
            continue
        if float(np.linalg.norm(q_new - near)) > 2 * eps:
            continue
        if not config_feasible(model, world, q_new, stance, gravity):
            continue
        nodes.append(q_new)
        parents.append(ni)
        if float(np.linalg.norm(q_new - q_b)) <= 4 * eps:
            tail = _walk(model, world, q_new, q_b, stance, gravity, eps)
            if tail is not None:
                path = []
                k = len(nodes) - 1
                while k >= 0:
                    path.append(nodes[k])
                    k = parents[k]
                path.reverse()
                return path + tail[1:]
    return None


def _shortcut(model, world, path, stance, gravity, params, rng):
    path = list(path)
    for _ in range(params.shortcut_attempts):
        if len(path) < 3:
            break
        i = int(rng.integers(0, len(path) - 2))
        j = int(rng.integers(i + 2, len(path)))
        seg = _walk(model, world, path[i], path[j], stance, gravity, params.eps_step)
        if seg is None:
            continue
        if _path_length(seg) < _path_length(path[i : j + 1]) - 1e-12:
            path = path[: i + 1] + seg[1:-1] + path[j:]
    return path


def time_parameterize(path, model: RobotModel, safety: float):
    """Timestamps from per-segment velocity limits.

    Each segment takes as long as its slowest degree of freedom needs at
    safety * vel_limit; a zero-length path gets duration 0 with two
    coincident timestamps.
    """
    if len(path) < 2:
        raise InvalidArgument("need at least 2 knots to time-parameterize")
    if not 0.0 < safety <= 1.0:
        raise InvalidArgument("safety must be in (0, 1]")
    limits = safety * model.velocity_limits()
    times = [0.0]
    for a, b in zip(path[:-1], path[1:]):
        dq = np.abs(np.subtract(b, a))
        times.append(times[-1] + float(np.max(dq / limits)))
    return times, times[-1]


def discretize_trajectory(motion: Motion, n_configs: int):
    """N equispaced-in-time configurations over the motion; returns (Q, dt)."""
    if n_configs < 2:
        raise InvalidArgument("discretization needs N >= 2")
    dt = motion.duration / (n_configs - 1)
    configs = [np.asarray(motion.knots[0], dtype=float).copy()]
    for s in range(1, n_configs - 1):
        configs.append(motion.sample(s * dt))
    configs.append(np.asarray(motion.knots[-1], dtype=float).copy())
    return configs, dt
