"""Moving-horizon trajectory refinement.

The full discretized trajectory is kept as state; at any moment only a
window of W upcoming vertices is optimized. The vertex currently being
executed anchors the window (fixed to the measured configuration), the
vertex just beyond the window is included as a fixed far anchor so the
velocity edge at the boundary keeps the tail consistent, and everything
outside the window is never touched.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .balance import Stance, is_balanced
from .errors import InvalidArgument
from .graph import GraphWeights, TrajectoryGraph, build_graph
from .robot import RobotModel
from .solver import CONVERGED, TERM_LAMBDA, SolveReport, SolverParams, optimize
from .world import WorldState, signed_distance


@dataclass(frozen=True)
class RefinerParams:
    window: int = 20
    noop_threshold: float = 1e-9
    anchor_tol: float = 0.05
    # extra clearance the refiner optimizes against, beyond the margin the
    # validator enforces; keeps the converged hinge strictly outside the
    # required clearance and covers inter-vertex interpolation sag
    clearance_pad: float = 0.005
    weights: GraphWeights = GraphWeights()
    solver: SolverParams = SolverParams()

    def effective_weights(self) -> GraphWeights:
        return self.weights.with_clearance_pad(self.clearance_pad)


@dataclass
class HorizonState:
    """Full vertex list plus the execution cursor."""

    configs: list  # N configurations, mutated in place by refinement
    q_ref: list  # reference plan, same length
    dt: float
    window: int
    i: int = 0

    def __post_init__(self):
        if len(self.configs) != len(self.q_ref):
            raise InvalidArgument("configs and q_ref must have equal length")
        if self.window < 2:
            raise InvalidArgument("window must be >= 2")
        if not 0 <= self.i < len(self.configs):
            raise InvalidArgument("execution index out of range")

    @property
    def n(self) -> int:
        return len(self.configs)

    def window_range(self) -> tuple[int, int]:
        """[lo, hi) active indices; vertices outside are permanently fixed."""
        return self.i, min(self.i + self.window, self.n)


def update_horizon(state: HorizonState, i_new: int, q_measured: np.ndarray) -> HorizonState:
    """Advance the execution cursor and re-anchor the current vertex."""
    if i_new < state.i:
        raise InvalidArgument(f"execution index went backwards: {state.i} -> {i_new}")
    if i_new >= state.n:
        raise InvalidArgument("execution index beyond the trajectory")
    state.i = i_new
    state.configs[i_new] = np.asarray(q_measured, dtype=float).copy()
    return state


@dataclass
class TickReport:
    noop: bool
    i: int
    revision: int
    window: tuple
    f_before: float
    f_after: float
    termination: str | None
    degraded: bool
    colliding: bool
    refine_ms: float
    solve: SolveReport | None = None

    def telemetry(self) -> dict:
        return {
            "i": self.i,
            "revision": self.revision,
            "window": list(self.window),
            "noop": self.noop,
            "f_before": self.f_before,
            "f_after": self.f_after,
            "termination": self.termination,
            "degraded": self.degraded,
            "refine_ms": self.refine_ms,
        }


class OnlineRefiner:
    """Owns the horizon state and decides when to re-optimize."""

    def __init__(
        self,
        model: RobotModel,
        stance: Stance,
        gravity,
        q_ref,
        dt: float,
        params: RefinerParams = RefinerParams(),
    ):
        self.model = model
        self.stance = stance
        self.gravity = np.asarray(gravity, dtype=float)
        self.params = params
        self.state = HorizonState(
            configs=[np.asarray(q, dtype=float).copy() for q in q_ref],
            q_ref=[np.asarray(q, dtype=float).copy() for q in q_ref],
            dt=float(dt),
            window=params.window,
        )
        self.published = [q.copy() for q in self.state.configs]
        self.last_revision: int | None = None
        self.last_converged = True
        self.last_f = 0.0
        self.last_report: SolveReport | None = None
        self.last_graph: TrajectoryGraph | None = None

    # -- helpers ---------------------------------------------------------

    def _graph_span(self) -> tuple[int, int, int]:
        """(lo, hi_window_exclusive, hi_graph_inclusive)."""
        lo, hi = self.state.window_range()
        far = min(hi, self.state.n - 1)
        return lo, hi, far

    def _build_window_graph(self, world: WorldState) -> tuple[TrajectoryGraph, int, int]:
        lo, hi, far = self._graph_span()
        idx = list(range(lo, far + 1))
        # the window anchor, everything at or past the far boundary, and the
        # goal vertex stay fixed; only the interior is optimized
        fixed = [t == lo or t >= hi or t == self.state.n - 1 for t in idx]
        graph = build_graph(
            [self.state.configs[t] for t in idx],
            self.model,
            world,
            self.stance,
            self.gravity,
            [self.state.q_ref[t] for t in idx],
            self.state.dt,
            self.params.effective_weights(),
            fixed=fixed,
        )
        return graph, lo, hi

    def _window_collides(self, world: WorldState, configs) -> bool:
        for q in configs:
            fk = self.model.fk(q)
            for sphere, center in fk.sphere_centers():
                d, _ = signed_distance(world, center)
                if d - sphere.radius < 0.0:
                    return True
        return False

    # -- the tick ----------------------------------------------------------

    def refine_tick(self, world: WorldState, q_measured=None) -> TickReport:
        """Evaluate the window; optimize when the world or state demands it.

        A no-op requires: unchanged world revision, a converged previous
        solve, an anchor still on the trajectory, and the window cost under
        the threshold. Anything else triggers a solve and an atomic
        publication of the refined window.
        """
        t0 = time.perf_counter()
        st = self.state
        lo_now, hi_now = st.window_range()
        if hi_now - lo_now < 2:  # nothing left to optimize at the tail
            ms = (time.perf_counter() - t0) * 1e3
            return TickReport(
                noop=True,
                i=st.i,
                revision=world.revision,
                window=(lo_now, hi_now),
                f_before=0.0,
                f_after=0.0,
                termination=None,
                degraded=False,
                colliding=False,
                refine_ms=ms,
            )
        if q_measured is not None:
            anchor_moved = (
                float(np.linalg.norm(np.asarray(q_measured) - st.configs[st.i]))
                > self.params.anchor_tol
            )
            st.configs[st.i] = np.asarray(q_measured, dtype=float).copy()
        else:
            anchor_moved = False

        graph, lo, hi = self._build_window_graph(world)
        f_now = graph.cost()
        revision_changed = world.revision != self.last_revision
        if f_now == 0.0 and not anchor_moved:
            # zero residual is the global optimum for this revision; latch
            # it instead of running a vacuous solve
            self.last_revision = world.revision
            self.last_converged = True
            self.last_f = 0.0
            ms = (time.perf_counter() - t0) * 1e3
            return TickReport(
                noop=True,
                i=st.i,
                revision=world.revision,
                window=(lo, hi),
                f_before=0.0,
                f_after=0.0,
                termination=None,
                degraded=False,
                colliding=False,
                refine_ms=ms,
            )
        if (
            not revision_changed
            and not anchor_moved
            and self.last_converged
            and f_now <= self.params.noop_threshold
        ):
            ms = (time.perf_counter() - t0) * 1e3
            return TickReport(
                noop=True,
                i=st.i,
                revision=world.revision,
                window=(lo, hi),
                f_before=f_now,
                f_after=f_now,
                termination=None,
                degraded=False,
                colliding=False,
                refine_ms=ms,
            )

        report = optimize(graph, self.params.solver)
        refined = graph.configs()
        degraded = report.termination == TERM_LAMBDA
        colliding = degraded and self._window_collides(world, refined)
        if not colliding:
            for k, t in enumerate(range(lo, lo + len(refined))):
                if lo < t < hi:
                    st.configs[t] = refined[k]
            # publish atomically: swap the whole list reference
            self.published = [q.copy() for q in st.configs]
        self.last_revision = world.revision
        self.last_converged = report.termination in CONVERGED
        self.last_f = report.final_f
        self.last_report = report
        self.last_graph = graph
        ms = (time.perf_counter() - t0) * 1e3
        return TickReport(
            noop=False,
            i=st.i,
            revision=world.revision,
            window=(lo, hi),
            f_before=f_now,
            f_after=report.final_f,
            termination=report.termination,
            degraded=degraded,
            colliding=colliding,
            refine_ms=ms,
            solve=report,
        )


def validate_refinement(
    configs,
    model: RobotModel,
    world: WorldState,
    stance: Stance,
    gravity,
    dt: float,
    weights: GraphWeights = GraphWeights(),
    tol: float = 1e-6,
) -> dict:
    """Re-check refined configurations outside the optimizer.

    Reports joint-limit, velocity, clearance and balance violations; an
    empty violation list means every contract holds at the stated
    tolerances.
    """
    g = np.asarray(gravity, dtype=float)
    violations = []
    min_clear = float("inf")
    vmax = model.velocity_limits()
    for t, q in enumerate(configs):
        q = model.check_configuration(q)
        if not model.within_limits(q):
            violations.append({"kind": "joint_limit", "vertex": t})
        fk = model.fk(q)
        for sphere, center in fk.sphere_centers():
            d, _ = signed_distance(world, center)
            clear = d - sphere.radius
            min_clear = min(min_clear, clear)
            if clear < weights.clearance - tol:
                violations.append(
                    {"kind": "collision", "vertex": t, "clearance": clear}
                )
                break
        if len(stance) > 0 and float(np.linalg.norm(g)) > 0:
            if not is_balanced(model, q, stance, g):
                violations.append({"kind": "balance", "vertex": t})
    for t in range(len(configs) - 1):
        rate = np.abs(np.subtract(configs[t + 1], configs[t])) / dt
        excess = rate - vmax
        worst = float(excess.max(initial=-np.inf))
        if worst > 1e-9:
            violations.append({"kind": "velocity", "vertex": t, "excess": worst})
    return {
        "ok": not violations,
        "violations": violations,
        "min_clearance": min_clear,
    }
