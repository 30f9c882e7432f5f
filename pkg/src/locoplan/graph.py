"""Trajectory hyper-graph: configuration vertices, residual hyper-edges.

The refinement objective is F(Q) = sum_k e_k' W_k e_k over five edge
kinds. Each vertex t carries one joint-limit, one collision, one balance
and one tracking edge; each consecutive pair carries a velocity edge, so
a trajectory of V configurations owns 4V + (V-1) edges. Hinge residuals
(squared by F) keep the total cost C1 at constraint boundaries.

Assembly produces the scalar cost F, the vector b = sum J' W e and the
Gauss-Newton matrix H = sum J' W J, b and H restricted to free vertices.
H is stored block-sparse; a block (s, t) exists exactly when some edge
contains both vertices, which for this edge set means |s - t| <= 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .balance import Stance
from .errors import InvalidArgument
from .robot import RobotModel, joint_limit_violation
from .world import NO_OBSTACLE_DISTANCE, Disc, WorldState, signed_distance_gradient

EDGE_KINDS = ("joint_limit", "velocity", "collision", "balance", "tracking")


def _batch_obstacle_distances(world: WorldState, points: np.ndarray) -> np.ndarray:
    """Min signed distance per point over all obstacles, vectorized.

    Same formulas as world.signed_distance applied to a whole (m, 2) stack
    of points at once; agreement with the scalar path is at roundoff level
    (norms are summed in a different order).
    """
    best = np.full(len(points), NO_OBSTACLE_DISTANCE)
    for obst in world.obstacles.values():
        s = obst.shape
        if isinstance(s, Disc):
            d = np.hypot(points[:, 0] - s.center[0], points[:, 1] - s.center[1]) - s.radius
        else:
            half = (np.asarray(s.hi) - np.asarray(s.lo)) / 2.0
            mid = (np.asarray(s.hi) + np.asarray(s.lo)) / 2.0
            dd = np.abs(points - mid) - half
            out = np.maximum(dd, 0.0)
            outside = np.sqrt(out[:, 0] ** 2 + out[:, 1] ** 2)
            inside = np.minimum(np.maximum(dd[:, 0], dd[:, 1]), 0.0)
            d = outside + inside
        best = np.minimum(best, d)
    return best


@dataclass(frozen=True)
class GraphWeights:
    """Per-row weights and margins of the edge residuals."""

    tracking: float = 1.0
    joint_limit: float = 1e3
    velocity: float = 1e2
    collision: float = 1e4
    balance: float = 1e3
    margin_joint: float = 0.02
    clearance: float = 0.05

    def weight_of(self, kind: str) -> float:
        return getattr(self, kind)

    def to_dict(self) -> dict:
        return {
            "tracking": self.tracking,
            "joint_limit": self.joint_limit,
            "velocity": self.velocity,
            "collision": self.collision,
            "balance": self.balance,
            "margin_joint": self.margin_joint,
            "clearance": self.clearance,
        }

    def with_clearance_pad(self, pad: float) -> "GraphWeights":
        return replace(self, clearance=self.clearance + pad)


@dataclass
class GraphVertex:
    index: int
    q: np.ndarray
    fixed: bool = False


@dataclass(frozen=True)
class HyperEdge:
    kind: str
    vertices: tuple  # ordered vertex indices into the graph


class BlockMatrix:
    """Symmetric matrix stored as vertex-sized blocks.

    Blocks are created explicitly (zero-filled) for every co-membership
    pair, so the structural pattern is a property of the graph, not of
    which hinges happen to be active.
    """

    def __init__(self, n_blocks: int, block: int):
        self.n_blocks = n_blocks
        self.block = block
        self.blocks: dict[tuple[int, int], np.ndarray] = {}

    @property
    def size(self) -> int:
        return self.n_blocks * self.block

    def ensure(self, i: int, j: int) -> np.ndarray:
        key = (i, j)
        blk = self.blocks.get(key)
        if blk is None:
            blk = np.zeros((self.block, self.block))
            self.blocks[key] = blk
        return blk

    def pattern(self) -> set:
        return set(self.blocks.keys())

    def bandwidth(self) -> int:
        """Scalar lower bandwidth implied by the block pattern."""
        if not self.blocks:
            return max(self.block - 1, 0)
        spread = max(abs(i - j) for i, j in self.blocks)
        return (spread + 1) * self.block - 1

    def to_dense(self) -> np.ndarray:
        n = self.block
        out = np.zeros((self.size, self.size))
        for (i, j), blk in self.blocks.items():
            out[i * n : (i + 1) * n, j * n : (j + 1) * n] = blk
        return out

    def lower_band(self, lam: float = 0.0) -> np.ndarray:
        """Lower-banded storage of self + lam*I for banded Cholesky."""
        bw = self.bandwidth()
        n = self.block
        ab = np.zeros((bw + 1, self.size))
        cols = np.arange(n)
        for (i, j), blk in self.blocks.items():
            if i < j:
                continue  # symmetric; fill from the lower triangle
            base = (i - j) * n
            for a in range(n):
                offs = base + a - cols
                mask = (offs >= 0) & (offs <= bw)
                ab[offs[mask], j * n + cols[mask]] = blk[a, mask]
        if lam:
            ab[0, :] += lam
        return ab

    def matvec(self, x: np.ndarray) -> np.ndarray:
        n = self.block
        out = np.zeros_like(x)
        for (i, j), blk in self.blocks.items():
            out[i * n : (i + 1) * n] += blk @ x[j * n : (j + 1) * n]
        return out


class TrajectoryGraph:
    """Vertices, edges and assembly for one refinement window."""

    def __init__(
        self,
        model: RobotModel,
        world: WorldState,
        stance: Stance,
        gravity,
        configs,
        q_ref,
        dt: float,
        weights: GraphWeights = GraphWeights(),
        fixed=None,
    ):
        if len(configs) < 2:
            raise InvalidArgument("graph needs at least 2 configurations")
        if len(q_ref) != len(configs):
            raise InvalidArgument("one reference configuration per vertex required")
        if not dt > 0:
            raise InvalidArgument("dt must be > 0")
        self.model = model
        self.world = world
        self.stance = stance
        self.gravity = np.asarray(gravity, dtype=float)
        self.dt = float(dt)
        self.weights = weights
        fixed = list(fixed) if fixed is not None else [False] * len(configs)
        self.vertices = [
            GraphVertex(t, model.check_configuration(q).copy(), bool(f))
            for t, (q, f) in enumerate(zip(configs, fixed))
        ]
        self.q_ref = [model.check_configuration(q).copy() for q in q_ref]

        self.edges: list[HyperEdge] = []
        for t in range(len(self.vertices)):
            for kind in ("joint_limit", "collision", "balance", "tracking"):
                self.edges.append(HyperEdge(kind, (t,)))
        for t in range(len(self.vertices) - 1):
            self.edges.append(HyperEdge("velocity", (t, t + 1)))

        self._free = [v.index for v in self.vertices if not v.fixed]
        self._free_pos = {t: k for k, t in enumerate(self._free)}
        self._fk_cache: dict[int, object] = {}
        self._vcache: dict[int, dict] = {}

        # static per-model arrays for the hot evaluation path; the public
        # joint_limit_violation call doubles as margin validation
        joint_limit_violation(model, self.vertices[0].q, weights.margin_joint)
        self._jl_lo = model.joint_lower() + weights.margin_joint
        self._jl_up = model.joint_upper() - weights.margin_joint
        self._vmax = model.velocity_limits()
        self._radii = np.array([s.radius for s in model.collision_spheres])
        self._world_rev = world.revision

    # -- vertex access ------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_free(self) -> int:
        return len(self._free)

    def free_indices(self) -> list:
        return list(self._free)

    def config(self, t: int) -> np.ndarray:
        return self.vertices[t].q

    def configs(self) -> list:
        return [v.q.copy() for v in self.vertices]

    def set_config(self, t: int, q: np.ndarray) -> None:
        if self.vertices[t].fixed:
            raise InvalidArgument(f"vertex {t} is fixed")
        self.vertices[t].q = self.model.check_configuration(q).copy()
        self._fk_cache.pop(t, None)
        self._vcache.pop(t, None)

    def set_free_flat(self, x: np.ndarray) -> None:
        """Scatter a stacked free-vertex vector into the graph."""
        n = self.model.n
        if x.shape != (self.n_free * n,):
            raise InvalidArgument("free-vector length mismatch")
        for k, t in enumerate(self._free):
            self.set_config(t, x[k * n : (k + 1) * n])

    def free_flat(self) -> np.ndarray:
        if self.n_free == 0:
            return np.zeros(0)
        return np.concatenate([self.vertices[t].q for t in self._free])

    def _fk(self, t: int):
        fk = self._fk_cache.get(t)
        if fk is None:
            fk = self.model.fk(self.vertices[t].q)
            self._fk_cache[t] = fk
        return fk

    def _vdata(self, t: int) -> dict:
        """Per-vertex residual pieces, cached until the config changes."""
        if self.world.revision != self._world_rev:
            self._vcache.clear()
            self._world_rev = self.world.revision
        data = self._vcache.get(t)
        if data is None:
            qj = self.vertices[t].q[self.model.base_dof :]
            jl = np.maximum(0.0, qj - self._jl_up) + np.maximum(0.0, self._jl_lo - qj)
            if len(self._radii):
                fk = self._fk(t)
                centers = np.array([c for _, c in fk.sphere_centers()])
                dists = _batch_obstacle_distances(self.world, centers)
                col = np.maximum(0.0, self.weights.clearance - dists + self._radii)
            else:
                centers = np.zeros((0, 2))
                col = np.zeros(0)
            data = {
                "jl": jl,
                "col": col,
                "centers": centers,
                "bal": self._balance_terms(t),
            }
            self._vcache[t] = data
        return data

    # -- residuals and Jacobians ---------------------------------------------

    def edge_residual(self, edge: HyperEdge) -> np.ndarray:
        if edge.kind == "tracking":
            t = edge.vertices[0]
            return self.vertices[t].q - self.q_ref[t]
        if edge.kind == "joint_limit":
            return self._vdata(edge.vertices[0])["jl"].copy()
        if edge.kind == "velocity":
            a, b = edge.vertices
            rate = np.abs(self.vertices[b].q - self.vertices[a].q) / self.dt
            return np.maximum(0.0, rate - self._vmax)
        if edge.kind == "collision":
            return self._vdata(edge.vertices[0])["col"].copy()
        if edge.kind == "balance":
            return np.array([self._vdata(edge.vertices[0])["bal"][0]])
        raise InvalidArgument(f"unknown edge kind {edge.kind!r}")

    def _balance_terms(self, t: int):
        """(violation, side, argmin/argmax contact) of the support hinge."""
        if len(self.stance) == 0 or float(np.linalg.norm(self.gravity)) == 0.0:
            return 0.0, 0, None
        fk = self._fk(t)
        xs = [(float(fk.point(c.end_effector)[0]), c) for c in self.stance]
        lo, c_lo = min(xs, key=lambda p: p[0])
        hi, c_hi = max(xs, key=lambda p: p[0])
        cx = float(fk.com()[0])
        if cx > hi:
            return cx - hi, 1, c_hi
        if cx < lo:
            return lo - cx, -1, c_lo
        return 0.0, 0, None

    def edge_jacobian(self, edge: HyperEdge):
        """Jacobian blocks of edge_residual, one (dim x n) block per vertex."""
        n = self.model.n
        if edge.kind == "tracking":
            return [np.eye(n)]
        if edge.kind == "joint_limit":
            q = self.vertices[edge.vertices[0]].q
            b = self.model.base_dof
            qj = q[b:]
            J = np.zeros((len(qj), n))
            for j in range(len(qj)):
                if qj[j] > self._jl_up[j]:
                    J[j, b + j] = 1.0
                elif qj[j] < self._jl_lo[j]:
                    J[j, b + j] = -1.0
            return [J]
        if edge.kind == "velocity":
            a, b = edge.vertices
            dq = self.vertices[b].q - self.vertices[a].q
            rate = np.abs(dq) / self.dt
            active = rate > self._vmax
            s = np.where(dq >= 0, 1.0, -1.0) * active / self.dt
            Ja = np.diag(-s)
            Jb = np.diag(s)
            return [Ja, Jb]
        if edge.kind == "collision":
            t = edge.vertices[0]
            data = self._vdata(t)
            J = np.zeros((len(self._radii), n))
            hot = np.nonzero(data["col"] > 0.0)[0]
            if hot.size:
                fk = self._fk(t)
                spheres = self.model.collision_spheres
                for j in hot:
                    _, grad = signed_distance_gradient(self.world, data["centers"][j])
                    Jp = fk.point_jacobian(spheres[j].frame, spheres[j].offset)
                    J[j] = -grad @ Jp
            return [J]
        if edge.kind == "balance":
            t = edge.vertices[0]
            viol, side, contact = self._vdata(t)["bal"]
            J = np.zeros((1, n))
            if side != 0:
                fk = self._fk(t)
                row = fk.com_jacobian()[0] - fk.point_jacobian(contact.end_effector)[0]
                J[0] = side * row
            return [J]
        raise InvalidArgument(f"unknown edge kind {edge.kind!r}")

    # -- assembly -------------------------------------------------------------

    def cost(self) -> float:
        """Residual-only evaluation of F (no derivatives)."""
        F = 0.0
        for edge in self.edges:
            e = self.edge_residual(edge)
            if e.size:
                F += self.weights.weight_of(edge.kind) * float(e @ e)
        return F

    def assemble(self):
        """(F, b, H) with b and H over free vertices only.

        Every edge contributes its residual to F; b and H receive only the
        blocks belonging to free member vertices, and every free-free pair
        of an edge gets its H block created even when the contribution is
        zero, so the sparsity pattern reflects the graph structure alone.
        """
        n = self.model.n
        F = 0.0
        b = np.zeros(self.n_free * n)
        H = BlockMatrix(self.n_free, n)
        for edge in self.edges:
            w = self.weights.weight_of(edge.kind)
            e = self.edge_residual(edge)
            if e.size:
                F += w * float(e @ e)
            members = edge.vertices
            free_members = [
                (slot, self._free_pos[t]) for slot, t in enumerate(members) if t in self._free_pos
            ]
            if not free_members:
                continue
            # structural blocks exist regardless of hinge activity
            for _, pi in free_members:
                for _, pj in free_members:
                    H.ensure(pi, pj)
            if e.size == 0 or (edge.kind != "tracking" and not np.any(e)):
                # inactive hinge: zero residual and zero Jacobian
                continue
            Js = self.edge_jacobian(edge)
            for slot_i, pi in free_members:
                Ji = Js[slot_i]
                b[pi * n : (pi + 1) * n] += w * (Ji.T @ e)
                for slot_j, pj in free_members:
                    H.ensure(pi, pj)[...] += w * (Ji.T @ Js[slot_j])
        return F, b, H

    # -- introspection ---------------------------------------------------------

    def edge_count(self) -> int:
        return len(self.edges)

    def to_debug_dict(self) -> dict:
        edges = []
        for edge in self.edges:
            e = self.edge_residual(edge)
            edges.append(
                {
                    "kind": edge.kind,
                    "vertices": list(edge.vertices),
                    "residual_norm": float(np.linalg.norm(e)) if e.size else 0.0,
                }
            )
        return {
            "n": self.model.n,
            "dt": self.dt,
            "weights": self.weights.to_dict(),
            "vertices": [
                {"index": v.index, "fixed": v.fixed, "q": v.q.tolist()}
                for v in self.vertices
            ],
            "edges": edges,
        }


def build_graph(
    configs,
    model: RobotModel,
    world: WorldState,
    stance: Stance,
    gravity,
    q_ref,
    dt: float,
    weights: GraphWeights = GraphWeights(),
    fixed=None,
) -> TrajectoryGraph:
    """Construct the standard edge set over a configuration sequence."""
    return TrajectoryGraph(
        model, world, stance, gravity, configs, q_ref, dt, weights, fixed
    )
