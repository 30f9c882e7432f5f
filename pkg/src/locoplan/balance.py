"""Static balance of planar contact stances.

A stance is a set of point contacts with Coulomb friction. Each contact
force is parametrized on its friction cone edges, f = a*d+ + b*d- with
a, b >= 0, which turns cone membership into simple nonnegativity. The
equilibrium equations (force and torque about the CoM) then form a tiny
linear feasibility problem; among feasible force sets the minimum-norm
one is returned so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .robot import RobotModel

TOL_CONTACT = 1e-4
_EQ_TOL = 1e-8


@dataclass(frozen=True)
class Contact:
    end_effector: str
    position: tuple[float, float]
    normal: tuple[float, float]
    mu: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise InvalidArgument(
                f"contact {self.end_effector}: normal must be unit length"
            )
        if self.mu < 0:
            raise InvalidArgument(f"contact {self.end_effector}: mu must be >= 0")

    def key(self) -> tuple:
        return (
            self.end_effector,
            round(self.position[0], 9),
            round(self.position[1], 9),
            round(self.normal[0], 9),
            round(self.normal[1], 9),
            round(self.mu, 9),
        )


class Stance:
    """Immutable set of contacts, at most one per end-effector."""

    def __init__(self, contacts=()):
        by_ee: dict[str, Contact] = {}
        for c in contacts:
            if c.end_effector in by_ee:
                raise InvalidArgument(
                    f"stance has two contacts for {c.end_effector!r}"
                )
            by_ee[c.end_effector] = c
        self._by_ee = dict(sorted(by_ee.items()))

    @property
    def contacts(self) -> tuple[Contact, ...]:
        return tuple(self._by_ee.values())

    def __len__(self):
        return len(self._by_ee)

    def __iter__(self):
        return iter(self.contacts)

    def __contains__(self, ee: str):
        return ee in self._by_ee

    def get(self, ee: str) -> Contact | None:
        return self._by_ee.get(ee)

    def end_effectors(self) -> tuple[str, ...]:
        return tuple(self._by_ee.keys())

    def signature(self) -> tuple:
        return tuple(c.key() for c in self.contacts)

    def __eq__(self, other):
        return isinstance(other, Stance) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    def __repr__(self):
        ees = ", ".join(self._by_ee.keys())
        return f"Stance({{{ees}}})"

    def union(self, other: "Stance") -> "Stance":
        merged = dict(self._by_ee)
        for c in other:
            prev = merged.get(c.end_effector)
            if prev is not None and prev.key() != c.key():
                raise InvalidArgument(
                    f"stance union: conflicting poses for {c.end_effector!r}"
                )
            merged[c.end_effector] = c
        return Stance(merged.values())

    def intersection(self, other: "Stance") -> "Stance":
        out = []
        for c in self:
            oc = other.get(c.end_effector)
            if oc is not None and oc.key() == c.key():
                out.append(c)
        return Stance(out)

    def sym_diff_count(self, other: "Stance") -> int:
        keys_a = set(self.signature())
        keys_b = set(other.signature())
        return len(keys_a ^ keys_b)

    def without(self, ee: str) -> "Stance":
        return Stance([c for c in self if c.end_effector != ee])

    def with_contact(self, contact: Contact) -> "Stance":
        if contact.end_effector in self:
            raise InvalidArgument(
                f"stance already contacts with {contact.end_effector!r}"
            )
        return Stance(list(self.contacts) + [contact])


class WrenchSet:
    """Planar contact forces keyed by end-effector as (f_t, f_n)."""

    def __init__(self, forces: dict[str, tuple[float, float]]):
        self.forces = dict(sorted(forces.items()))

    def __len__(self):
        return len(self.forces)

    def tangential(self, ee: str) -> float:
        return self.forces[ee][0]

    def normal(self, ee: str) -> float:
        return self.forces[ee][1]

    def world_force(self, contact: Contact) -> np.ndarray:
        f_t, f_n = self.forces[contact.end_effector]
        n = np.asarray(contact.normal)
        t = np.array([-n[1], n[0]])
        return f_t * t + f_n * n

    def to_dict(self) -> dict:
        return {ee: [f[0], f[1]] for ee, f in self.forces.items()}

    @staticmethod
    def from_dict(data: dict) -> "WrenchSet":
        return WrenchSet({ee: (float(f[0]), float(f[1])) for ee, f in data.items()})


def _cross(a: np.ndarray, b: np.ndarray) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _phase1_feasible(A: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Find x >= 0 with Ax = b, or None. Simplex phase 1, Bland's rule."""
    m, n = A.shape
    A = A.copy()
    b = b.copy()
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0
    # tableau over [x, artificials]; objective = sum of artificials
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(n, n + m))
    # price out the artificial basis from the objective row
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    scale = 1.0 + abs(b).max() if m else 1.0
    for _ in range(200 * (n + m)):
        # entering: lowest index with negative reduced cost (Bland)
        enter = -1
        for j in range(n + m):
            if T[m, j] < -1e-11:
                enter = j
                break
        if enter < 0:
            break
        ratios = [
            (T[i, -1] / T[i, enter], basis[i], i)
            for i in range(m)
            if T[i, enter] > 1e-11
        ]
        if not ratios:
            break  # unbounded phase-1 cannot happen; bail defensively
        _, _, leave = min(ratios, key=lambda r: (r[0], r[1]))
        piv = T[leave, enter]
        T[leave] /= piv
        for i in range(m + 1):
            if i != leave:
                T[i] -= T[i, enter] * T[leave]
        basis[leave] = enter
    if -T[m, -1] > 1e-9 * scale:
        return None
    x = np.zeros(n + m)
    for i, j in enumerate(basis):
        x[j] = T[i, -1]
    if x[n:].max(initial=0.0) > 1e-9 * scale:
        return None  # artificial stuck in basis at nonzero level
    return np.maximum(x[:n], 0.0)


def _nullspace(M: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space of M (columns)."""
    if M.size == 0:
        return np.eye(M.shape[1])
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > 1e-11 * (s[0] if s.size else 1.0)))
    return vt[rank:].T


def _min_norm_qp(Q: np.ndarray, A: np.ndarray, b: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """min 1/2 x'Qx s.t. Ax=b, x>=0, from feasible x0. Primal active set.

    The equality-constrained subproblem is solved in the null space of the
    free columns of A, so iterates never leave the equilibrium manifold.
    """
    n = x0.size
    x = x0.copy()
    active = x <= 1e-11
    for _ in range(200):
        free = ~active
        nf = int(free.sum())
        p = np.zeros(n)
        if nf > 0:
            Af = A[:, free]
            N = _nullspace(Af)
            if N.shape[1] > 0:
                Qff = Q[np.ix_(free, free)]
                g = (Q @ x)[free]
                y = np.linalg.solve(N.T @ Qff @ N, -(N.T @ g))
                p[free] = N @ y
        if np.linalg.norm(p) <= 1e-11:
            # check multipliers of the active bounds; release the worst
            g = Q @ x
            if free.any():
                nu, *_ = np.linalg.lstsq(A[:, free].T, g[free], rcond=None)
            else:
                nu, *_ = np.linalg.lstsq(A.T, g, rcond=None)
            lam = g - A.T @ nu
            worst = None
            for j in range(n):
                if active[j] and lam[j] < -1e-9:
                    if worst is None or lam[j] < lam[worst]:
                        worst = j
            if worst is None:
                return np.maximum(x, 0.0)
            active[worst] = False
            continue
        alpha = 1.0
        blocker = -1
        for j in range(n):
            if not active[j] and p[j] < -1e-12:
                a = -x[j] / p[j]
                if a < alpha:
                    alpha = a
                    blocker = j
        x = x + alpha * p
        if blocker >= 0:
            x[blocker] = 0.0
            active[blocker] = True
    return np.maximum(x, 0.0)


def _cone_edges(contact: Contact) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(contact.normal, dtype=float)
    t = np.array([-n[1], n[0]])
    d_plus = n + contact.mu * t
    d_minus = n - contact.mu * t
    return d_plus / np.linalg.norm(d_plus), d_minus / np.linalg.norm(d_minus)


def solve_contact_wrenches(
    model: RobotModel, q: np.ndarray, stance: Stance, gravity
) -> WrenchSet | None:
    """Contact forces holding q in static equilibrium, or None if infeasible.

    Forces must close both the force and the CoM-torque balance while
    staying inside their friction cones; the minimum-norm feasible set is
    returned. End-effector poses under forward kinematics must match the
    stance's contact positions (the stance must be geometrically real).
    """
    if len(stance) < 1:
        raise InvalidArgument("balance needs at least one contact")
    g = np.asarray(gravity, dtype=float)
    fk = model.fk(q)
    for c in stance:
        p_ee = fk.point(c.end_effector)
        if np.linalg.norm(p_ee - np.asarray(c.position)) > TOL_CONTACT:
            raise InvalidArgument(
                f"contact {c.end_effector!r} pose mismatch: fk at {p_ee}, "
                f"stance expects {c.position}"
            )
    com = fk.com()
    M = model.total_mass

    k = len(stance)
    A = np.zeros((3, 2 * k))
    edges = []
    for i, c in enumerate(stance):
        d_plus, d_minus = _cone_edges(c)
        r = np.asarray(c.position) - com
        A[:2, 2 * i] = d_plus
        A[:2, 2 * i + 1] = d_minus
        A[2, 2 * i] = _cross(r, d_plus)
        A[2, 2 * i + 1] = _cross(r, d_minus)
        edges.append((d_plus, d_minus))
    b = np.array([-M * g[0], -M * g[1], 0.0])

    x0 = _phase1_feasible(A, b)
    if x0 is None:
        return None

    # min sum ||f_i||^2 in force space; per-contact block couples the two
    # edge weights through their inner product
    Q = np.zeros((2 * k, 2 * k))
    for i, (d_plus, d_minus) in enumerate(edges):
        c12 = float(np.dot(d_plus, d_minus))
        Q[2 * i, 2 * i] = 1.0
        Q[2 * i + 1, 2 * i + 1] = 1.0
        Q[2 * i, 2 * i + 1] = c12
        Q[2 * i + 1, 2 * i] = c12
    Q += 1e-9 * np.eye(2 * k)
    x = _min_norm_qp(Q, A, b, x0)

    # verify equilibrium before reporting success
    resid = A @ x - b
    scale = 1.0 + M * float(np.linalg.norm(g))
    if np.linalg.norm(resid) > _EQ_TOL * scale:
        return None

    forces = {}
    for i, c in enumerate(stance):
        d_plus, d_minus = edges[i]
        f = x[2 * i] * d_plus + x[2 * i + 1] * d_minus
        n = np.asarray(c.normal)
        t = np.array([-n[1], n[0]])
        forces[c.end_effector] = (float(np.dot(f, t)), float(np.dot(f, n)))
    return WrenchSet(forces)


def is_balanced(model: RobotModel, q: np.ndarray, stance: Stance, gravity) -> bool:
    return solve_contact_wrenches(model, q, stance, gravity) is not None


def stance_feasible(model: RobotModel, q: np.ndarray, stance: Stance, gravity) -> bool:
    """Balance predicate planners use: empty stances pass vacuously.

    Free-floating tasks (no contacts) carry no equilibrium requirement;
    solve_contact_wrenches itself still rejects empty stances so callers
    that need forces state so explicitly.
    """
    if len(stance) == 0:
        return True
    return is_balanced(model, q, stance, gravity)


def support_interval(stance: Stance, fk) -> tuple[float, float] | None:
    """Horizontal extent of the stance's contact points at the current fk."""
    if len(stance) == 0:
        return None
    xs = [float(fk.point(c.end_effector)[0]) for c in stance]
    return min(xs), max(xs)
