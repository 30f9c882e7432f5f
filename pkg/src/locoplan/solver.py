"""Damped least-squares solver for the trajectory graph.

Each iteration solves (H + lambda*I) dQ = -b with a banded Cholesky
factorization (the graph couples only consecutive vertices, so H is
block-tridiagonal) and accepts the step only if F strictly decreases;
lambda falls on acceptance and rises on rejection, classic Marquardt.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import SingularSystem
from .graph import BlockMatrix, TrajectoryGraph

TERM_DELTA_F = "converged-dF"
TERM_STEP = "converged-step"
TERM_BUDGET = "budget"
TERM_LAMBDA = "lambda-overflow"
CONVERGED = (TERM_DELTA_F, TERM_STEP)


@dataclass(frozen=True)
class SolverParams:
    lambda_init: float = 1e-4
    lambda_up: float = 10.0
    lambda_down: float = 0.5
    max_iterations: int = 20
    tol_delta_f: float = 1e-9
    tol_step: float = 1e-9
    lambda_max: float = 1e8

    def __post_init__(self):
        if not (self.lambda_up > 1.0 > self.lambda_down > 0.0):
            raise ValueError("need lambda_up > 1 > lambda_down > 0")
        if min(self.lambda_init, self.max_iterations, self.tol_delta_f, self.tol_step, self.lambda_max) <= 0:
            raise ValueError("solver parameters must be positive")

    def to_dict(self) -> dict:
        return {
            "lambda_init": self.lambda_init,
            "lambda_up": self.lambda_up,
            "lambda_down": self.lambda_down,
            "max_iterations": self.max_iterations,
            "tol_delta_f": self.tol_delta_f,
            "tol_step": self.tol_step,
            "lambda_max": self.lambda_max,
        }


@dataclass
class SolveReport:
    iterations: int = 0
    accepted: int = 0
    final_f: float = 0.0
    lambda_history: list = field(default_factory=list)
    termination: str = TERM_DELTA_F
    wall_time: float = 0.0
    factorization: str = "banded-cholesky"

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "accepted": self.accepted,
            "final_f": self.final_f,
            "lambda_history": list(self.lambda_history),
            "termination": self.termination,
            "wall_time_s": self.wall_time,
            "factorization": self.factorization,
        }


_RESIDUAL_FACTOR = 1e-10


def lm_step(H: BlockMatrix, b: np.ndarray, lam: float) -> np.ndarray:
    """Solve (H + lam*I) d = -b via banded Cholesky; verify the residual.

    Raises SingularSystem when the damped matrix fails to factor or the
    verified residual exceeds 1e-10 * (1 + ||b||); the caller responds by
    raising lambda.
    """
    if b.size == 0:
        return np.zeros(0)
    ab = H.lower_band(lam)
    try:
        cb = scipy.linalg.cholesky_banded(ab, lower=True)
        delta = scipy.linalg.cho_solve_banded((cb, True), -b)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystem(f"damped system failed to factor (lambda={lam:g})") from exc
    resid = H.matvec(delta) + lam * delta + b
    if float(np.linalg.norm(resid)) > _RESIDUAL_FACTOR * (1.0 + float(np.linalg.norm(b))):
        raise SingularSystem(f"linear-system residual too large (lambda={lam:g})")
    return delta


def optimize(
    graph: TrajectoryGraph, params: SolverParams = SolverParams()
) -> SolveReport:
    """Minimize F over the graph's free vertices in place.

    Fixed vertices are untouched. Returns a report; lambda overflow is a
    reported outcome (best iterate kept), never an exception.
    """
    t0 = time.perf_counter()
    report = SolveReport(factorization="banded-cholesky")
    F, b, H = graph.assemble()
    report.final_f = F
    if F == 0.0 or graph.n_free == 0 or float(np.linalg.norm(b, ord=np.inf)) == 0.0:
        report.wall_time = time.perf_counter() - t0
        return report

    lam = params.lambda_init
    x = graph.free_flat()
    while report.iterations < params.max_iterations:
        report.iterations += 1
        report.lambda_history.append(lam)
        try:
            delta = lm_step(H, b, lam)
        except SingularSystem:
            lam *= params.lambda_up
            if lam > params.lambda_max:
                report.termination = TERM_LAMBDA
                break
            continue
        x_try = x + delta
        graph.set_free_flat(x_try)
        F_try = graph.cost()
        if F_try < F:
            x = x_try
            d_f = F - F_try
            F = F_try
            report.accepted += 1
            report.final_f = F
            lam = max(lam * params.lambda_down, 1e-15)
            if d_f <= params.tol_delta_f:
                report.termination = TERM_DELTA_F
                break
            if float(np.linalg.norm(delta)) <= params.tol_step:
                report.termination = TERM_STEP
                break
            if F == 0.0:
                report.termination = TERM_DELTA_F
                break
            F, b, H = graph.assemble()
        else:
            graph.set_free_flat(x)  # roll back; reuse (F, b, H)
            if float(np.linalg.norm(delta)) <= params.tol_step:
                # even the heavily damped step is below resolution: the
                # iterate is stationary, not stuck
                report.termination = TERM_STEP
                break
            lam *= params.lambda_up
            if lam > params.lambda_max:
                report.termination = TERM_LAMBDA
                break
    else:
        report.termination = TERM_BUDGET
    report.final_f = F
    report.wall_time = time.perf_counter() - t0
    return report
