"""Separability measure and observation-level classification.

``evaluate_sigma`` solves, for a fixed auxiliary signal ``theta``::

    minimize  omega  over x, omega, lambda_0, lambda_1
    s.t.      Theta_k theta + X_k x = H_k lambda_k
              A_k x <= b_k
              ||lambda_k||^2 <= omega,      k = 0, 1

with a single ``x`` shared by both modes.  Internally the program minimizes
``rho >= ||lambda_k||`` and reports ``sigma = rho**2``.  ``sigma >= 1`` means no
measurement is consistent with both modes under admissible noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .conic import (
    DEFAULT_TOL,
    ConicStatus,
    NonnegativeOrthant,
    ProgramBuilder,
    SolverError,
    SecondOrder,
    solve,
)
from .model import DesignProblem, StaticModel, scale_noise

RANGE_TOL = 1e-8
INEQ_TOL = 1e-9


class SigmaStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class Verdict(str, Enum):
    NORMAL = "Normal"
    FAULTY = "Faulty"
    AMBIGUOUS = "Ambiguous"
    INCONSISTENT = "InconsistentWithBoth"


@dataclass
class SigmaResult:
    sigma: float
    x_star: np.ndarray
    lambda0_star: np.ndarray
    lambda1_star: np.ndarray
    status: SigmaStatus


@dataclass
class Classification:
    """Verdict plus the minimal noise norm each mode needs (``inf`` if none works)."""

    verdict: Verdict
    rho0: float
    rho1: float


def build_sigma_program(problem: DesignProblem, theta):
    """Cone program for the separability measure at fixed ``theta`` (noise bound folded in)."""
    problem = scale_noise(problem)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != problem.n_theta:
        raise ValueError(f"theta has length {theta.shape[0]}, expected {problem.n_theta}")
    b = ProgramBuilder()
    b.add_block("x", problem.n_x)
    b.add_block("rho", 1)
    b.add_block("lambda0", problem.normal.n_noise)
    b.add_block("lambda1", problem.faulty.n_noise)
    b.set_cost("rho", 1.0)
    for k, m in enumerate(problem.models):
        lam = f"lambda{k}"
        if m.n_eq:
            # X_k x - H_k lambda_k = -Theta_k theta
            rows = np.zeros((m.n_eq, b.n_vars))
            rows[:, b.blocks["x"]] = m.meas_map
            rows[:, b.blocks[lam]] = -m.noise_map
            b.add_eq(rows, -m.theta_map @ theta)
        if m.n_ineq:
            G = np.zeros((m.n_ineq, b.n_vars))
            G[:, b.blocks["x"]] = m.ineq_lhs
            b.add_cone(G, m.ineq_rhs, NonnegativeOrthant(m.n_ineq))
        # omega >= ||lambda_k||^2 is posed as rho >= ||lambda_k|| with omega = rho^2;
        # the rotated-cone form is badly conditioned once sigma is large
        G = np.zeros((1 + m.n_noise, b.n_vars))
        G[0, b.idx("rho", 0)] = -1.0
        G[1:, b.blocks[lam]] = -np.eye(m.n_noise)
        b.add_cone(G, np.zeros(1 + m.n_noise), SecondOrder(1 + m.n_noise))
    return b.build()


def evaluate_sigma(problem: DesignProblem, theta, tolerance: float = DEFAULT_TOL) -> SigmaResult:
    """Separability measure at ``theta`` together with a minimizing witness.

    Raises :class:`SolverError` if the cone backend fails.
    """
    prog = build_sigma_program(problem, theta)
    sol = solve(prog, tolerance)
    if sol.status is ConicStatus.PRIMAL_INFEASIBLE:
        return SigmaResult(math.inf, np.full(problem.n_x, np.nan),
                           np.full(problem.normal.n_noise, np.nan),
                           np.full(problem.faulty.n_noise, np.nan), SigmaStatus.INFEASIBLE)
    if sol.status is ConicStatus.DUAL_INFEASIBLE:
        # omega >= 0 always, so this is a backend defect rather than a real answer
        raise SolverError(f"sigma program reported unbounded: {sol.message}")
    if not sol.ok:
        raise SolverError(f"sigma program failed: {sol.message}")
    y = sol.primal
    # witness is for the bound-normalized problem; map noise back to original units
    c = problem.noise_bound
    return SigmaResult(
        sigma=max(float(prog.unpack(y, "rho")[0]), 0.0) ** 2,
        x_star=prog.unpack(y, "x").copy(),
        lambda0_star=c * prog.unpack(y, "lambda0"),
        lambda1_star=c * prog.unpack(y, "lambda1"),
        status=SigmaStatus.OPTIMAL,
    )


def min_noise(model: StaticModel, theta, x_obs) -> float:
    """Smallest noise norm explaining an observation under one mode.

    Returns ``inf`` when the observation violates the mode's inequality
    constraints or its residual is outside the range of the noise map.
    """
    theta = np.asarray(theta, dtype=float).reshape(-1)
    x_obs = np.asarray(x_obs, dtype=float).reshape(-1)
    if theta.shape[0] != model.n_theta or x_obs.shape[0] != model.n_x:
        raise ValueError("theta / x_obs lengths do not match the model")
    if model.n_ineq:
        b = model.ineq_rhs
        slack_tol = INEQ_TOL * (1 + np.max(np.abs(b), initial=0.0))
        if np.any(model.ineq_lhs @ x_obs > b + slack_tol):
            return math.inf
    r = model.theta_map @ theta + model.meas_map @ x_obs
    if model.n_noise == 0:
        lam = np.zeros(0)
    else:
        lam = np.linalg.lstsq(model.noise_map, r, rcond=None)[0]
    if np.linalg.norm(model.noise_map @ lam - r) > RANGE_TOL * (1 + np.linalg.norm(r)):
        return math.inf
    return float(np.linalg.norm(lam))


def classify(problem: DesignProblem, theta, x_obs) -> Classification:
    """Decide which modes can explain ``x_obs`` within the noise bound."""
    rho0 = min_noise(problem.normal, theta, x_obs)
    rho1 = min_noise(problem.faulty, theta, x_obs)
    bound = problem.noise_bound
    ok0, ok1 = rho0 <= bound, rho1 <= bound
    if ok0 and ok1:
        verdict = Verdict.AMBIGUOUS
    elif ok0:
        verdict = Verdict.NORMAL
    elif ok1:
        verdict = Verdict.FAULTY
    else:
        verdict = Verdict.INCONSISTENT
    return Classification(verdict, rho0, rho1)
