"""Penalty convex-concave procedure for the minimal auxiliary signal."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .conic import DEFAULT_TOL, ConicStatus, SolverError, solve
from .dual import build_ccp_subproblem, eigen_splits, unpack_dual
from .model import DesignProblem, validate
from .sigma import SigmaStatus, evaluate_sigma

log = logging.getLogger(__name__)

SIGMA_SLACK = 1e-6
STALL_WINDOW = 10


class DesignStatus(str, Enum):
    SEPARABLE = "Separable"
    INSEPARABLE = "Inseparable"
    ITER_LIMIT = "IterLimit"
    SOLVER_FAILURE = "SolverFailure"


@dataclass(frozen=True)
class CcpConfig:
    gamma0: float = 1.0
    gamma_max: float = 1e4
    zeta: float = 1.5
    max_iters: int = 200
    tol_objective: float = 1e-6
    tol_slack: float = 1e-6
    n_starts: int = 5
    rng_seed: int = 0
    init_radius: float = 1.0
    conic_tol: float = DEFAULT_TOL
    # subproblems only steer the iteration; the endpoint is re-verified at conic_tol
    subproblem_tol: float = 1e-6

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if not self.gamma_max > self.gamma0:
            raise ValueError("gamma_max must exceed gamma0")
        if not self.zeta > 1:
            raise ValueError("zeta must exceed 1")
        for name in ("max_iters", "n_starts"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        for name in ("tol_objective", "tol_slack", "init_radius", "conic_tol", "subproblem_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class CcpStep:
    iteration: int
    objective: float
    slack: float
    gamma: float
    theta: np.ndarray


@dataclass
class DesignResult:
    theta_star: np.ndarray
    cost: float
    sigma_verified: float
    status: DesignStatus
    trace: list = field(default_factory=list)
    start_index: int = -1

    @property
    def iterations(self):
        return len(self.trace)


@dataclass
class _Run:
    start: int
    outcome: str  # converged | stalled | iter-limit | failed
    theta: np.ndarray
    slack: float
    trace: list


def initialize(problem: DesignProblem, config: CcpConfig, start_index: int):
    """Starting signal and dual multipliers for one CCP run."""
    if not 0 <= start_index < config.n_starts:
        raise ValueError(f"start_index {start_index} outside [0, {config.n_starts})")
    n_t = problem.n_theta
    m0, m1 = problem.models
    if start_index == 0:
        rows = max(m0.n_eq, m1.n_eq)
        diff = np.zeros((rows, n_t))
        diff[: m1.n_eq] += m1.theta_map
        diff[: m0.n_eq] -= m0.theta_map
        if rows and np.any(diff):
            v = np.linalg.svd(diff)[2][0]
            # fix the sign so the start does not depend on LAPACK conventions
            v = v * np.sign(v[np.argmax(np.abs(v))])
        else:
            v = np.zeros(n_t)
            v[0] = 1.0
        theta0 = config.init_radius * v
        beta0 = [np.zeros(m0.n_eq), np.zeros(m1.n_eq)]
    else:
        rng = np.random.default_rng([config.rng_seed, start_index])
        d = rng.standard_normal(n_t)
        theta0 = config.init_radius * d / np.linalg.norm(d)
        beta0 = [0.1 * rng.standard_normal(m0.n_eq), 0.1 * rng.standard_normal(m1.n_eq)]
    return theta0, beta0


def _run(problem, config, start, splits) -> _Run:
    theta, beta = initialize(problem, config, start)
    gamma = config.gamma0
    trace = []
    prev_obj = None
    prev_slack = None
    stall = 0
    for z in range(config.max_iters):
        prog = build_ccp_subproblem(problem, theta, beta, gamma, splits)
        sol = solve(prog, config.subproblem_tol)
        if sol.status is not ConicStatus.OPTIMAL:
            log.debug("start %d iteration %d: subproblem %s", start, z, sol.message)
            # the last accepted iterate is still a valid endpoint if it was feasible
            return _Run(start, "failed", theta, trace[-1].slack if trace else np.inf, trace)
        y = sol.primal
        theta = prog.unpack(y, "theta").copy()
        beta = unpack_dual(prog, y).beta
        slack = max(float(prog.unpack(y, "xi")[0]), 0.0)
        obj = float(theta @ problem.cost @ theta) + gamma * slack
        trace.append(CcpStep(z, obj, slack, gamma, theta.copy()))

        if (prev_obj is not None and abs(obj - prev_obj) <= config.tol_objective * (1 + abs(obj))
                and slack <= config.tol_slack):
            return _Run(start, "converged", theta, slack, trace)
        if gamma >= config.gamma_max and slack > config.tol_slack and prev_slack is not None:
            stall = stall + 1 if prev_slack - slack < config.tol_slack else 0
            if stall >= STALL_WINDOW:
                return _Run(start, "stalled", theta, slack, trace)
        prev_obj, prev_slack = obj, slack
        gamma = min(config.zeta * gamma, config.gamma_max)
    return _Run(start, "iter-limit", theta, slack if trace else np.inf, trace)


def design(problem: DesignProblem, config: CcpConfig | None = None) -> DesignResult:
    """Smallest-cost signal that makes the two modes distinguishable (local optimum).

    Every start is run to completion; feasible endpoints are re-checked with
    the primal separability measure and the cheapest verified one wins.
    """
    config = config or CcpConfig()
    problems = validate(problem)
    if problems:
        raise ValueError("invalid problem: " + "; ".join(v.message for v in problems))
    splits = eigen_splits(problem)

    runs = [_run(problem, config, s, splits) for s in range(config.n_starts)]
    best = None
    for r in runs:
        if r.slack > config.tol_slack:
            continue
        try:
            sig = evaluate_sigma(problem, r.theta, config.conic_tol)
        except SolverError as exc:
            log.debug("start %d: verification failed: %s", r.start, exc)
            continue
        sigma = sig.sigma if sig.status is not SigmaStatus.INFEASIBLE else np.inf
        if sigma < 1 - SIGMA_SLACK:
            continue
        cost = float(r.theta @ problem.cost @ r.theta)
        if best is None or cost < best.cost:
            best = DesignResult(r.theta, cost, sigma, DesignStatus.SEPARABLE, r.trace, r.start)
    if best is not None:
        return best

    outcomes = {r.outcome for r in runs}
    if "stalled" in outcomes or "converged" in outcomes:
        status = DesignStatus.INSEPARABLE
    elif "iter-limit" in outcomes:
        status = DesignStatus.ITER_LIMIT
    else:
        status = DesignStatus.SOLVER_FAILURE
    r = next((r for r in runs if r.trace), runs[0])
    theta = r.theta
    sigma = np.nan
    if status is not DesignStatus.SOLVER_FAILURE:
        try:
            sigma = evaluate_sigma(problem, theta, config.conic_tol).sigma
        except SolverError:
            pass
    return DesignResult(theta, float(theta @ problem.cost @ theta), sigma, status, r.trace, r.start)
