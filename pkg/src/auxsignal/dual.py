"""Dual bilinear program and its convex restrictions.

Replacing the separability program by its Lagrange dual turns the design
problem into::

    minimize   theta^T Q theta
    subject to 1 <= sum_k beta_k^T Theta_k theta - eps_k^T b_k - delta_k
               alpha_0 + alpha_1 = 1
               sum_k X_k^T beta_k + A_k^T eps_k = 0
               4 alpha_k delta_k >= ||H_k^T beta_k||^2
               alpha_k >= 0, eps_k >= 0

Only the first constraint is nonconvex.  Each bilinear term is split as
``beta^T Theta theta = 1/4 v^T (Psi - psi I) v + 1/4 v^T (Psi + psi I) v``
with ``v = (beta, theta)``, ``Psi = [[0, Theta], [Theta^T, 0]]`` and ``psi``
its largest eigenvalue; the first part is concave and the second convex.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import (
    DEFAULT_TOL,
    ConicProgram,
    ConicStatus,
    NonnegativeOrthant,
    ProgramBuilder,
    SolverError,
    rewrite_hyperbolic,
    solve,
)
from .model import DesignProblem, cost_factor, scale_noise


@dataclass
class DualVariables:
    alpha: np.ndarray
    beta: list
    epsilon: list
    delta: np.ndarray

    def violations(self, problem: DesignProblem, tol: float = 1e-8) -> list[str]:
        """Names of the dual-feasibility conditions this point breaks."""
        problem = scale_noise(problem)
        out = []
        if abs(self.alpha.sum() - 1) > tol:
            out.append("alpha-sum")
        if np.any(self.alpha < -tol):
            out.append("alpha-sign")
        for k, m in enumerate(problem.models):
            lhs = 4 * self.alpha[k] * self.delta[k]
            if lhs < float(np.sum((m.noise_map.T @ self.beta[k]) ** 2)) - tol:
                out.append(f"hyperbolic-{k}")
            if np.any(self.epsilon[k] < -1e-10):
                out.append(f"epsilon-sign-{k}")
        stat = sum(m.meas_map.T @ self.beta[k] + m.ineq_lhs.T @ self.epsilon[k] for k, m in enumerate(problem.models))
        if np.max(np.abs(stat), initial=0.0) > tol * (1 + max(np.max(np.abs(b), initial=0.0) for b in self.beta)):
            out.append("stationarity")
        return out


@dataclass
class EigenSplit:
    psi_matrix: np.ndarray
    psi_max: float
    n_beta: int
    n_theta: int

    @property
    def convex_matrix(self):
        return self.psi_matrix + self.psi_max * np.eye(self.psi_matrix.shape[0])

    @property
    def concave_matrix(self):
        return self.psi_matrix - self.psi_max * np.eye(self.psi_matrix.shape[0])

    def concave_factor(self):
        """``F`` with ``F.T @ F == psi I - Psi``; zero rows dropped."""
        w, U = np.linalg.eigh(self.psi_matrix)
        d = np.clip(self.psi_max - w, 0.0, None)
        keep = d > 0
        return np.sqrt(d[keep])[:, None] * U[:, keep].T


@dataclass
class AffineForm:
    """``constant + grad_beta . beta + grad_theta . theta``."""

    constant: float
    grad_beta: np.ndarray
    grad_theta: np.ndarray

    def __call__(self, beta, theta):
        return self.constant + float(self.grad_beta @ beta) + float(self.grad_theta @ theta)


def eigen_split(theta_map) -> EigenSplit:
    theta_map = np.atleast_2d(np.asarray(theta_map, dtype=float))
    n_e, n_t = theta_map.shape
    psi = np.zeros((n_e + n_t, n_e + n_t))
    psi[:n_e, n_e:] = theta_map
    psi[n_e:, :n_e] = theta_map.T
    psi_max = float(np.linalg.eigvalsh(psi)[-1]) if psi.size else 0.0
    return EigenSplit(psi, psi_max, n_e, n_t)


def bilinear_identity(split: EigenSplit, beta, theta):
    """Concave and convex parts of ``beta^T Theta theta``; they sum to it."""
    v = np.concatenate([np.asarray(beta, float).reshape(-1), np.asarray(theta, float).reshape(-1)])
    return 0.25 * float(v @ split.concave_matrix @ v), 0.25 * float(v @ split.convex_matrix @ v)


def linearize_convex_part(split: EigenSplit, beta_z, theta_z) -> AffineForm:
    """First-order expansion of the convex part at ``(beta_z, theta_z)``.

    The result touches the convex part at the anchor and lies below it
    everywhere else.
    """
    vz = np.concatenate([np.asarray(beta_z, float).reshape(-1), np.asarray(theta_z, float).reshape(-1)])
    Mv = split.convex_matrix @ vz
    # 1/4 vz'M vz + 1/2 vz'M (v - vz) = 1/2 (M vz)'v - 1/4 vz'M vz
    grad = 0.5 * Mv
    return AffineForm(-0.25 * float(vz @ Mv), grad[: split.n_beta], grad[split.n_beta:])


def _dual_blocks(b: ProgramBuilder, problem: DesignProblem):
    m0, m1 = problem.models
    b.add_block("alpha", 2)
    b.add_block("beta0", m0.n_eq)
    b.add_block("beta1", m1.n_eq)
    b.add_block("eps0", m0.n_ineq)
    b.add_block("eps1", m1.n_ineq)
    b.add_block("delta", 2)


def _dual_constraints(b: ProgramBuilder, problem: DesignProblem):
    b.add_eq(b.row({"alpha": np.ones(2)}), 1.0)
    if problem.n_x:
        rows = np.zeros((problem.n_x, b.n_vars))
        for k, m in enumerate(problem.models):
            rows[:, b.blocks[f"beta{k}"]] = m.meas_map.T
            if m.n_ineq:
                rows[:, b.blocks[f"eps{k}"]] = m.ineq_lhs.T
        b.add_eq(rows, np.zeros(problem.n_x))
    for k, m in enumerate(problem.models):
        b.add_rows(rewrite_hyperbolic(
            b.n_vars, b.idx("alpha", k), b.idx("delta", k), b.idx(f"beta{k}"), m.noise_map.T
        ))
        b.add_nonneg(f"eps{k}")


def unpack_dual(prog: ConicProgram, y) -> DualVariables:
    return DualVariables(
        alpha=prog.unpack(y, "alpha").copy(),
        beta=[prog.unpack(y, "beta0").copy(), prog.unpack(y, "beta1").copy()],
        epsilon=[prog.unpack(y, "eps0").copy(), prog.unpack(y, "eps1").copy()],
        delta=prog.unpack(y, "delta").copy(),
    )


def build_fixed_theta_program(problem: DesignProblem, theta) -> ConicProgram:
    """Feasibility program of the dual with ``theta`` held fixed (objective 0)."""
    problem = scale_noise(problem)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != problem.n_theta:
        raise ValueError(f"theta has length {theta.shape[0]}, expected {problem.n_theta}")
    b = ProgramBuilder()
    _dual_blocks(b, problem)
    # sum_k beta_k' Theta_k theta - eps_k' b_k - delta_k >= 1
    row = b.row({
        "beta0": problem.normal.theta_map @ theta,
        "beta1": problem.faulty.theta_map @ theta,
        "eps0": -problem.normal.ineq_rhs,
        "eps1": -problem.faulty.ineq_rhs,
        "delta": -np.ones(2),
    })
    b.add_cone(-row, [-1.0], NonnegativeOrthant(1))
    _dual_constraints(b, problem)
    return b.build()


def check_separability(problem: DesignProblem, theta, tolerance: float = DEFAULT_TOL) -> bool:
    """True when ``theta`` makes the two modes distinguishable (dual certificate exists).

    Raises :class:`SolverError` when the backend can neither find a feasible
    point nor certify infeasibility.
    """
    sol = solve(build_fixed_theta_program(problem, theta), tolerance)
    if sol.status is ConicStatus.OPTIMAL:
        return True
    if sol.status is ConicStatus.PRIMAL_INFEASIBLE:
        return False
    raise SolverError(f"separability check failed: {sol.message}")


def eigen_splits(problem: DesignProblem):
    return [eigen_split(m.theta_map) for m in problem.models]


def build_ccp_subproblem(problem: DesignProblem, theta_z, beta_z, gamma: float, splits=None) -> ConicProgram:
    """Convex restriction of the dual design problem around ``(theta_z, beta_z)``.

    Variables are ``theta, t, alpha, beta0, beta1, eps0, eps1, delta, xi, q``;
    the objective is ``t + gamma * xi`` with ``t >= theta^T Q theta``.  The
    bilinear constraint becomes::

        1 - xi <= sum_k [concave_k(beta_k, theta) + J_k(beta_k, theta)] - eps_k^T b_k - delta_k

    where ``J_k`` is the tangent of the convex part; the concave part enters
    through ``q >= -sum_k concave_k`` as a rotated cone.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    problem = scale_noise(problem)
    theta_z = np.asarray(theta_z, dtype=float).reshape(-1)
    if theta_z.shape[0] != problem.n_theta:
        raise ValueError(f"theta_z has length {theta_z.shape[0]}, expected {problem.n_theta}")
    for k, m in enumerate(problem.models):
        if np.asarray(beta_z[k]).reshape(-1).shape[0] != m.n_eq:
            raise ValueError(f"beta_z[{k}] has wrong length, expected {m.n_eq}")
    if splits is None:
        splits = eigen_splits(problem)
    n_t = problem.n_theta

    b = ProgramBuilder()
    b.add_block("theta", n_t)
    b.add_block("t", 1)
    _dual_blocks(b, problem)
    b.add_block("xi", 1)
    b.add_block("q", 1)
    b.set_cost("t", 1.0)
    b.set_cost("xi", gamma)

    # q - sum_k J_k + sum_k eps_k'b_k + delta_0 + delta_1 - xi = sum_k J_k(0) - 1
    terms = {"q": 1.0, "delta": np.ones(2), "xi": -1.0, "theta": np.zeros(n_t)}
    const = -1.0
    for k, m in enumerate(problem.models):
        J = linearize_convex_part(splits[k], beta_z[k], theta_z)
        terms[f"beta{k}"] = -J.grad_beta
        terms["theta"] = terms["theta"] - J.grad_theta
        terms[f"eps{k}"] = m.ineq_rhs
        const += J.constant
    b.add_eq(b.row(terms), const)

    # 4 * 1 * q >= sum_k ||F_k (beta_k, theta)||^2,  F_k' F_k = psi_k I - Psi_k
    idx = b.idx("beta0") + b.idx("beta1") + b.idx("theta")
    n0, n1 = problem.normal.n_eq, problem.faulty.n_eq
    maps = []
    for k, split in enumerate(splits):
        F = split.concave_factor()
        block = np.zeros((F.shape[0], len(idx)))
        off = 0 if k == 0 else n0
        nb = n0 if k == 0 else n1
        block[:, off:off + nb] = F[:, :nb]
        block[:, n0 + n1:] = F[:, nb:]
        maps.append(block)
    b.add_rows(rewrite_hyperbolic(b.n_vars, None, b.idx("q", 0), idx, np.vstack(maps)))

    # t >= theta' Q theta  <=>  4 * 1 * t >= ||2 L theta||^2
    L = cost_factor(problem.cost)
    b.add_rows(rewrite_hyperbolic(b.n_vars, None, b.idx("t", 0), b.idx("theta"), 2.0 * L))

    b.add_nonneg("xi")
    _dual_constraints(b, problem)
    return b.build()
