"""Two-mode static linear systems with bounded noise.

Each mode ``k`` (0 = normal, 1 = faulty) obeys::

    Theta_k theta + X_k x = H_k lambda_k,   A_k x <= b_k,   ||lambda_k|| <= bound

where ``theta`` is the auxiliary signal, ``x`` the known/measured variables
and ``lambda_k`` an unknown noise vector.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-9


def _as_matrix(a, n_cols=None):
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, n_cols or 0))
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1) if n_cols == 1 else a.reshape(1, -1)
    return a


@dataclass(frozen=True, eq=False)
class StaticModel:
    """One behavioral mode: ``theta_map`` (Theta), ``meas_map`` (X), ``noise_map`` (H),
    ``ineq_lhs`` (A) and ``ineq_rhs`` (b)."""

    theta_map: np.ndarray
    meas_map: np.ndarray
    noise_map: np.ndarray
    ineq_lhs: np.ndarray = None
    ineq_rhs: np.ndarray = None

    def __post_init__(self):
        tm = _as_matrix(self.theta_map)
        mm = _as_matrix(self.meas_map)
        nm = _as_matrix(self.noise_map)
        lhs = _as_matrix(self.ineq_lhs if self.ineq_lhs is not None else [], mm.shape[1])
        rhs = np.asarray(self.ineq_rhs if self.ineq_rhs is not None else [], dtype=float).reshape(-1)
        for name, val in [("theta_map", tm), ("meas_map", mm), ("noise_map", nm), ("ineq_lhs", lhs), ("ineq_rhs", rhs)]:
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_eq(self):
        return self.theta_map.shape[0]

    @property
    def n_theta(self):
        return self.theta_map.shape[1]

    @property
    def n_x(self):
        return self.meas_map.shape[1]

    @property
    def n_noise(self):
        return self.noise_map.shape[1]

    @property
    def n_ineq(self):
        return self.ineq_lhs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, StaticModel):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("theta_map", "meas_map", "noise_map", "ineq_lhs", "ineq_rhs")
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DesignProblem:
    normal: StaticModel
    faulty: StaticModel
    cost: np.ndarray
    noise_bound: float = 1.0

    def __post_init__(self):
        c = _as_matrix(self.cost)
        c.setflags(write=False)
        object.__setattr__(self, "cost", c)
        object.__setattr__(self, "noise_bound", float(self.noise_bound))

    @property
    def models(self):
        return (self.normal, self.faulty)

    @property
    def n_theta(self):
        return self.normal.n_theta

    @property
    def n_x(self):
        return self.normal.n_x

    def __eq__(self, other):
        if not isinstance(other, DesignProblem):
            return NotImplemented
        return (
            self.normal == other.normal
            and self.faulty == other.faulty
            and np.array_equal(self.cost, other.cost)
            and self.noise_bound == other.noise_bound
        )

    __hash__ = None


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def _model_violations(model: StaticModel, label: str):
    out = []
    rows = {
        "theta_map": model.theta_map.shape[0],
        "meas_map": model.meas_map.shape[0],
        "noise_map": model.noise_map.shape[0],
    }
    if len(set(rows.values())) > 1:
        out.append(Violation("dimension-mismatch", f"{label}: equality maps disagree on row count {rows}"))
    if model.ineq_lhs.shape[0] != model.ineq_rhs.shape[0]:
        out.append(Violation(
            "dimension-mismatch",
            f"{label}: ineq_lhs has {model.ineq_lhs.shape[0]} rows but ineq_rhs has length {model.ineq_rhs.shape[0]}",
        ))
    if model.ineq_lhs.shape[0] and model.ineq_lhs.shape[1] != model.n_x:
        out.append(Violation("dimension-mismatch", f"{label}: ineq_lhs has {model.ineq_lhs.shape[1]} columns, expected {model.n_x}"))
    for name in ("theta_map", "meas_map", "noise_map", "ineq_lhs", "ineq_rhs"):
        if not np.all(np.isfinite(getattr(model, name))):
            out.append(Violation("non-finite", f"{label}.{name} has non-finite entries"))
    return out


def validate(problem: DesignProblem) -> list[Violation]:
    """Return every consistency violation of ``problem``; empty means valid."""
    out = _model_violations(problem.normal, "normal") + _model_violations(problem.faulty, "faulty")
    n0, n1 = problem.normal, problem.faulty
    if n0.n_theta != n1.n_theta:
        out.append(Violation("dimension-mismatch", f"theta_map column counts {n0.n_theta} vs {n1.n_theta}"))
    if n0.n_x != n1.n_x:
        out.append(Violation("dimension-mismatch", f"meas_map column counts {n0.n_x} vs {n1.n_x}"))

    Q = problem.cost
    if Q.shape != (n0.n_theta, n0.n_theta):
        out.append(Violation("dimension-mismatch", f"cost has shape {Q.shape}, expected {(n0.n_theta, n0.n_theta)}"))
    elif not np.all(np.isfinite(Q)):
        out.append(Violation("non-finite", "cost has non-finite entries"))
    else:
        if np.max(np.abs(Q - Q.T), initial=0.0) > SYMMETRY_TOL:
            out.append(Violation("cost-asymmetric", "cost matrix is not symmetric"))
        else:
            eig = np.linalg.eigvalsh(Q) if Q.size else np.zeros(0)
            scale = np.max(np.abs(eig), initial=0.0)
            if eig.size and eig.min() < -PSD_TOL * scale:
                out.append(Violation("cost-indefinite", f"cost has eigenvalue {eig.min():.3g} < 0"))
    if not (np.isfinite(problem.noise_bound) and problem.noise_bound > 0):
        out.append(Violation("noise-bound", f"noise_bound must be positive, got {problem.noise_bound}"))
    return out


def scale_noise(problem: DesignProblem) -> DesignProblem:
    """Fold the noise bound into the noise maps so the bound becomes 1.

    ``||lambda|| <= c`` with ``H lambda`` is the same set as ``||lambda'|| <= 1``
    with ``(c H) lambda'``, so the feasible ``(theta, x)`` pairs are unchanged and
    the separability measure is divided by ``c**2``.
    """
    c = problem.noise_bound
    if not c > 0:
        raise ValueError(f"noise_bound must be positive, got {c}")
    if c == 1.0:
        return problem
    models = [replace(m, noise_map=c * m.noise_map) for m in problem.models]
    return DesignProblem(models[0], models[1], problem.cost, 1.0)


def cost_factor(cost: np.ndarray) -> np.ndarray:
    """Symmetric square root ``L`` with ``L.T @ L == cost`` (negative eigenvalues clamped)."""
    w, V = np.linalg.eigh(0.5 * (cost + cost.T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
