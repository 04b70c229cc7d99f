"""Standard-form second-order cone programs.

A program is stored as::

    minimize    c^T y
    subject to  E y = f
                G y + s = h,   s in K

where ``K`` is a product of nonnegative orthants and second-order cones,
listed in ``cone_layout`` in row order.  For a second-order cone block the
leading entry of ``s`` is the scalar bound: ``s[0] >= ||s[1:]||``.

Dual convention: the returned ``eq_duals`` (u) and ``cone_duals`` (z) satisfy
``c + E^T u + G^T z = 0`` with ``z`` in the dual cone (self-dual here), and
the dual objective is ``-(f^T u + h^T z)``.

The numerical work is delegated to Clarabel; every answer it gives is
re-checked here against the residual contract before being reported.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import clarabel
import numpy as np
import scipy.sparse as sp

DEFAULT_TOL = 1e-8


class SolverError(RuntimeError):
    """Raised when the cone backend cannot produce a trustworthy answer."""


@dataclass(frozen=True)
class NonnegativeOrthant:
    dim: int


@dataclass(frozen=True)
class SecondOrder:
    dim: int


class ConicStatus(str, Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class ConicProgram:
    objective: np.ndarray
    eq_lhs: np.ndarray
    eq_rhs: np.ndarray
    cone_lhs: np.ndarray
    cone_rhs: np.ndarray
    cone_layout: list
    # named variable blocks, used by builders to unpack solutions
    blocks: dict = field(default_factory=dict)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    def check(self):
        n = self.n_vars
        if self.eq_lhs.shape != (self.eq_rhs.shape[0], n):
            raise ValueError(f"eq_lhs has shape {self.eq_lhs.shape}, expected ({self.eq_rhs.shape[0]}, {n})")
        if self.cone_lhs.shape != (self.cone_rhs.shape[0], n):
            raise ValueError(f"cone_lhs has shape {self.cone_lhs.shape}, expected ({self.cone_rhs.shape[0]}, {n})")
        total = 0
        for cone in self.cone_layout:
            if not isinstance(cone, (NonnegativeOrthant, SecondOrder)):
                raise ValueError(f"unknown cone descriptor {cone!r}")
            if cone.dim < 1:
                raise ValueError(f"cone dimension must be positive, got {cone.dim}")
            total += cone.dim
        if total != self.cone_rhs.shape[0]:
            raise ValueError(f"cone dims sum to {total} but there are {self.cone_rhs.shape[0]} cone rows")

    def unpack(self, y, name):
        return y[self.blocks[name]]


@dataclass
class ConicSolution:
    status: ConicStatus
    primal: np.ndarray
    slacks: np.ndarray
    eq_duals: np.ndarray
    cone_duals: np.ndarray
    objective_value: float
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is ConicStatus.OPTIMAL


class ProgramBuilder:
    """Incrementally assemble a :class:`ConicProgram` from named variable blocks."""

    def __init__(self):
        self.blocks = {}
        self.n_vars = 0
        self._c = {}
        self._eq = []
        self._cones = []

    def add_block(self, name, size):
        sl = slice(self.n_vars, self.n_vars + size)
        self.blocks[name] = sl
        self.n_vars += size
        return sl

    def idx(self, name, i=None):
        sl = self.blocks[name]
        if i is None:
            return list(range(sl.start, sl.stop))
        return sl.start + i

    def set_cost(self, name, coef):
        self._c[name] = np.atleast_1d(np.asarray(coef, dtype=float))

    def row(self, terms):
        """Dense row from ``{block_name: coefficients}``."""
        r = np.zeros(self.n_vars)
        for name, coef in terms.items():
            r[self.blocks[name]] += coef
        return r

    def add_eq(self, rows, rhs):
        rows = np.atleast_2d(rows)
        self._eq.append((rows, np.atleast_1d(np.asarray(rhs, dtype=float))))

    def add_cone(self, G, h, cone):
        G = np.atleast_2d(G)
        self._cones.append((G, np.atleast_1d(np.asarray(h, dtype=float)), cone))

    def add_nonneg(self, name):
        """Constrain every entry of a block to be nonnegative."""
        sl = self.blocks[name]
        size = sl.stop - sl.start
        if size == 0:
            return
        G = np.zeros((size, self.n_vars))
        G[:, sl] = -np.eye(size)
        self.add_cone(G, np.zeros(size), NonnegativeOrthant(size))

    def add_rows(self, triples):
        for G, h, cone in triples:
            self.add_cone(G, h, cone)

    def build(self) -> ConicProgram:
        n = self.n_vars
        c = np.zeros(n)
        for name, coef in self._c.items():
            c[self.blocks[name]] = coef
        E = np.vstack([r for r, _ in self._eq]) if self._eq else np.zeros((0, n))
        f = np.concatenate([v for _, v in self._eq]) if self._eq else np.zeros(0)
        G = np.vstack([g for g, _, _ in self._cones]) if self._cones else np.zeros((0, n))
        h = np.concatenate([v for _, v, _ in self._cones]) if self._cones else np.zeros(0)
        prog = ConicProgram(c, E, f, G, h, [k for _, _, k in self._cones], dict(self.blocks))
        prog.check()
        return prog


def rewrite_hyperbolic(n_vars, alpha_index, delta_index, vector_indices, vector_map=None):
    """Cone rows for the hyperbolic constraint ``4 a d >= ||v||^2``, ``a, d >= 0``.

    ``a`` is variable ``alpha_index`` (or the constant 1 when it is ``None``),
    ``d`` is variable ``delta_index`` and ``v = vector_map @ y[vector_indices]``
    (identity map by default).  The equivalent second-order cone is
    ``||(v, a - d)|| <= a + d``.

    Returns a list of ``(G, h, cone)`` triples in the ``G y + s = h`` form.
    """
    vector_indices = list(vector_indices)
    for i in [alpha_index, delta_index, *vector_indices]:
        if i is not None and not 0 <= i < n_vars:
            raise IndexError(f"variable index {i} out of range for {n_vars} variables")
    if vector_map is None:
        vector_map = np.eye(len(vector_indices))
    vector_map = np.atleast_2d(np.asarray(vector_map, dtype=float))
    if vector_map.shape[1] != len(vector_indices):
        raise ValueError("vector_map columns must match vector_indices")
    m = vector_map.shape[0]

    G = np.zeros((m + 2, n_vars))
    h = np.zeros(m + 2)
    # s0 = a + d, s1 = a - d, s2.. = v
    if alpha_index is None:
        h[0] += 1.0
        h[1] += 1.0
    else:
        G[0, alpha_index] -= 1.0
        G[1, alpha_index] -= 1.0
    G[0, delta_index] -= 1.0
    G[1, delta_index] += 1.0
    if vector_indices:
        G[2:, vector_indices] = -vector_map

    out = [(G, h, SecondOrder(m + 2))]
    signs = [i for i in (alpha_index, delta_index) if i is not None]
    Gn = np.zeros((len(signs), n_vars))
    for r, i in enumerate(signs):
        Gn[r, i] = -1.0
    out.append((Gn, np.zeros(len(signs)), NonnegativeOrthant(len(signs))))
    return out


# ---------------------------------------------------------------- residuals

def _cone_blocks(layout):
    start = 0
    for cone in layout:
        yield cone, slice(start, start + cone.dim)
        start += cone.dim


def cone_violation(v, layout) -> float:
    """Largest amount by which ``v`` sits outside the (self-dual) cone ``K``."""
    worst = 0.0
    for cone, sl in _cone_blocks(layout):
        part = v[sl]
        if isinstance(cone, NonnegativeOrthant):
            worst = max(worst, float(np.max(-part, initial=0.0)))
        else:
            worst = max(worst, float(np.linalg.norm(part[1:]) - part[0]))
    return worst


def kkt_residuals(program: ConicProgram, sol: ConicSolution) -> dict:
    """Scaled optimality residuals of an (alleged) optimal primal-dual pair."""
    E, f, G, h, c = program.eq_lhs, program.eq_rhs, program.cone_lhs, program.cone_rhs, program.objective
    y, s, u, z = sol.primal, sol.slacks, sol.eq_duals, sol.cone_duals
    obj = float(c @ y)
    # one scale for all primal rows: the right-hand sides are a single data vector
    rhs = 1 + max(_inf(f), _inf(h))
    return {
        "eq": _inf(E @ y - f) / rhs,
        "cone_eq": _inf(G @ y + s - h) / rhs,
        "stationarity": _inf(c + E.T @ u + G.T @ z) / (1 + _inf(c)),
        "slack_cone": cone_violation(s, program.cone_layout) / rhs,
        "dual_cone": cone_violation(z, program.cone_layout) / (1 + _inf(c)),
        "gap": abs(float(s @ z)) / (1 + abs(obj)),
        "dual_objective_gap": abs(obj + float(f @ u + h @ z)) / (1 + abs(obj)),
    }


def farkas_residual(program: ConicProgram, sol: ConicSolution) -> float:
    """Residual of a primal-infeasibility certificate normalized to ``f^T u + h^T z = -1``.

    Returns ``inf`` when the pair does not point in an infeasibility direction.
    """
    u, z = sol.eq_duals, sol.cone_duals
    val = float(program.eq_rhs @ u + program.cone_rhs @ z)
    if not val < 0:
        return np.inf
    u, z = u / -val, z / -val
    res = program.eq_lhs.T @ u + program.cone_lhs.T @ z
    return max(_inf(res), cone_violation(z, program.cone_layout))


def ray_residual(program: ConicProgram, sol: ConicSolution) -> float:
    """Residual of an improving ray normalized to ``c^T y = -1``."""
    y = sol.primal
    val = float(program.objective @ y)
    if not val < 0:
        return np.inf
    y = y / -val
    s = -program.cone_lhs @ y
    return max(_inf(program.eq_lhs @ y), cone_violation(s, program.cone_layout))


def _inf(v) -> float:
    return float(np.max(np.abs(v), initial=0.0))


# ---------------------------------------------------------------- solve

_STATUS_MAP = {
    "Solved": ConicStatus.OPTIMAL,
    "AlmostSolved": ConicStatus.OPTIMAL,
    "PrimalInfeasible": ConicStatus.PRIMAL_INFEASIBLE,
    "AlmostPrimalInfeasible": ConicStatus.PRIMAL_INFEASIBLE,
    "DualInfeasible": ConicStatus.DUAL_INFEASIBLE,
    "AlmostDualInfeasible": ConicStatus.DUAL_INFEASIBLE,
}


def _settings(inner):
    s = clarabel.DefaultSettings()
    s.verbose = False
    s.max_threads = 1
    s.tol_feas = inner
    s.tol_gap_abs = inner
    s.tol_gap_rel = inner
    s.tol_infeas_abs = inner
    s.tol_infeas_rel = inner
    s.max_iter = 200
    return s


# backend tolerances tried in turn, as fractions of the contract tolerance;
# Clarabel's internal scaling differs from the contract, so the first answer
# that survives the re-check is kept
_LADDER = (1e-2, 1e-4, 1e-6, 1e-1, 0.3)


def _to_clarabel_cones(layout, n_eq):
    cones = []
    if n_eq:
        cones.append(clarabel.ZeroConeT(n_eq))
    for cone in layout:
        if isinstance(cone, NonnegativeOrthant):
            cones.append(clarabel.NonnegativeConeT(cone.dim))
        else:
            cones.append(clarabel.SecondOrderConeT(cone.dim))
    return cones


def solve(program: ConicProgram, tolerance: float = DEFAULT_TOL) -> ConicSolution:
    """Solve a cone program and validate the answer at ``tolerance``.

    Optimal answers must meet the KKT residual bounds; infeasibility answers
    must come with a certificate whose residual is at most ``tolerance``.
    Anything else is reported as ``NumericalFailure``.
    """
    program.check()
    n = program.n_vars
    n_eq = program.eq_rhs.shape[0]
    A = sp.csc_matrix(np.vstack([program.eq_lhs, program.cone_lhs]))
    b = np.concatenate([program.eq_rhs, program.cone_rhs])
    P = sp.csc_matrix((n, n))
    cones = _to_clarabel_cones(program.cone_layout, n_eq)

    sol = None
    for frac in _LADDER:
        raw = clarabel.DefaultSolver(P, program.objective.astype(float), A, b, cones,
                                     _settings(tolerance * frac)).solve()
        x = np.asarray(raw.x, dtype=float)
        zz = np.asarray(raw.z, dtype=float)
        ss = np.asarray(raw.s, dtype=float)
        sol = _validate(program, ConicSolution(
            status=_STATUS_MAP.get(str(raw.status), ConicStatus.NUMERICAL_FAILURE),
            primal=x,
            slacks=ss[n_eq:],
            eq_duals=zz[:n_eq],
            cone_duals=zz[n_eq:],
            objective_value=float(program.objective @ x),
            message=str(raw.status),
        ), tolerance)
        if sol.status is not ConicStatus.NUMERICAL_FAILURE:
            break
    return sol


def _validate(program, sol, tol):
    if sol.status is ConicStatus.OPTIMAL:
        res = kkt_residuals(program, sol)
        bad = {k: v for k, v in res.items() if v > tol and k != "dual_objective_gap"}
        if bad:
            sol.status = ConicStatus.NUMERICAL_FAILURE
            sol.message += f"; residuals above {tol:g}: {bad}"
    elif sol.status is ConicStatus.PRIMAL_INFEASIBLE:
        r = farkas_residual(program, sol)
        if r > tol:
            sol.status = ConicStatus.NUMERICAL_FAILURE
            sol.message += f"; infeasibility certificate residual {r:g}"
    elif sol.status is ConicStatus.DUAL_INFEASIBLE:
        r = ray_residual(program, sol)
        if r > tol:
            sol.status = ConicStatus.NUMERICAL_FAILURE
            sol.message += f"; unbounded ray residual {r:g}"
    return sol
