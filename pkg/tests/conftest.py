import numpy as np
import pytest

from auxsignal import DesignProblem, StaticModel


def scalar_pair():
    """Theta_0 = 1, Theta_1 = -1, X = H = Q = 1: sigma(theta) = theta^2."""
    return DesignProblem(
        StaticModel([[1.0]], [[1.0]], [[1.0]]),
        StaticModel([[-1.0]], [[1.0]], [[1.0]]),
        [[1.0]],
    )


def identical_pair():
    m = StaticModel([[1.0]], [[1.0]], [[1.0]])
    return DesignProblem(m, m, [[1.0]])


def random_problem(rng, with_ineq=None):
    """Small random instance with n_theta, n_x, n_lambda, n_e <= 3."""
    n_t, n_x = rng.integers(1, 4, size=2)
    if with_ineq is None:
        with_ineq = bool(rng.integers(0, 2))
    models = []
    for _ in range(2):
        n_e, n_l = rng.integers(1, 4, size=2)
        if with_ineq:
            lhs = rng.standard_normal((1, n_x))
            rhs = rng.standard_normal(1)
        else:
            lhs, rhs = np.zeros((0, n_x)), np.zeros(0)
        models.append(StaticModel(
            rng.standard_normal((n_e, n_t)),
            rng.standard_normal((n_e, n_x)),
            rng.standard_normal((n_e, n_l)),
            lhs,
            rhs,
        ))
    return DesignProblem(models[0], models[1], np.eye(n_t))


@pytest.fixture
def scalar():
    return scalar_pair()


@pytest.fixture
def identical():
    return identical_pair()


# ---------------------------------------------------------------- random cone programs

def random_layout(rng):
    from auxsignal.conic import NonnegativeOrthant, SecondOrder

    layout = []
    for _ in range(rng.integers(1, 4)):
        if rng.random() < 0.5:
            layout.append(NonnegativeOrthant(int(rng.integers(1, 4))))
        else:
            layout.append(SecondOrder(int(rng.integers(2, 5))))
    return layout


def interior_point(rng, layout):
    from auxsignal.conic import NonnegativeOrthant

    parts = []
    for cone in layout:
        if isinstance(cone, NonnegativeOrthant):
            parts.append(rng.uniform(0.1, 2.0, cone.dim))
        else:
            tail = rng.standard_normal(cone.dim - 1)
            parts.append(np.concatenate([[np.linalg.norm(tail) + rng.uniform(0.1, 1.0)], tail]))
    return np.concatenate(parts)


def random_feasible_socp(rng):
    """Strictly feasible primal and dual, so the optimum exists; returns (program, y0)."""
    from auxsignal.conic import ConicProgram

    layout = random_layout(rng)
    m = sum(c.dim for c in layout)
    n = int(rng.integers(2, 7))
    p = int(rng.integers(0, n))
    G = rng.standard_normal((m, n))
    E = rng.standard_normal((p, n))
    y0 = rng.standard_normal(n)
    h = G @ y0 + interior_point(rng, layout)
    f = E @ y0
    c = -E.T @ rng.standard_normal(p) - G.T @ interior_point(rng, layout)
    return ConicProgram(c, E, f, G, h, layout), y0


def random_infeasible_socp(rng):
    """G^T z0 = 0 and h^T z0 = -1 for an interior z0: infeasible by Farkas."""
    from auxsignal.conic import ConicProgram

    layout = random_layout(rng)
    m = sum(c.dim for c in layout)
    n = int(rng.integers(1, 5))
    z0 = interior_point(rng, layout)
    G = rng.standard_normal((m, n))
    G -= np.outer(z0, z0 @ G) / (z0 @ z0)
    h = rng.standard_normal(m)
    h -= z0 * (z0 @ h + 1.0) / (z0 @ z0)
    return ConicProgram(rng.standard_normal(n), np.zeros((0, n)), np.zeros(0), G, h, layout)


def cone_distance(v, layout):
    """Independent membership check: how far v is outside K (0 if inside)."""
    from auxsignal.conic import NonnegativeOrthant

    out, start = 0.0, 0
    for cone in layout:
        part = v[start:start + cone.dim]
        start += cone.dim
        if isinstance(cone, NonnegativeOrthant):
            out = max(out, float(np.max(-part, initial=0.0)))
        else:
            out = max(out, float(np.linalg.norm(part[1:]) - part[0]))
    return out


def kkt_report(prog, sol):
    """Residuals of the contract, recomputed from scratch."""
    E, f, G, h, c = prog.eq_lhs, prog.eq_rhs, prog.cone_lhs, prog.cone_rhs, prog.objective
    y, s, u, z = sol.primal, sol.slacks, sol.eq_duals, sol.cone_duals
    scale = 1 + max(np.abs(f).max(initial=0), np.abs(h).max(initial=0))
    obj = c @ y
    return {
        "eq": np.abs(E @ y - f).max(initial=0) / scale,
        "cone_eq": np.abs(G @ y + s - h).max(initial=0) / scale,
        "s_in_cone": cone_distance(s, prog.cone_layout) / scale,
        "z_in_cone": cone_distance(z, prog.cone_layout) / (1 + np.abs(c).max()),
        "stationarity": np.abs(c + E.T @ u + G.T @ z).max() / (1 + np.abs(c).max()),
        "complementarity": abs(s @ z) / (1 + abs(obj)),
    }


def farkas_report(prog, sol):
    u, z = sol.eq_duals, sol.cone_duals
    val = prog.eq_rhs @ u + prog.cone_rhs @ z
    if not val < 0:
        return np.inf
    u, z = u / -val, z / -val
    return max(np.abs(prog.eq_lhs.T @ u + prog.cone_lhs.T @ z).max(), cone_distance(z, prog.cone_layout))


# ---------------------------------------------------------------- shared distance sweep

@pytest.fixture(scope="session")
def case_sweep():
    """Default 24-point reactance sweep over [12, 58]; computed once per session."""
    from auxsignal import case_study_spec, sweep_xf

    return sweep_xf(case_study_spec())
