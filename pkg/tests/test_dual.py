import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from auxsignal import (
    bilinear_identity,
    build_ccp_subproblem,
    build_fixed_theta_program,
    check_separability,
    eigen_split,
    evaluate_sigma,
    linearize_convex_part,
    solve,
)
from auxsignal.conic import ConicStatus
from auxsignal.dual import unpack_dual
from conftest import random_problem

floats = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_eigen_split_scalar():
    s = eigen_split([[1.0]])
    assert s.psi_matrix.tolist() == [[0.0, 1.0], [1.0, 0.0]]
    assert s.psi_max == pytest.approx(1.0)


def test_eigen_split_zero():
    assert eigen_split(np.zeros((2, 3))).psi_max == pytest.approx(0.0, abs=1e-15)


def test_eigen_split_diagonal():
    s = eigen_split([[3.0, 0.0], [0.0, 4.0]])
    assert s.psi_max == pytest.approx(4.0)
    # spectrum of the 4x4 block matrix is +-3, +-4
    assert np.linalg.eigvalsh(s.psi_matrix) == pytest.approx([-4, -3, 3, 4])


@given(arrays(float, st.tuples(st.integers(1, 4), st.integers(1, 4)), elements=floats))
def test_psi_max_is_largest_singular_value(theta_map):
    s = eigen_split(theta_map)
    sv = np.linalg.svd(theta_map, compute_uv=False).max()
    assert s.psi_max == pytest.approx(sv, rel=1e-9, abs=1e-12)
    n = s.psi_matrix.shape[0]
    assert np.linalg.eigvalsh(s.psi_matrix + s.psi_max * np.eye(n)).min() >= -1e-9 * max(s.psi_max, 1)


def test_bilinear_identity_example():
    concave, convex = bilinear_identity(eigen_split([[1.0]]), [2.0], [3.0])
    assert concave == pytest.approx(-0.25)
    assert convex == pytest.approx(6.25)


def test_bilinear_identity_zero_beta():
    theta = np.array([1.0, -2.0])
    s = eigen_split([[1.0, 2.0], [0.5, 0.0]])
    concave, convex = bilinear_identity(s, [0.0, 0.0], theta)
    assert concave == pytest.approx(-0.25 * s.psi_max * theta @ theta)
    assert convex == pytest.approx(0.25 * s.psi_max * theta @ theta)
    assert bilinear_identity(s, [0.0, 0.0], [0.0, 0.0]) == (0.0, 0.0)


@st.composite
def triples(draw):
    n_e, n_t = draw(st.integers(1, 4)), draw(st.integers(1, 4))
    Th = draw(arrays(float, (n_e, n_t), elements=floats))
    beta = draw(arrays(float, n_e, elements=floats))
    theta = draw(arrays(float, n_t, elements=floats))
    return Th, beta, theta


@given(triples())
def test_parts_sum_to_bilinear_term(t):
    Th, beta, theta = t
    concave, convex = bilinear_identity(eigen_split(Th), beta, theta)
    target = beta @ Th @ theta
    scale = 1 + abs(target) + abs(concave) + abs(convex)
    assert abs(concave + convex - target) <= 1e-9 * scale
    assert concave <= 1e-9 * scale and convex >= -1e-9 * scale


def test_linearization_example():
    s = eigen_split([[1.0]])
    J = linearize_convex_part(s, [2.0], [3.0])
    # M = [[1, 1], [1, 1]], M vz = (5, 5): J(1, 1) = 25/4 + 1/2 (5, 5).(-1, -2)
    assert J([1.0], [1.0]) == pytest.approx(6.25 - 7.5)
    assert J([1.0], [1.0]) <= bilinear_identity(s, [1.0], [1.0])[1]
    assert J([2.0], [3.0]) == pytest.approx(6.25)


def test_linearization_zero_anchor():
    J = linearize_convex_part(eigen_split([[1.0, -2.0]]), [0.0], [0.0, 0.0])
    assert J([5.0], [1.0, 2.0]) == 0.0


@settings(max_examples=60)
@given(triples(), st.integers(0, 2**32 - 1))
def test_tangent_minorizes_convex_part(t, seed):
    Th, beta_z, theta_z = t
    s = eigen_split(Th)
    J = linearize_convex_part(s, beta_z, theta_z)
    at_anchor = bilinear_identity(s, beta_z, theta_z)[1]
    assert J(beta_z, theta_z) == pytest.approx(at_anchor, rel=1e-10, abs=1e-10)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        b = rng.normal(scale=10, size=beta_z.shape)
        th = rng.normal(scale=10, size=theta_z.shape)
        convex = bilinear_identity(s, b, th)[1]
        assert J(b, th) <= convex + 1e-10 * (1 + abs(convex))


@pytest.mark.parametrize("t, expected", [(2.0, True), (0.5, False), (0.0, False)])
def test_fixed_theta_feasibility_scalar(scalar, t, expected):
    assert check_separability(scalar, [t]) is expected


def test_identical_models_not_separable(identical):
    assert check_separability(identical, [0.0]) is False
    assert check_separability(identical, [3.0]) is False


def test_fixed_theta_points_are_dual_feasible():
    rng = np.random.default_rng(9)
    seen = 0
    for _ in range(30):
        p = random_problem(rng)
        prog = build_fixed_theta_program(p, 3 * rng.standard_normal(p.n_theta))
        sol = solve(prog)
        if sol.status is ConicStatus.OPTIMAL:
            assert unpack_dual(prog, sol.primal).violations(p) == []
            seen += 1
    assert seen >= 5


def test_duality_agrees_with_sigma():
    rng = np.random.default_rng(17)
    compared = 0
    for _ in range(20):
        p = random_problem(rng)
        for _ in range(3):
            theta = rng.uniform(0.2, 2.0) * rng.standard_normal(p.n_theta)
            sigma = evaluate_sigma(p, theta).sigma
            if abs(sigma - 1) <= 1e-6:
                continue
            assert check_separability(p, theta) is (sigma >= 1)
            compared += 1
    assert compared == 60


def _sub(problem, theta_z, beta_z, gamma):
    prog = build_ccp_subproblem(problem, theta_z, beta_z, gamma)
    sol = solve(prog, 1e-6)
    assert sol.ok, sol.message
    return prog, sol


def test_subproblem_anchor_feasible(scalar):
    # (theta, beta0, beta1) = (1, 1, -1) with alpha = 1/2 meets the bilinear constraint exactly
    prog, sol = _sub(scalar, [1.0], [np.array([1.0]), np.array([-1.0])], 10.0)
    assert sol.objective_value <= 1.0 + 1e-6


def test_subproblem_penalty_drives_slack_to_zero(scalar):
    slacks = []
    for gamma in (0.1, 1e4):
        prog, sol = _sub(scalar, [0.8], [np.array([0.8]), np.array([-0.8])], gamma)
        slacks.append(prog.unpack(sol.primal, "xi")[0])
    assert slacks[0] > 0.1
    assert slacks[1] <= 1e-6


def test_subproblem_identical_models_keep_slack(identical):
    for gamma in (1.0, 100.0, 1e4):
        prog, sol = _sub(identical, [1.0], [np.array([0.5]), np.array([-0.5])], gamma)
        assert prog.unpack(sol.primal, "xi")[0] >= 1 - 1e-6


def test_subproblem_argument_checks(scalar):
    with pytest.raises(ValueError):
        build_ccp_subproblem(scalar, [1.0], [np.zeros(1), np.zeros(1)], 0.0)
    with pytest.raises(ValueError):
        build_ccp_subproblem(scalar, [1.0, 2.0], [np.zeros(1), np.zeros(1)], 1.0)
    with pytest.raises(ValueError):
        build_ccp_subproblem(scalar, [1.0], [np.zeros(2), np.zeros(1)], 1.0)
