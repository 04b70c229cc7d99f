import warnings

import numpy as np
import pytest

from auxsignal import (
    CcpConfig,
    DesignStatus,
    Phasor,
    PhasorModelSpec,
    build_models,
    complex_to_matrix,
    design,
    evaluate_sigma,
    feasibility_grid,
    case_study_spec,
    sweep_xf,
    validate,
)
from auxsignal.conic import SolverError
from auxsignal.distance import ERROR, FEASIBLE, INFEASIBLE


def vec(w):
    return np.array([w.real, w.imag])


def test_matrix_of_one_and_j():
    assert complex_to_matrix(1).tolist() == [[1, 0], [0, 1]]
    assert complex_to_matrix(1j).tolist() == [[0, -1], [1, 0]]
    assert complex_to_matrix(Phasor(30, 35)) @ vec(1 + 0j) == pytest.approx([30, 35])


def test_matrix_multiplication_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(100):
        z, w = rng.normal(scale=20, size=2) + 1j * rng.normal(scale=20, size=2)
        assert np.max(np.abs(complex_to_matrix(z) @ vec(w) - vec(z * w))) <= 1e-12 * (1 + abs(z * w))


def test_phasor_checks():
    with pytest.raises(ValueError):
        Phasor(float("nan"), 0.0)
    assert complex(Phasor.from_complex(3 - 4j)) == 3 - 4j
    with pytest.warns(UserWarning, match="negative resistance"):
        PhasorModelSpec(Phasor(-1, 0), Phasor(1, 0), Phasor(1, 0))


def test_case_study_models_shape():
    p = build_models(case_study_spec())
    assert validate(p) == []
    assert (p.n_theta, p.n_x) == (2, 6)
    for m in p.models:
        assert (m.n_eq, m.n_noise, m.n_ineq) == (4, 4, 0)
        assert np.array_equal(m.noise_map, np.eye(4))
    assert np.array_equal(p.normal.theta_map[:2], -complex_to_matrix(30 + 35j))
    assert np.array_equal(p.faulty.theta_map[:2], -complex_to_matrix(26 + 25j))
    assert not p.normal.theta_map[2:].any()
    assert np.array_equal(p.normal.meas_map[2:, 4:], -complex_to_matrix(30 + 35j))
    assert np.array_equal(p.cost, np.eye(2)) and p.noise_bound == 1.0


def test_random_specs_validate():
    rng = np.random.default_rng(4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(20):
            zs = rng.normal(scale=30, size=3) + 1j * rng.normal(scale=30, size=3)
            assert validate(build_models(PhasorModelSpec(*zs))) == []


def test_coincident_hypotheses_inseparable():
    z = Phasor(30, 35)
    spec = PhasorModelSpec(z, z, z)
    p = build_models(spec)
    assert p.normal == p.faulty
    assert design(p, CcpConfig(n_starts=2)).status is DesignStatus.INSEPARABLE


def test_zero_spec_inseparable():
    p = build_models(PhasorModelSpec(0, 0, 0))
    assert evaluate_sigma(p, [0.0, 0.0]).sigma == pytest.approx(0, abs=1e-6)
    assert evaluate_sigma(p, [2.0, -1.0]).sigma == pytest.approx(0, abs=1e-6)
    assert design(p, CcpConfig(n_starts=2)).status is DesignStatus.INSEPARABLE


def test_witness_is_physically_consistent():
    spec = case_study_spec(35.0)
    p = build_models(spec)
    theta = 0.4 + 0.3j
    r = evaluate_sigma(p, vec(theta))
    x = r.x_star
    e_minus, e_plus, i_plus = x[0] + 1j * x[1], x[2] + 1j * x[3], x[4] + 1j * x[5]
    lam0, lam1 = r.lambda0_star, r.lambda1_star
    # normal mode: e_- = z_- theta + noise, e_+ = z_+ i_+ + noise
    assert e_minus == pytest.approx(complex(spec.z_minus) * theta + lam0[0] + 1j * lam0[1], abs=1e-7)
    assert e_plus == pytest.approx(complex(spec.z_plus) * i_plus + lam0[2] + 1j * lam0[3], abs=1e-7)
    # faulty mode: both sequences see the fault path
    assert e_minus == pytest.approx(complex(spec.z_fault) * theta + lam1[0] + 1j * lam1[1], abs=1e-7)
    assert e_plus == pytest.approx(complex(spec.z_fault) * i_plus + lam1[2] + 1j * lam1[3], abs=1e-7)


def test_noiseless_normal_operation():
    spec = case_study_spec()
    m = build_models(spec).normal
    theta, i_plus = 1 - 2j, 0.5 + 0.1j
    e_minus, e_plus = complex(spec.z_minus) * theta, complex(spec.z_plus) * i_plus
    x = np.concatenate([vec(e_minus), vec(e_plus), vec(i_plus)])
    assert m.theta_map @ vec(theta) + m.meas_map @ x == pytest.approx(np.zeros(4), abs=1e-12)


@pytest.fixture(scope="module")
def grids():
    return {xf: feasibility_grid(case_study_spec(xf)) for xf in (25.0, 35.0)}


def test_grid_layout(grids):
    g = grids[25.0]
    assert g.states.shape == (41, 41)
    assert g.re_values[0] == -3 and g.re_values[-1] == 3
    rows = list(g.rows())
    assert len(rows) == 1681
    assert rows[1][:2] == (-3.0, g.im_values[1])
    assert g.n_errors == 0


def test_grid_origin_infeasible(grids):
    for g in grids.values():
        assert g.states[20, 20] == INFEASIBLE


def test_grid_symmetric(grids):
    for g in grids.values():
        assert np.array_equal(g.states, g.states[::-1, ::-1])


def test_harder_fault_has_fewer_separable_signals(grids):
    assert grids[35.0].n_feasible <= grids[25.0].n_feasible
    # closed form: separable iff |theta| >= 2 / |z_- - z_f|
    for xf, g in grids.items():
        radius = 2 / abs(complex(case_study_spec(xf).z_minus) - complex(case_study_spec(xf).z_fault))
        mag = np.hypot(*np.meshgrid(g.re_values, g.im_values, indexing="ij"))
        clear = np.abs(mag - radius) > 1e-6
        assert np.array_equal((g.states == FEASIBLE)[clear], (mag >= radius)[clear])


def test_grid_records_solver_failures(monkeypatch):
    import auxsignal.distance as distance

    def flaky(problem, theta, tol):
        if theta[0] > 0:
            raise SolverError("boom")
        return True

    monkeypatch.setattr(distance, "check_separability", flaky)
    g = feasibility_grid(case_study_spec(), n_re=2, n_im=3)
    assert g.states.tolist() == [[FEASIBLE] * 3, [ERROR] * 3]
    assert g.n_errors == 3


def test_grid_argument_checks():
    with pytest.raises(ValueError):
        feasibility_grid(case_study_spec(), n_re=1)


def test_single_point_sweep():
    rows = sweep_xf(case_study_spec(), 35.0, 35.0, 1)
    assert len(rows) == 1
    direct = design(build_models(case_study_spec(35.0)))
    assert rows[0].xf == 35.0 and rows[0].status == "Separable"
    assert rows[0].theta_abs == pytest.approx(np.linalg.norm(direct.theta_star), rel=1e-12)


def test_sweep_row_order_and_status(case_sweep):
    xs = [r.xf for r in case_sweep]
    assert xs == sorted(xs) and xs[0] == 12 and xs[-1] == 58 and len(xs) == 24
    assert all(r.status == "Separable" for r in case_sweep)


def test_sweep_peaks_near_35(case_sweep):
    mags = np.array([r.theta_abs for r in case_sweep])
    peak = case_sweep[int(np.argmax(mags))].xf
    assert abs(peak - 35) <= 2
    assert mags[0] < mags.max() and mags[-1] < mags.max()


def test_sweep_unimodal(case_sweep):
    mags = np.array([r.theta_abs for r in case_sweep])
    k = int(np.argmax(mags))
    for i in range(1, len(mags) - 1):
        if abs(i - k) <= 1:
            continue
        assert mags[i] <= 1.05 * 0.5 * (mags[i - 1] + mags[i + 1])


def test_sweep_matches_closed_form(case_sweep):
    for r in case_sweep:
        spec = case_study_spec(r.xf)
        expect = 2 / abs(complex(spec.z_minus) - complex(spec.z_fault))
        assert r.theta_abs == pytest.approx(expect, rel=1e-3)
