import numpy as np
import pytest

import kalzak as kz
from kalzak.paths import factorization_check
from kalzak.riccati import completed_square_gap

# fixed point of w' = 2w - w^2 + 1 on the stable branch
W_LIMIT = 1.0 + np.sqrt(2.0)
SIGMA_LIMIT = np.sqrt(2.0) - 1.0


def test_scalar_weight_reaches_its_fixed_point(classic):
    path = kz.simulate_paths(classic, 8.0, 0.001, seed=101)[0]
    run = kz.run_filter(classic, path)
    assert run.W[-1, 0, 0] == pytest.approx(W_LIMIT, abs=1e-6)
    assert run.cov()[-1, 0, 0] == pytest.approx(SIGMA_LIMIT, abs=1e-6)


def test_weight_matrix_ignores_the_observation_path(classic):
    """For constant coefficients the W equation is a plain ODE."""
    r1 = kz.run_filter(classic, kz.simulate_paths(classic, 0.5, 0.001, seed=1)[0])
    r2 = kz.run_filter(classic, kz.simulate_paths(classic, 0.5, 0.001, seed=2)[0])
    assert np.allclose(r1.W, r2.W, atol=1e-13)
    assert not np.allclose(r1.V, r2.V)


def test_weight_stays_symmetric_positive(classic_filter):
    run = classic_filter
    assert run.max_asym < 1e-10
    assert run.min_eig.min() > 0.0


def test_mean_solves_the_weighted_linear_system(classic_filter):
    run = classic_filter
    xbar = run.xbar()
    for k in (0, 137, run.n_steps):
        assert np.allclose(run.W[k] @ xbar[k], -run.V[k])
    assert np.allclose(run.cov()[0], np.linalg.inv(run.W[0]))


def test_quadratic_form_evaluation():
    form = kz.QuadraticForm(W=np.array([[2.0]]), V=np.array([3.0]), U=1.0)
    x = np.array([[0.5]])
    val, grad, eta = kz.eval_Q(form, x)
    # q(x) = x^2 + 3x + 1 here
    assert val[0] == pytest.approx(2.75)
    assert grad[0, 0] == pytest.approx(4.0)
    assert eta[0] == pytest.approx(np.exp(-2.75))
    mean, cov = kz.QuadraticForm.isotropic(2).mean_cov()
    assert np.allclose(mean, 0.0) and np.allclose(cov, np.eye(2))


def test_gaussian_weights_recover_mean_and_cov():
    W = np.array([[4.0]])
    V = np.array([-2.0])
    mean, cov = kz.QuadraticForm(W=W, V=V, U=0.0).mean_cov()
    assert mean[0] == pytest.approx(0.5)
    assert cov[0, 0] == pytest.approx(0.25)


def test_q_sde_residual_shrinks_with_the_step():
    spec = kz.scalar_correlated(0.5)
    fine = kz.simulate_paths(spec, 0.5, 1e-3, seed=77)[0]
    res = []
    for factor in (4, 1):
        path = kz.coarsen_path(fine, factor) if factor > 1 else fine
        run = kz.run_filter(spec, path)
        worst = max(np.max(np.abs(kz.q_sde_residual(spec, path, run, x)))
                    for x in (np.array([0.3]), np.array([-1.1])))
        res.append(worst)
    assert res[1] < res[0] / 2.0
    assert res[1] < 1e-3


def test_completed_square_gap_is_a_root_dt_fluctuation(classic):
    gaps = []
    for dt in (4e-3, 1e-3):
        path = kz.simulate_paths(classic, 1.0, dt, seed=55)[0]
        run = kz.run_filter(classic, path)
        g = completed_square_gap(classic, path, run, np.array([[0.4], [-0.9]]))
        gaps.append(np.max(np.abs(g)))
    assert gaps[1] < gaps[0]
    assert gaps[1] < 5.0 * np.sqrt(1.0 * 1e-3)


def test_factorization_identity_along_a_path(classic, classic_path, classic_filter):
    chk = factorization_check(classic, classic_path, classic_filter.W,
                              classic_filter.V)
    assert chk.max_gap < 1e-6


def test_filter_accepts_a_custom_initial_form(classic, classic_path):
    q0 = kz.QuadraticForm(W=np.array([[2.5]]), V=np.array([0.3]), U=0.0)
    run = kz.run_filter(classic, classic_path, q0=q0)
    assert run.W[0, 0, 0] == pytest.approx(2.5)
    assert run.V[0, 0] == pytest.approx(0.3)
    # different start, same attractor (transient ~ exp(-2 sqrt(2) t))
    assert run.W[-1, 0, 0] == pytest.approx(W_LIMIT, abs=1e-2)
