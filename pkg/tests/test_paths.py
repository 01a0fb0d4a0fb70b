import numpy as np
import pytest

import kalzak as kz


def test_shapes_and_initial_conditions(classic):
    path = kz.simulate_paths(classic, 0.1, 0.01, seed=3)[0]
    # the joint state carries signal and observation columns
    assert path.z.shape == (11, 2)
    assert path.ytilde.shape == (11, 1)
    assert path.dW.shape == (10, 2)
    assert np.all(path.ytilde[0] == 0.0)
    assert path.seed == 3 and path.path_index == 0


def test_same_seed_same_path(classic):
    a = kz.simulate_paths(classic, 0.2, 0.01, seed=5)[0]
    b = kz.simulate_paths(classic, 0.2, 0.01, seed=5)[0]
    assert np.array_equal(a.z, b.z)
    assert np.array_equal(a.dW, b.dW)


def test_paths_in_a_bundle_differ(classic):
    paths = kz.simulate_paths(classic, 0.1, 0.01, n_paths=3, seed=5)
    assert [p.path_index for p in paths] == [0, 1, 2]
    assert not np.array_equal(paths[0].dW, paths[1].dW)
    # bundle draws are stable against the bundle size
    again = kz.simulate_paths(classic, 0.1, 0.01, n_paths=2, seed=5)
    assert np.array_equal(paths[1].z, again[1].z)


def test_zero_noise_reduces_to_the_drift_ode(classic):
    dW = np.zeros((100, 2))
    z0 = np.array([2.0, 0.0])
    path = kz.simulate_paths(classic, 1.0, 0.01, z0=z0, dW=dW)[0]
    # signal drift is -x, so the deterministic flow is exponential decay
    decay = 2.0 * np.exp(-path.times)
    assert np.max(np.abs(path.x[:, 0] - decay)) < 2e-2


def test_coarsen_blocks_sum_increments(classic):
    fine = kz.simulate_paths(classic, 0.2, 0.005, seed=9)[0]
    coarse = kz.coarsen_path(fine, 4)
    assert np.allclose(coarse.times, fine.times[::4])
    assert np.allclose(coarse.ytilde, fine.ytilde[::4])
    blocks = fine.dW.reshape(-1, 4, fine.dW.shape[1]).sum(axis=1)
    assert np.allclose(coarse.dW, blocks)
    arr = np.arange(12.0).reshape(12, 1)
    assert np.allclose(kz.coarsen_increments(arr, 3)[:, 0], [3.0, 12.0, 21.0, 30.0])


def test_coarsen_rejects_non_dividing_factor(classic):
    path = kz.simulate_paths(classic, 0.1, 0.01, seed=1)[0]
    with pytest.raises(ValueError):
        kz.coarsen_path(path, 3)


def test_exponential_martingale_basics(classic):
    path = kz.simulate_paths(classic, 0.1, 0.01, seed=3)[0]
    flat = kz.exponential_martingale(path, np.zeros((10, 1)))
    assert np.allclose(flat, 1.0)
    xi = 0.7 * np.ones((10, 1))
    m = kz.exponential_martingale(path, xi)
    lg = kz.exponential_martingale(path, xi, log=True)
    assert np.allclose(np.exp(lg), m)
    with pytest.raises(ValueError):
        kz.exponential_martingale(path, np.ones(3))


def test_exponential_martingale_has_unit_mean(classic):
    paths = kz.simulate_paths(classic, 0.25, 0.005, n_paths=3000, seed=31)
    xi = 0.8 * np.ones((50, 1))
    vals = np.array([kz.exponential_martingale(p, xi)[-1] for p in paths])
    se = vals.std(ddof=1) / np.sqrt(len(vals))
    assert abs(vals.mean() - 1.0) < 4.0 * se


def test_blowup_is_recorded_not_raised():
    spec = kz.ModelSpec(d=1, dy=1, dw=2,
                        theta=kz.constant([[1.0, 0.0]]),
                        Theta=kz.constant([[0.0, 1.0]]),
                        bdot=kz.constant([[4.0]]), b0=kz.constant([0.0]),
                        Bdot=kz.constant([[1.0]]), B0=kz.constant([0.0]))
    path = kz.simulate_paths(spec, 4.0, 0.01, seed=1,
                             z0=np.array([5.0, 0.0]), bound=100.0)[0]
    assert path.blowup_step is not None
    k = path.blowup_step
    assert np.isfinite(path.z[:k]).all()
