import numpy as np
import pytest

import kalzak as kz


def test_particle_mean_tracks_the_filter(classic):
    path = kz.simulate_paths(classic, 0.5, 0.002, seed=21)[0]
    frun = kz.run_filter(classic, path)
    rows = kz.compare_filters(classic, path, frun, 4000, 99)
    assert len(rows) == 2
    for row in rows:
        assert row.stderr[0] > 0.0
        assert row.within, f"z = {row.z:.2f} at t = {row.t}"


def test_same_seed_reproduces_the_ensemble(classic):
    path = kz.simulate_paths(classic, 0.2, 0.002, seed=22)[0]
    a = kz.particle_filter(classic, path, 1000, 7)
    b = kz.particle_filter(classic, path, 1000, 7)
    assert np.array_equal(a.mean, b.mean)
    assert a.resample_steps == b.resample_steps
    c = kz.particle_filter(classic, path, 1000, 8)
    assert not np.array_equal(a.mean, c.mean)


def test_effective_sample_size_bounds(classic):
    path = kz.simulate_paths(classic, 0.2, 0.002, seed=23)[0]
    run = kz.particle_filter(classic, path, 500, 5)
    assert np.all(run.ess >= 1.0)
    assert np.all(run.ess <= 500.0 + 1e-9)


def test_flat_weights_without_observation_drift():
    """h = 0 produces no information, so the weights never move."""
    spec = kz.silent_observation(rho=0.0)
    path = kz.simulate_paths(spec, 0.2, 0.01, seed=13)[0]
    run = kz.particle_filter(spec, path, 500, 17)
    assert run.ess.min() == pytest.approx(500.0)
    assert run.n_resamples == 0


def test_aggressive_threshold_forces_resampling(classic):
    path = kz.simulate_paths(classic, 0.2, 0.002, seed=24)[0]
    lazy = kz.particle_filter(classic, path, 400, 9, resample_threshold=0.05)
    eager = kz.particle_filter(classic, path, 400, 9, resample_threshold=0.999)
    assert eager.n_resamples > lazy.n_resamples


def test_correlated_noise_is_refused():
    spec = kz.scalar_correlated(0.5)
    path = kz.simulate_paths(spec, 0.05, 0.01, seed=2)[0]
    with pytest.raises(ValueError, match="independent"):
        kz.particle_filter(spec, path, 10, 1)


def test_checkpoints_store_the_requested_steps(classic):
    path = kz.simulate_paths(classic, 0.2, 0.002, seed=25)[0]
    run = kz.particle_filter(classic, path, 200, 3, checkpoint_steps=[50, 100])
    assert set(run.checkpoints) == {50, 100}
    X, w = run.checkpoints[50]
    assert X.shape[0] == 200
    assert w.shape == (200,)
    assert w.sum() == pytest.approx(1.0)
