import numpy as np
import pytest

import kalzak as kz
from kalzak.models import ModelValidationError, affine_clipped, from_callable


def test_classic_scalar_derived_fields(classic):
    f = kz.derived_at(classic, 0.0, np.zeros(1))
    assert f.a[0, 0] == pytest.approx(0.5)
    assert f.alpha[0, 0] == pytest.approx(0.0)
    assert f.ahat[0, 0] == pytest.approx(0.5)
    assert f.b_slope[0, 0] == pytest.approx(-1.0)
    assert f.h_slope[0, 0] == pytest.approx(1.0)
    assert f.sigma[0, 0] == 0.0
    assert f.Psi[0, 0] == pytest.approx(1.0)


def test_silent_observation_has_no_observation_drift():
    spec = kz.silent_observation(rho=0.3)
    f = kz.derived_at(spec, 0.5, np.ones(1))
    assert np.all(f.h_slope == 0.0)
    assert np.all(f.h_level == 0.0)
    # the correlation channel survives even with a flat observation drift
    assert abs(f.sigma[0, 0]) == pytest.approx(0.3)


def test_correlated_sigma_tracks_rho():
    vals = [kz.derived_at(kz.scalar_correlated(r), 0.0, np.zeros(1)).sigma[0, 0]
            for r in (0.0, 0.3, 0.8)]
    assert vals == pytest.approx([0.0, 0.3, 0.8])


def test_ahat_stays_positive_definite():
    # a - alpha must stay elliptic or the densities lose their backbone
    for rho in (0.0, 0.5, 0.9):
        f = kz.derived_at(kz.scalar_correlated(rho), 0.0, np.zeros(1))
        assert np.linalg.eigvalsh(f.ahat).min() > 0


def test_fields_along_evaluates_at_given_points():
    spec = kz.random_bounded(seed=4, y_dependent=True)
    path = kz.simulate_paths(spec, 0.05, 0.01, seed=7)[0]
    fields = kz.fields_along(spec, path.times[:-1], path.y[:-1])
    n = len(path.times) - 1
    assert fields.a.shape[0] == n
    for k in (0, n // 2, n - 1):
        f = kz.derived_at(spec, float(path.times[k]), path.y[k])
        assert np.allclose(fields.a[k], f.a)
        assert np.allclose(fields.h_slope[k], f.h_slope)
        assert np.allclose(fields.b_level[k], f.b_level)


def test_constant_coefficient_is_marked_constant():
    c = kz.constant([[1.0, 2.0]])
    assert c.is_constant
    out = c(0.0, np.zeros(1))
    assert out.shape == (1, 2)
    assert np.array_equal(out, c(3.0, np.ones(1)))


def test_affine_clipped_saturates_the_driver():
    c = affine_clipped(0.0, 2.0, bound=0.5, direction=np.array([1.0]))
    # inside the clip the read-out is linear in y
    assert c(0.0, np.array([0.2])) == pytest.approx(0.4)
    # outside it saturates at slope * bound
    assert c(0.0, np.array([10.0])) == pytest.approx(1.0)
    assert c(0.0, np.array([-10.0])) == pytest.approx(-1.0)


def test_from_callable_checks_shape():
    c = from_callable(lambda t, y: np.zeros((2, 2)), shape=(2, 2))
    assert c(0.0, np.zeros(1)).shape == (2, 2)
    bad = from_callable(lambda t, y: np.zeros(3), shape=(2, 2))
    with pytest.raises(ModelValidationError):
        bad(0.0, np.zeros(1))


def test_wrong_theta_shape_is_named():
    with pytest.raises(ModelValidationError, match="theta has shape"):
        kz.ModelSpec(d=1, dy=1, dw=2,
                     theta=kz.constant([[1.0]]),
                     Theta=kz.constant([[0.0, 1.0]]),
                     bdot=kz.constant([[0.0]]), b0=kz.constant([0.0]),
                     Bdot=kz.constant([[1.0]]), B0=kz.constant([0.0]))


def test_singular_observation_noise_rejected():
    spec = kz.ModelSpec(d=1, dy=1, dw=2,
                        theta=kz.constant([[1.0, 0.0]]),
                        Theta=kz.constant([[0.0, 0.0]]),
                        bdot=kz.constant([[0.0]]), b0=kz.constant([0.0]),
                        Bdot=kz.constant([[1.0]]), B0=kz.constant([0.0]))
    with pytest.raises(ModelValidationError, match="singular"):
        kz.derived_at(spec, 0.0, np.zeros(1))


def test_random_bounded_is_reproducible():
    a = kz.random_bounded(seed=11, y_dependent=True)
    b = kz.random_bounded(seed=11, y_dependent=True)
    y = np.array([0.7])
    fa = kz.derived_at(a, 0.3, y)
    fb = kz.derived_at(b, 0.3, y)
    assert np.array_equal(fa.a, fb.a)
    assert np.array_equal(fa.h_slope, fb.h_slope)
    # and a different seed gives a different model
    fc = kz.derived_at(kz.random_bounded(seed=12, y_dependent=True), 0.3, y)
    assert not np.allclose(fa.h_slope, fc.h_slope)
