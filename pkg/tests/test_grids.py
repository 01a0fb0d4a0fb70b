import numpy as np
import pytest

import kalzak as kz
from kalzak.errors import MassError
from kalzak.grids import integral, moments, normalize


def test_axis_is_symmetric_and_hits_zero():
    ax = kz.make_axis(4.0, 0.05)
    assert ax[0] == -4.0 and ax[-1] == 4.0
    assert len(ax) % 2 == 1
    assert 0.0 in ax
    assert np.allclose(np.diff(ax), 0.05)


def test_gaussian_density_moments_roundtrip():
    g = kz.init_density(1, 8.0, 0.02, kind="gauss", mean=[0.7], cov=[[0.36]])
    mass, mean, cov = moments(g)
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert mean[0] == pytest.approx(0.7, abs=1e-6)
    assert cov[0, 0] == pytest.approx(0.36, abs=1e-5)
    assert integral(g) == pytest.approx(1.0, abs=1e-8)


def test_exp_neg_q_matches_the_gaussian_kind():
    # exp(-q) with isotropic q is the standard normal up to mass
    q = kz.QuadraticForm.isotropic(1)
    a = kz.init_density(1, 8.0, 0.05, kind="exp_neg_q", q=q)
    b = kz.init_density(1, 8.0, 0.05, kind="gauss", mean=[0.0], cov=[[1.0]])
    ra, _ = normalize(a)
    assert np.max(np.abs(ra.values - b.values)) < 1e-10


def test_two_dimensional_moments():
    mean = [0.5, -0.25]
    cov = [[0.5, 0.1], [0.1, 0.3]]
    g = kz.init_density(2, 6.0, 0.05, kind="gauss", mean=mean, cov=cov)
    _, m, c = moments(g)
    assert np.allclose(m, mean, atol=1e-4)
    assert np.allclose(c, cov, atol=1e-4)


def test_box_too_small_is_refused():
    with pytest.raises(MassError, match="outside the box"):
        kz.init_density(1, 2.0, 0.05, kind="gauss", mean=[0.0], cov=[[1.0]])


def test_custom_function_kind():
    g = kz.init_density(1, 3.0, 0.01, kind="custom",
                        fn=lambda x: np.clip(1.0 - np.abs(x[..., 0]), 0.0, None))
    assert g.values.max() == pytest.approx(1.0)
    # triangle bump has unit area
    assert integral(g) == pytest.approx(1.0, abs=1e-3)


def test_normalize_reports_the_old_mass():
    g = kz.init_density(1, 6.0, 0.05, kind="gauss", mean=[0.0], cov=[[1.0]])
    g.values *= 3.0
    gn, mass = normalize(g)
    assert mass == pytest.approx(3.0, abs=1e-6)
    assert integral(gn) == pytest.approx(1.0, abs=1e-12)


def test_box_halfwidth_tracks_the_filter_spread(classic_filter):
    tight = kz.box_halfwidth(classic_filter, k_sigma=4.0)
    wide = kz.box_halfwidth(classic_filter, k_sigma=8.0)
    assert wide > tight > 0.0
    # the box has to cover the conditional mean at every time
    assert wide >= np.max(np.abs(classic_filter.xbar()))
