import numpy as np
import pytest

import kalzak as kz
from kalzak.models import ModelValidationError
from kalzak.testbed import (GeneralCoefficients, apriori_ratio,
                            heat_coefficients, heat_l2_norm_sq,
                            noisy_heat_coefficients, product_rule_residual,
                            run_general, weak_residual)

AXIS = kz.make_axis(3.0, 0.05)
BUMP = np.exp(-AXIS ** 2)


def test_all_zero_coefficients_freeze_the_state():
    co = GeneralCoefficients(a=0.0)
    run = run_general(co, BUMP.copy(), AXIS, T=0.1, dt=0.01, seed=0,
                      validate=False)
    assert np.allclose(run.series[-1], run.series[0])


def test_heat_flow_matches_the_closed_form_norm():
    ax = kz.make_axis(8.0, 0.05)
    u0 = np.exp(-0.5 * ax ** 2) / np.sqrt(2.0 * np.pi)
    run = run_general(heat_coefficients(), u0, ax, T=1.0, dt=0.005, seed=1)
    got = float(np.sum(run.series[-1] ** 2) * 0.05)
    assert got == pytest.approx(heat_l2_norm_sq(1.0), rel=1e-3)
    assert heat_l2_norm_sq(1.0) == pytest.approx(1.0 / (2.0 * np.sqrt(2.0 * np.pi)))


def test_linearity_under_shared_noise(rng):
    co = heat_coefficients()
    u0a = BUMP
    u0b = np.exp(-(AXIS - 1.0) ** 2 / 0.5)
    dW = rng.normal(0.0, np.sqrt(0.01), size=(20, 1))
    ra = run_general(co, u0a, AXIS, dt=0.01, dW=dW)
    rb = run_general(co, u0b, AXIS, dt=0.01, dW=dW)
    rab = run_general(co, u0a + u0b, AXIS, dt=0.01, dW=dW)
    assert np.max(np.abs(rab.series - ra.series - rb.series)) < 1e-12


def test_affine_superposition_with_sources(rng):
    # free terms shift the flow, so differences superpose instead
    co = noisy_heat_coefficients()
    u0a = BUMP
    u0b = np.exp(-(AXIS - 1.0) ** 2 / 0.5)
    dW = rng.normal(0.0, np.sqrt(0.01), size=(20, 1))
    runs = [run_general(co, u, AXIS, dt=0.01, dW=dW)
            for u in (u0a, u0b, u0a + u0b, np.zeros_like(AXIS))]
    gap = runs[2].series + runs[3].series - runs[0].series - runs[1].series
    assert np.max(np.abs(gap)) < 1e-12


def test_weak_residual_shrinks_under_refinement():
    co = noisy_heat_coefficients()
    phi = np.clip(1.0 - (AXIS / 2.0) ** 2, 0.0, None) ** 2
    coarse = run_general(co, BUMP, AXIS, T=0.2, dt=0.02, seed=42)
    fine = run_general(co, BUMP, AXIS, T=0.2, dt=0.0025, seed=42)
    wc = np.max(np.abs(weak_residual(coarse, phi)))
    wf = np.max(np.abs(weak_residual(fine, phi)))
    assert wf < wc / 3.0


def test_product_rule_needs_the_quadratic_cross_term():
    co = noisy_heat_coefficients()
    phi = np.clip(1.0 - (AXIS / 2.0) ** 2, 0.0, None) ** 2
    ra = run_general(co, BUMP, AXIS, T=0.2, dt=0.0025, seed=42)
    rb = run_general(co, np.exp(-(AXIS - 1.0) ** 2 / 0.5), AXIS,
                     T=0.2, dt=0.0025, seed=42)
    on = np.max(np.abs(product_rule_residual(ra, rb, phi, ito_correction=True)))
    off = np.max(np.abs(product_rule_residual(ra, rb, phi, ito_correction=False)))
    assert on < off


def test_disjoint_support_pairing_stays_flat():
    u0 = np.exp(-((AXIS + 2.0) / 0.2) ** 2)
    phi = np.clip(1.0 - ((AXIS - 2.0) / 0.5) ** 2, 0.0, None) ** 2
    run = run_general(heat_coefficients(), u0, AXIS, T=0.05, dt=0.005, seed=3)
    pairing = (run.series * phi).sum(axis=1) * 0.05
    assert np.max(np.abs(pairing)) < 1e-12


def test_apriori_bound_holds_for_both_presets():
    ax = kz.make_axis(8.0, 0.05)
    u0 = np.exp(-0.5 * ax ** 2) / np.sqrt(2.0 * np.pi)
    for co in (heat_coefficients(), noisy_heat_coefficients()):
        run = run_general(co, u0, ax, T=0.5, dt=0.005, seed=4)
        rep = apriori_ratio(run)
        assert rep.ratio <= 1.0, co.label


def test_parabolicity_margin_is_enforced():
    bad = GeneralCoefficients(a=0.5, sigma=1.2)
    with pytest.raises(ModelValidationError, match="margin"):
        run_general(bad, BUMP, AXIS, T=0.05, dt=0.01, seed=0)


def test_channel_broadcasting_rules():
    two = GeneralCoefficients(a=0.5, sigma=lambda t, x: 0.1 * np.ones((2, 1)),
                              g=0.0, n_channels=2)
    run = run_general(two, BUMP, AXIS, T=0.02, dt=0.01, seed=5)
    assert run.dW.shape == (2, 2)
    fields = two.at(0.0, AXIS)
    assert fields.sigma.shape == (2, len(AXIS))
    bad = GeneralCoefficients(a=0.5, sigma=lambda t, x: np.ones(3), n_channels=2)
    with pytest.raises(ValueError):
        bad.at(0.0, AXIS)
