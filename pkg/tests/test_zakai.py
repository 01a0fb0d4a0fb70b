import numpy as np
import pytest

import kalzak as kz
from kalzak.errors import MassError, NumericError
from kalzak.zakai import (apply_lambdastar, apply_lstar, closed_form_snapshots,
                          l1_distance, normalize_stack, reduced_step,
                          zakai_step)

PHI0 = 1.0 / np.sqrt(2.0 * np.pi)


@pytest.fixture(scope="module")
def std_normal_grid():
    return kz.init_density(1, 6.0, 0.01, kind="gauss", mean=[0.0], cov=[[1.0]])


def test_second_order_operator_on_the_normal_density(std_normal_grid):
    """Pure diffusion, a = 1/2: the operator is half the second derivative.

    For the standard normal phi'' = (x^2 - 1) phi, so at the origin the
    exact value is -phi(0)/2.
    """
    out = apply_lstar(std_normal_grid, [[0.5]], [[0.0]], [0.0])
    i0 = len(std_normal_grid.axes[0]) // 2
    assert out[i0] == pytest.approx(-0.5 * PHI0, rel=1e-4)


def test_second_order_operator_kills_constants_inside():
    g = kz.init_density(1, 4.0, 0.05, kind="custom", fn=lambda x: np.ones(len(x)))
    out = apply_lstar(g, [[0.5]], [[0.0]], [0.0])
    interior = out[2:-2]
    assert np.max(np.abs(interior)) < 1e-12


def test_stochastic_operator_without_correlation(std_normal_grid):
    # sigma = 0 and h(x) = x: the channel is plain multiplication
    out = apply_lambdastar(std_normal_grid, [[0.0]], [[1.0]], [0.0])
    ax = std_normal_grid.axes[0]
    i1 = int(np.argmin(np.abs(ax - 1.0)))
    expect = std_normal_grid.values[i1]
    assert expect == pytest.approx(np.exp(-0.5) * PHI0, rel=1e-12)
    assert out[0][i1] == pytest.approx(expect, rel=1e-12)


def test_stochastic_operator_correlation_term(std_normal_grid):
    # h = 0 keeps only -sigma D u, again exact for the normal at x = 1
    out = apply_lambdastar(std_normal_grid, [[0.4]], [[0.0]], [0.0])
    ax = std_normal_grid.axes[0]
    i1 = int(np.argmin(np.abs(ax - 1.0)))
    # D phi = -x phi, so -sigma D phi = sigma phi at x = 1
    assert out[0][i1] == pytest.approx(0.4 * np.exp(-0.5) * PHI0, rel=1e-3)


def test_one_step_keeps_boundary_pinned():
    ax = kz.make_axis(3.0, 0.05)
    u = np.exp(-ax ** 2)
    u[0] = u[-1] = 0.0
    out = zakai_step(u, ax, 0.05, 1e-3, 0.02, 0.5, -1.0, 0.0, 0.0, 1.0, 0.0)
    assert out[0] == 0.0 and out[-1] == 0.0
    assert out.shape == u.shape
    # small step keeps the profile close
    assert np.max(np.abs(out - u)) < 0.05


def test_reduced_step_matches_zero_drift_heat():
    """With no stochastic input the reduced step is an implicit heat step."""
    ax = kz.make_axis(3.0, 0.05)
    u = np.exp(-ax ** 2)
    u[0] = u[-1] = 0.0
    a = reduced_step(u, ax, 0.05, 1e-3, 0.0, 0.5, 0.0, 0.0, 0.0)
    b = zakai_step(u, ax, 0.05, 1e-3, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0)
    assert np.allclose(a, b, atol=1e-12)


def test_direct_solution_tracks_the_closed_form(classic, classic_path, classic_filter):
    run = kz.run_zakai(classic, classic_path, h=0.1, filter_run=classic_filter)
    closed = closed_form_snapshots(classic_filter, run.axes, run.snapshot_steps)
    gap = l1_distance(normalize_stack(run.series, run.h, 1), closed, run.h, 1)
    assert gap.max() < 5e-2
    assert run.mass.min() > 0.0


def test_reduced_and_direct_agree_after_reconstruction(classic, classic_path, classic_filter):
    direct = kz.run_zakai(classic, classic_path, h=0.1, filter_run=classic_filter)
    reduced = kz.run_reduced(classic, classic_path, filter_run=classic_filter,
                             h=0.1, L=direct.L)
    recon = kz.reconstruct(reduced, classic_filter)
    gap = l1_distance(normalize_stack(direct.series, direct.h, 1),
                      normalize_stack(recon, reduced.h, 1), direct.h, 1)
    assert gap.max() < 5e-2


def test_silent_channel_conserves_mass():
    spec = kz.silent_observation(rho=0.4)
    path = kz.simulate_paths(spec, 0.5, 0.001, seed=707)[0]
    run = kz.run_zakai(spec, path, h=0.05)
    drift = np.max(np.abs(run.mass - run.mass[0]))
    assert drift < 1e-8


def test_two_dimensional_direct_run():
    th = np.array([[0.8, 0.0, 0.2], [0.0, 0.7, 0.0]])
    Th = np.array([[0.0, 0.0, 1.0]])
    spec = kz.ModelSpec(d=2, dy=1, dw=3,
                        theta=kz.constant(th), Theta=kz.constant(Th),
                        bdot=kz.constant(-0.5 * np.eye(2)),
                        b0=kz.constant(np.zeros(2)),
                        Bdot=kz.constant([[0.6], [0.0]]), B0=kz.constant([0.0]))
    path = kz.simulate_paths(spec, 0.05, 0.005, seed=11)[0]
    frun = kz.run_filter(spec, path)
    run = kz.run_zakai(spec, path, h=0.25, L=6.0, filter_run=frun)
    assert run.series.shape[1:] == (49, 49)
    assert run.mass.min() > 0.9
    closed = closed_form_snapshots(frun, run.axes, run.snapshot_steps)
    gap = l1_distance(normalize_stack(run.series, run.h, 2), closed, run.h, 2)
    assert gap.max() < 1e-2


def test_advisory_step_bound_for_the_baseline_model(classic):
    path = kz.simulate_paths(classic, 1.0, 0.001, seed=1)[0]
    bound = kz.cfl_suggest(classic, path, h=0.1, L=4.0)
    assert bound == pytest.approx(0.005, rel=1e-12)


def test_step_bound_violation_raises_when_asked(classic):
    path = kz.simulate_paths(classic, 1.0, 0.1, seed=7)[0]
    opts = kz.SolverOptions(cfl="raise")
    with pytest.raises(NumericError, match="advisory bound"):
        kz.run_zakai(classic, path, h=0.02, L=6.0, opts=opts)


def test_box_guard_names_the_remedy(classic):
    path = kz.simulate_paths(classic, 0.1, 0.01, seed=7)[0]
    with pytest.raises(MassError, match="increase L"):
        kz.run_zakai(classic, path, h=0.05, L=2.0)


def test_energy_ledger_never_ticks_up(classic):
    path = kz.simulate_paths(classic, 0.5, 0.001, seed=606)[0]
    frun = kz.run_filter(classic, path)
    run = kz.run_reduced(classic, path, filter_run=frun, h=0.05)
    for p in (2.0, 4.0):
        diag = kz.energy_diagnostic(classic, path, run, frun, p=p)
        assert np.max(np.diff(diag.weighted)) <= 1e-10
        assert diag.max_uptick <= 0.0


def test_normalize_stack_and_l1_distance():
    ax = kz.make_axis(2.0, 0.1)
    stack = np.stack([np.exp(-ax ** 2), 2.0 * np.exp(-ax ** 2)])
    ns = normalize_stack(stack.copy(), 0.1, 1)
    assert np.allclose(ns[0], ns[1])
    assert np.allclose(ns.sum(axis=1) * 0.1, 1.0)
    assert l1_distance(ns, ns, 0.1, 1).max() == 0.0
