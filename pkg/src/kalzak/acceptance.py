"""Acceptance gate: ten pinned end-to-end checks.

Each criterion is a zero-argument function returning a CriterionResult
with pass/fail, a one-line detail, and its runtime.  Tolerances, seeds,
horizons, and grids are frozen here; the test suite and the command
line `run check` both execute exactly these functions, so the gate
cannot drift between entry points.

Runtime budgets are enforced only when the compiled backend is active;
under the pure fallback they are reported but advisory, since the
reference kernels trade speed for legibility.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _backends
from .grids import box_halfwidth, make_axis
from .models import (classic_scalar, random_bounded, scalar_correlated,
                     silent_observation)
from .particles import compare_filters
from .paths import coarsen_increments, coarsen_path, simulate_paths
from .riccati import q_sde_residual, run_filter
from .testbed import (GeneralCoefficients, heat_coefficients, heat_l2_norm_sq,
                      noisy_heat_coefficients, product_rule_residual,
                      run_general, weak_residual)
from .zakai import (closed_form_snapshots, energy_diagnostic, l1_distance,
                    normalize_stack, reconstruct, run_reduced, run_zakai)

__all__ = ["CriterionResult", "ALL_CRITERIA", "run_all"]


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    runtime: float
    budget: float | None = None

    def __post_init__(self):
        # comparisons on numpy scalars hand back np.bool_; keep the record
        # JSON-friendly
        self.passed = bool(self.passed)
        self.runtime = float(self.runtime)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        body = f"[{verdict}] {self.index:02d} {self.name} ({self.runtime:.1f}s"
        if self.budget is not None:
            body += f"/{self.budget:.0f}s"
        return body + f") {self.detail}"


def _enforce_budget(ok: bool, detail: str, t0: float, budget: float | None):
    runtime = time.perf_counter() - t0
    if budget is not None and runtime > budget:
        if _backends.active_name() == "compiled":
            ok = False
            detail += f"; budget exceeded ({runtime:.1f}s > {budget:.0f}s)"
        else:
            detail += f"; budget advisory on pure backend ({runtime:.1f}s)"
    return ok, detail, runtime


def criterion_01_riccati_limit() -> CriterionResult:
    """Scalar steady state: W_T -> 1 + sqrt(2) and Sigma_T -> sqrt(2) - 1."""
    t0 = time.perf_counter()
    budget = 5.0
    spec = classic_scalar()
    path = simulate_paths(spec, T=20.0, dt=1e-4, seed=101)[0]
    run = run_filter(spec, path)
    w_lim = 1.0 + math.sqrt(2.0)
    s_lim = math.sqrt(2.0) - 1.0
    err_w = abs(float(run.W[-1, 0, 0]) - w_lim)
    err_s = abs(float(run.cov()[-1, 0, 0]) - s_lim)
    ok = err_w <= 1e-5 and err_s <= 1e-5
    detail = (f"W_T={run.W[-1, 0, 0]:.8f} (err {err_w:.2e}), "
              f"Sigma_T err {err_s:.2e}, tol 1e-5")
    ok, detail, rt = _enforce_budget(ok, detail, t0, budget)
    return CriterionResult(1, "scalar-riccati-limit", ok, detail, rt, budget)


def criterion_02_psd_band() -> CriterionResult:
    """W stays positive definite across ten randomized bounded configs."""
    t0 = time.perf_counter()
    budget = 30.0
    lo, hi = np.inf, 0.0
    bad = []
    for seed in range(10):
        spec = random_bounded(seed)
        path = simulate_paths(spec, T=1.0, dt=1e-3, seed=200 + seed)[0]
        try:
            run = run_filter(spec, path)
        except Exception as exc:
            bad.append(f"seed {seed}: {exc}")
            continue
        mn = float(run.min_eig.min())
        mx = float(np.linalg.eigvalsh(run.W)[:, -1].max())
        lo = min(lo, mn)
        hi = max(hi, mx)
        if mn <= 0.0:
            bad.append(f"seed {seed}: min eig {mn:.3e}")
    eps1 = min(lo, 1.0 / hi) if hi > 0 else 0.0
    ok = not bad
    detail = (f"eig range [{lo:.3e}, {hi:.3e}] over seeds 0..9, "
              f"band [eps1, 1/eps1] with eps1={eps1:.3e}")
    if bad:
        detail = "; ".join(bad)
    ok, detail, rt = _enforce_budget(ok, detail, t0, budget)
    return CriterionResult(2, "psd-band", ok, detail, rt, budget)


def criterion_03_gaussian_consistency() -> CriterionResult:
    """Grid solution of the density equation tracks the Gaussian closed form."""
    t0 = time.perf_counter()
    budget = 60.0
    spec = classic_scalar()
    h, T = 0.05, 0.5
    dt = h * h / 4.0
    fine = simulate_paths(spec, T=T, dt=dt / 4.0, seed=303)[0]
    coarse = coarsen_path(fine, 4)

    frun_c = run_filter(spec, coarse)
    box = box_halfwidth(frun_c)
    run_c = run_zakai(spec, coarse, h=h, L=box, filter_run=frun_c)
    last = np.array([coarse.n_steps])
    d_c = l1_distance(
        normalize_stack(run_c.series[-1:], h, 1),
        closed_form_snapshots(frun_c, run_c.axes, last), h, 1)[0]

    frun_f = run_filter(spec, fine)
    run_f = run_zakai(spec, fine, h=h / 2.0, L=run_c.L, filter_run=frun_f)
    last_f = np.array([fine.n_steps])
    d_f = l1_distance(
        normalize_stack(run_f.series[-1:], h / 2.0, 1),
        closed_form_snapshots(frun_f, run_f.axes, last_f), h / 2.0, 1)[0]

    ok = d_c <= 5e-2 and d_f < d_c
    detail = (f"L1 at T: {d_c:.3e} (tol 5e-2), refined {d_f:.3e}, "
              f"ratio {d_c / d_f:.2f}")
    ok, detail, rt = _enforce_budget(ok, detail, t0, budget)
    return CriterionResult(3, "gaussian-consistency", ok, detail, rt, budget)


def criterion_04_reduced_direct() -> CriterionResult:
    """Transformed solver matches the direct one within its refinement error."""
    t0 = time.perf_counter()
    budget = 90.0
    spec = classic_scalar()
    h, dt, T = 0.05, 1e-3, 0.5
    fine = simulate_paths(spec, T=T, dt=dt / 4.0, seed=404)[0]
    coarse = coarsen_path(fine, 4)

    frun = run_filter(spec, coarse)
    box = box_halfwidth(frun)
    direct = run_zakai(spec, coarse, h=h, L=box, filter_run=frun)
    reduced = run_reduced(spec, coarse, filter_run=frun, h=h, L=direct.L)
    recon = reconstruct(reduced, frun)
    a = normalize_stack(direct.series, h, 1)
    b = normalize_stack(recon, h, 1)
    gap = float(l1_distance(a, b, h, 1).max())

    frun_f = run_filter(spec, fine)
    direct_f = run_zakai(spec, fine, h=h / 2.0, L=direct.L, filter_run=frun_f)
    af = normalize_stack(direct_f.series[::4][:, ::2], h, 1)
    ref = float(l1_distance(a, af, h, 1).max())

    ok = gap <= 3.0 * ref
    detail = (f"sup L1 gap {gap:.3e} vs 3x self-refinement {3.0 * ref:.3e}")
    ok, detail, rt = _enforce_budget(ok, detail, t0, budget)
    return CriterionResult(4, "reduced-direct-equivalence", ok, detail, rt, budget)


def _martingale_ensemble(n_paths: int, T: float, dt: float, seed: int):
    """Vectorized density means for the classic scalar model.

    Propagates n_paths copies of the scalar signal/observation pair,
    accumulating the log exponential densities of both the raw whitened
    drift and the shifted drift from the factorization identity.  The
    shift needs the per-path linear term of the quadratic form, which
    follows its own one-dimensional recursion here (the matrix ODE part
    is deterministic and shared).
    """
    N = int(round(T / dt))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    # classic scalar constants: a = ahat = 1/2, sigma = 0, hs = 1, h0 = 0
    bdot, hs = -1.0, 1.0
    C = -bdot

    def f(w):
        return 2.0 * C * w - w * w + hs * hs

    W = np.empty(N + 1)
    W[0] = 1.0
    for k in range(N):
        k1 = f(W[k])
        k2 = f(W[k] + 0.5 * dt * k1)
        k3 = f(W[k] + 0.5 * dt * k2)
        k4 = f(W[k] + dt * k3)
        W[k + 1] = W[k] + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

    x = rng.standard_normal(n_paths)
    V = np.zeros(n_paths)
    lr1 = np.zeros(n_paths)
    lr2 = np.zeros(n_paths)
    sq = math.sqrt(dt)
    for k in range(N):
        dw_sig = rng.standard_normal(n_paths) * sq
        dwt = rng.standard_normal(n_paths) * sq
        B = hs * x
        dyt = B * dt + dwt
        zeta = hs * V / W[k]
        lr1 += -B * dwt - 0.5 * B * B * dt
        xi = B + zeta
        lr2 += -xi * dwt - 0.5 * xi * xi * dt
        V = V - hs * dyt + (C - W[k]) * V * dt
        x = x + bdot * x * dt + dw_sig
    return np.exp(lr1), np.exp(lr2)


def criterion_05_martingale_mean() -> CriterionResult:
    """Exponential density means sit at one within Monte Carlo error."""
    t0 = time.perf_counter()
    budget = 60.0
    n = 10_000
    rho1, rho2 = _martingale_ensemble(n, T=1.0, dt=1e-3, seed=505)
    rows = []
    ok = True
    for name, r in (("raw", rho1), ("shifted", rho2)):
        m = float(r.mean())
        se = float(r.std(ddof=1) / math.sqrt(n))
        z = abs(m - 1.0) / se
        rows.append(f"{name} {m:.4f}+-{se:.4f} (z={z:.2f})")
        ok = ok and z <= 3.0
    detail = ", ".join(rows) + ", tol 3 SE"
    ok, detail, rt = _enforce_budget(ok, detail, t0, budget)
    return CriterionResult(5, "martingale-mean", ok, detail, rt, budget)


def criterion_06_energy() -> CriterionResult:
    """Weighted p-norms fall monotonically; heat norm hits the closed form."""
    t0 = time.perf_counter()
    spec = classic_scalar()
    h, dt, T = 0.05, 1e-3, 0.5
    path = simulate_paths(spec, T=T, dt=dt, seed=606)[0]
    frun = run_filter(spec, path)
    box = box_halfwidth(frun)
    reduced = run_reduced(spec, path, filter_run=frun, h=h, L=box)
    parts = []
    ok = True
    for p in (2.0, 4.0):
        ed = energy_diagnostic(spec, path, reduced, frun, p=p)
        slack = 1e-3 * ed.weighted[0]
        ok = ok and ed.max_uptick <= slack
        parts.append(f"p={p:g} max uptick {ed.max_uptick:.2e} (slack {slack:.1e})")

    axis = make_axis(8.0, 0.05)
    u0 = np.exp(-axis ** 2 / 2.0) / math.sqrt(2.0 * math.pi)
    hrun = run_general(heat_coefficients(), u0, axis, T=1.0, dt=1e-3, seed=0)
    num = float((hrun.series[-1] ** 2).sum() * hrun.h)
    closed = heat_l2_norm_sq(1.0)
    rel = abs(num - closed) / closed
    ok = ok and rel <= 1e-3
    parts.append(f"heat norm rel err {rel:.2e} (tol 1e-3)")
    detail = "; ".join(parts)
    ok, detail, rt = _enforce_budget(ok, detail, t0, None)
    return CriterionResult(6, "energy-monotone", ok, detail, rt)


def criterion_07_positivity_mass() -> CriterionResult:
    """Nodal positivity within undershoot slack; conserved mass when silent."""
    t0 = time.perf_counter()
    spec = classic_scalar()
    h, dt, T = 0.05, 1e-3, 0.5
    path = simulate_paths(spec, T=T, dt=dt, seed=707)[0]
    run = run_zakai(spec, path, h=h)
    maxval = run.series.max(axis=1)
    under = float((run.minval + 1e-6 * maxval).min())
    ok = under >= 0.0 and bool((run.mass > 0.0).all())
    parts = [f"worst nodal min+1e-6*max = {under:.2e}, mass>0 all steps"]

    silent = silent_observation(rho=0.5)
    spath = simulate_paths(silent, T=T, dt=dt, seed=708)[0]
    srun = run_zakai(silent, spath, h=h)
    drift = float(np.max(np.abs(srun.mass - srun.mass[0])))
    ok = ok and drift <= 1e-8
    parts.append(f"silent mass drift {drift:.2e} (tol 1e-8)")
    detail = "; ".join(parts)
    ok, detail, rt = _enforce_budget(ok, detail, t0, None)
    return CriterionResult(7, "positivity-mass", ok, detail, rt)


def criterion_08_particle_oracle() -> CriterionResult:
    """Particle conditional mean matches the closed form within 3 stderr."""
    t0 = time.perf_counter()
    budget = 60.0
    spec = classic_scalar()
    T, dt = 1.0, 1e-3
    path = simulate_paths(spec, T=T, dt=dt, seed=808)[0]
    frun = run_filter(spec, path)
    rows = compare_filters(spec, path, frun, n_particles=100_000, seed=4242,
                           steps=[500, 1000])
    ok = all(r.within for r in rows)
    detail = ", ".join(
        f"t={r.t:g}: |diff|={abs(r.particle_mean[0] - r.filter_mean[0]):.4f} "
        f"se={r.stderr[0]:.4f} z={r.z:.2f}" for r in rows) + ", tol z<=3"
    ok, detail, rt = _enforce_budget(ok, detail, t0, budget)
    return CriterionResult(8, "particle-oracle", ok, detail, rt, budget)


def _testbed_pair():
    cu = noisy_heat_coefficients()
    cv = GeneralCoefficients(
        a=0.4, frakb=lambda t, x: -0.1 * np.exp(-x * x),
        b=lambda t, x: -0.2 * np.tanh(x), c=0.2,
        f0=lambda t, x: np.exp(-x * x), f1=0.0,
        sigma=0.25, nu=-0.1, g=lambda t, x: 0.4 * np.exp(-(x + 1.0) ** 2),
        lam=0.0, n_channels=1, label="noisy-v")
    return cu, cv


def _slope(dts, res) -> float:
    return float(np.polyfit(np.log2(dts), np.log2(res), 1)[0])


def criterion_09_weak_product_residuals() -> CriterionResult:
    """Weak and product residuals converge in dt; dropping the correction breaks it."""
    t0 = time.perf_counter()
    cu, cv = _testbed_pair()
    T = 0.25
    axis = make_axis(4.0, 0.05)
    u0 = np.exp(-axis ** 2 / 2.0) / math.sqrt(2.0 * math.pi)
    v0 = 0.8 * np.exp(-2.0 * (axis - 0.5) ** 2)
    v0[0] = v0[-1] = 0.0
    phi = np.clip(1.0 - (axis / 2.0) ** 2, 0.0, None) ** 2

    n_fine = 2000
    rng = np.random.default_rng(np.random.SeedSequence(909))
    dw_fine = rng.standard_normal((n_fine, 1)) * math.sqrt(T / n_fine)

    dts, wres, pres, ctrl = [], [], [], []
    for lvl in range(5):
        factor = 2 ** (4 - lvl)
        dw = coarsen_increments(dw_fine, factor)
        dt = T / dw.shape[0]
        ru = run_general(cu, u0, axis, dt=dt, dW=dw)
        rv = run_general(cv, v0, axis, dt=dt, dW=dw)
        dts.append(dt)
        wres.append(float(np.abs(weak_residual(ru, phi)).max()))
        pres.append(float(np.abs(product_rule_residual(ru, rv, phi)).max()))
        ctrl.append(float(np.abs(
            product_rule_residual(ru, rv, phi, ito_correction=False)).max()))
    sw, sp, sc = _slope(dts, wres), _slope(dts, pres), _slope(dts, ctrl)
    ok = sw >= 0.5 and sp >= 0.5 and sc <= 0.25
    detail = (f"weak order {sw:.2f}, product order {sp:.2f} (need >=0.5), "
              f"no-correction control order {sc:.2f} (need <=0.25)")
    ok, detail, rt = _enforce_budget(ok, detail, t0, None)
    return CriterionResult(9, "weak-product-residuals", ok, detail, rt)


def criterion_10_q_sde_residual() -> CriterionResult:
    """Quadratic-form SDE residual shrinks at order at least one half."""
    t0 = time.perf_counter()
    spec = scalar_correlated(rho=0.5)
    T = 0.5
    dt_fine = 2.5e-4
    fine = simulate_paths(spec, T=T, dt=dt_fine, seed=1010)[0]
    probes = [np.array([0.3]), np.array([-1.1])]
    dts, res = [], []
    for lvl in range(5):
        factor = 2 ** (4 - lvl)
        p = coarsen_path(fine, factor)
        run = run_filter(spec, p)
        worst = max(float(np.abs(q_sde_residual(spec, p, run, x)).max())
                    for x in probes)
        dts.append(p.dt)
        res.append(worst)
    s = _slope(dts, res)
    ok = s >= 0.5
    detail = (f"max residual {res[0]:.2e} -> {res[-1]:.2e} over 4 halvings, "
              f"order {s:.2f} (need >=0.5)")
    ok, detail, rt = _enforce_budget(ok, detail, t0, None)
    return CriterionResult(10, "q-sde-residual", ok, detail, rt)


ALL_CRITERIA = [
    criterion_01_riccati_limit,
    criterion_02_psd_band,
    criterion_03_gaussian_consistency,
    criterion_04_reduced_direct,
    criterion_05_martingale_mean,
    criterion_06_energy,
    criterion_07_positivity_mass,
    criterion_08_particle_oracle,
    criterion_09_weak_product_residuals,
    criterion_10_q_sde_residual,
]


def run_all(echo=print) -> list:
    """Run every criterion in order, echoing one verdict line per item."""
    results = []
    for fn in ALL_CRITERIA:
        try:
            res = fn()
        except Exception as exc:
            name = fn.__name__.split("_", 2)[-1].replace("_", "-")
            idx = int(fn.__name__.split("_")[1])
            res = CriterionResult(idx, name, False,
                                  f"raised {type(exc).__name__}: {exc}", 0.0)
        results.append(res)
        if echo:
            echo(res.line())
    if echo:
        n_ok = sum(r.passed for r in results)
        echo(f"{n_ok}/{len(results)} criteria passed")
    return results
