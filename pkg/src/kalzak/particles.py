"""Weighted particle oracle for the conditional distribution.

An independent check on the closed-form Gaussian filter: propagate an
ensemble under the signal dynamics and reweight with the exact
discrete observation likelihood.  The weight update

    log w += h(x) . dytilde - |h(x)|^2 dt / 2

is the exact one-step Gaussian likelihood ratio for the whitened
observation increment, valid when the signal noise is independent of
the observation noise (sigma = 0); the constructor refuses models with
correlation, where importance weighting of this form is wrong.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .models import ModelSpec, derived_at, fields_along
from .riccati import FilterRun, QuadraticForm

__all__ = [
    "ParticleRun",
    "particle_filter",
    "bootstrap_stderr",
    "OracleRow",
    "compare_filters",
]

_SIGMA_TOL = 1e-12


def _require_uncorrelated(spec: ModelSpec, times, ys):
    for t, y in zip(times, ys):
        f = derived_at(spec, float(t), y)
        if np.max(np.abs(f.sigma)) > _SIGMA_TOL:
            raise ValueError(
                "particle weights assume independent signal and observation "
                f"noise, but sigma is {np.max(np.abs(f.sigma)):.2e} at t={t:g}"
            )


@dataclass
class ParticleRun:
    """Weighted-ensemble summary along one observation path.

    mean and cov are the weighted ensemble statistics per step; ess is
    the effective sample size before any resampling at that step.
    checkpoints maps selected step indices to (positions, weights)
    copies for later bootstrap work.
    """

    times: np.ndarray
    n_particles: int
    seed: int
    mean: np.ndarray
    cov: np.ndarray
    ess: np.ndarray
    resample_steps: list
    checkpoints: dict = dc_field(default_factory=dict)

    @property
    def n_resamples(self) -> int:
        return len(self.resample_steps)


def _weighted_moments(X: np.ndarray, w: np.ndarray) -> tuple:
    mean = w @ X
    diff = X - mean
    cov = (diff * w[:, None]).T @ diff
    return mean, cov


def particle_filter(spec: ModelSpec, path, n_particles: int, seed: int,
                    q0: QuadraticForm | None = None,
                    resample_threshold: float = 0.5,
                    checkpoint_steps=None) -> ParticleRun:
    """Run the weighted ensemble along one simulated path.

    The initial cloud is drawn from the Gaussian with density
    proportional to exp(-q0).  Weights live in the log domain with a
    running maximum subtracted before exponentiation; multinomial
    resampling triggers whenever the effective sample size drops below
    resample_threshold * n_particles.  The seed should differ from the
    path's own seed; particles use their own generator.
    """
    path.require_healthy()
    q0 = q0 or QuadraticForm.isotropic(spec.d)
    N = path.n_steps
    dt = path.dt
    d = spec.d
    probe = np.unique(np.linspace(0, N - 1, min(32, N)).astype(int))
    _require_uncorrelated(spec, path.times[probe], path.y[probe])
    fields = fields_along(spec, path.times[:-1], path.y[:-1])
    dyt = path.dytilde
    checkpoint_steps = set(int(s) for s in (checkpoint_steps or []))

    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    m0, C0 = q0.mean_cov()
    X = m0 + rng.standard_normal((n_particles, d)) @ np.linalg.cholesky(C0).T
    logw = np.zeros(n_particles)

    mean = np.empty((N + 1, d))
    cov = np.empty((N + 1, d, d))
    ess = np.empty(N + 1)
    resample_steps = []
    checkpoints = {}
    w = np.full(n_particles, 1.0 / n_particles)
    mean[0], cov[0] = _weighted_moments(X, w)
    ess[0] = float(n_particles)
    if 0 in checkpoint_steps:
        checkpoints[0] = (X.copy(), w.copy())

    for k in range(N):
        drift = X @ fields.b_slope[k] + fields.b_level[k]
        L = np.linalg.cholesky(2.0 * fields.a[k] * dt)
        X = X + drift * dt + rng.standard_normal((n_particles, d)) @ L.T
        g = X @ fields.h_slope[k] + fields.h_level[k]
        logw += g @ dyt[k] - 0.5 * (g * g).sum(axis=1) * dt

        shifted = np.exp(logw - logw.max())
        w = shifted / shifted.sum()
        n_eff = 1.0 / (w * w).sum()
        ess[k + 1] = n_eff
        mean[k + 1], cov[k + 1] = _weighted_moments(X, w)
        if k + 1 in checkpoint_steps:
            checkpoints[k + 1] = (X.copy(), w.copy())
        if n_eff < resample_threshold * n_particles and k + 1 < N:
            idx = rng.choice(n_particles, size=n_particles, p=w)
            X = X[idx]
            logw[:] = 0.0
            resample_steps.append(k + 1)

    return ParticleRun(times=path.times.copy(), n_particles=n_particles,
                       seed=seed, mean=mean, cov=cov, ess=ess,
                       resample_steps=resample_steps, checkpoints=checkpoints)


def bootstrap_stderr(X: np.ndarray, w: np.ndarray, n_boot: int = 200,
                     seed: int = 0) -> np.ndarray:
    """Bootstrap standard error of the weighted ensemble mean, per axis.

    Each replicate draws n particles multinomially by weight and takes
    the plain mean; the spread over replicates estimates the Monte
    Carlo error including weight degeneracy.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    n = len(w)
    reps = np.empty((n_boot, X.shape[1]))
    for b in range(n_boot):
        idx = rng.choice(n, size=n, p=w)
        reps[b] = X[idx].mean(axis=0)
    return reps.std(axis=0, ddof=1)


@dataclass
class OracleRow:
    """Particle-vs-closed-form comparison at one time."""

    step: int
    t: float
    filter_mean: np.ndarray
    particle_mean: np.ndarray
    stderr: np.ndarray
    z: float
    cov_gap: float

    @property
    def within(self) -> bool:
        return self.z <= 3.0


def compare_filters(spec: ModelSpec, path, filter_run: FilterRun,
                    n_particles: int, seed: int, steps=None,
                    q0: QuadraticForm | None = None,
                    resample_threshold: float = 0.5,
                    n_boot: int = 200) -> list:
    """Closed-form mean against the particle oracle at selected steps.

    Default steps are the midpoint and the end of the run.  Each row
    reports the componentwise bootstrap error and the worst ratio
    z = max_i |difference_i| / stderr_i; agreement means z <= 3.
    """
    N = path.n_steps
    steps = [N // 2, N] if steps is None else [int(s) for s in steps]
    prun = particle_filter(spec, path, n_particles, seed, q0=q0,
                           resample_threshold=resample_threshold,
                           checkpoint_steps=steps)
    xbar = filter_run.xbar()
    cov = filter_run.cov()
    rows = []
    for s in steps:
        X, w = prun.checkpoints[s]
        se = np.maximum(bootstrap_stderr(X, w, n_boot=n_boot, seed=seed), 1e-14)
        diff = prun.mean[s] - xbar[s]
        rows.append(OracleRow(
            step=s, t=float(path.times[s]), filter_mean=xbar[s].copy(),
            particle_mean=prun.mean[s].copy(), stderr=se,
            z=float(np.max(np.abs(diff) / se)),
            cov_gap=float(np.max(np.abs(prun.cov[s] - cov[s]))),
        ))
    return rows
