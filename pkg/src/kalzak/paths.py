"""Path simulation and exponential martingale functionals.

Simulation is Euler-Maruyama with every coefficient evaluated at the
left endpoint.  Alongside the raw state the simulator accumulates the
whitened observation integral ytilde (increments Psi dy) and the
rescaled Wiener path wtilde (increments Psi Theta dW); with left-point
evaluation these satisfy the exact per-step identity

    dytilde_k = dwtilde_k + h(x_k) dt

where h is the whitened observation drift.  The martingale helpers rely
on that identity being exact, not approximate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _backends
from .models import ModelSpec, derived_at, fields_along

__all__ = [
    "PathBundle",
    "simulate_paths",
    "coarsen_increments",
    "coarsen_path",
    "exponential_martingale",
    "factorization_check",
    "FactorizationCheck",
]


@dataclass
class PathBundle:
    """One simulated trajectory with its observation functionals.

    z stacks signal then observation, shape (N+1, d+dy).  blowup_step is
    None for a healthy path; otherwise it is the first step index whose
    state exceeded the guard bound (entries from there on are NaN) and
    downstream consumers must refuse the path rather than truncate it
    silently.
    """

    times: np.ndarray
    z: np.ndarray
    ytilde: np.ndarray
    wtilde: np.ndarray
    dW: np.ndarray
    d: int
    seed: int | None = None
    path_index: int = 0
    blowup_step: int | None = None

    @property
    def x(self) -> np.ndarray:
        return self.z[:, : self.d]

    @property
    def y(self) -> np.ndarray:
        return self.z[:, self.d:]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def dytilde(self) -> np.ndarray:
        return np.diff(self.ytilde, axis=0)

    def truncated(self, k: int) -> "PathBundle":
        """The first k steps as an independent bundle (copies, not views)."""
        if not 0 <= k <= self.n_steps:
            raise ValueError(f"truncation step {k} outside 0..{self.n_steps}")
        return replace(
            self,
            times=self.times[: k + 1].copy(),
            z=self.z[: k + 1].copy(),
            ytilde=self.ytilde[: k + 1].copy(),
            wtilde=self.wtilde[: k + 1].copy(),
            dW=self.dW[:k].copy(),
        )

    def require_healthy(self):
        if self.blowup_step is not None:
            raise ValueError(
                f"path {self.path_index} exceeded the blow-up guard at step "
                f"{self.blowup_step} (t={self.times[self.blowup_step]:.6g})"
            )


def _steps_for(T: float, dt: float) -> int:
    N = int(round(T / dt))
    if N < 1 or abs(N * dt - T) > 1e-9 * max(1.0, abs(T)):
        raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
    return N


def path_seed_sequence(seed: int, path_index: int) -> np.random.SeedSequence:
    """Per-path seed derivation: child i is SeedSequence(seed, spawn_key=(i,)).

    Documented so external tools can reproduce any single path without
    generating its predecessors.
    """
    return np.random.SeedSequence(seed, spawn_key=(path_index,))


def simulate_paths(spec: ModelSpec, T: float, dt: float, n_paths: int = 1,
                   seed: int | None = None, z0=None, dW=None,
                   bound: float = 1e6) -> list[PathBundle]:
    """Simulate independent paths of the signal/observation pair.

    Parameters
    ----------
    z0 : array, callable or None
        Initial state; a callable receives the path's generator and
        returns the state (use this to draw x0 from a prior).  None
        means the origin.
    dW : array or None
        Precomputed increments, shape (N, dw) or (n_paths, N, dw).
        Supplying them pins the driving noise, which is how refinement
        studies keep one Brownian path across step sizes.
    bound : float
        Blow-up guard on the sup norm of the state; exceeding it flags
        the bundle instead of raising.
    """
    N = _steps_for(T, dt)
    if seed is None:
        seed = int(np.random.SeedSequence().entropy)
    times = np.linspace(0.0, N * dt, N + 1)
    if dW is not None:
        dW = np.asarray(dW, dtype=float)
        if dW.ndim == 2:
            dW = dW[None, :, :]
        if dW.shape != (n_paths, N, spec.dw):
            raise ValueError(
                f"dW has shape {dW.shape}, expected ({n_paths}, {N}, {spec.dw})"
            )
    kern = _backends.active()
    const = spec.is_constant
    if const:
        f0 = derived_at(spec, 0.0, np.zeros(spec.dy))
        theta_c = spec.theta(0.0, np.zeros(spec.dy))
        Theta_c = spec.Theta(0.0, np.zeros(spec.dy))
        slope = np.zeros((spec.d1, spec.d1))
        slope[: spec.d, : spec.d] = spec.bdot.constant_value.T
        slope[spec.d:, : spec.d] = spec.Bdot.constant_value.T
        level = np.concatenate([spec.b0.constant_value, spec.B0.constant_value])
        theta_check = np.ascontiguousarray(np.vstack([theta_c, Theta_c]))
        Psi_c = np.ascontiguousarray(f0.Psi)

    bundles = []
    for i in range(n_paths):
        rng = np.random.default_rng(path_seed_sequence(seed, i))
        if callable(z0):
            z_init = np.asarray(z0(rng), dtype=float)
        elif z0 is None:
            z_init = np.zeros(spec.d1)
        else:
            z_init = np.asarray(z0, dtype=float)
        if z_init.shape != (spec.d1,):
            raise ValueError(f"z0 has shape {z_init.shape}, expected ({spec.d1},)")
        incs = dW[i] if dW is not None else rng.normal(0.0, np.sqrt(dt), size=(N, spec.dw))
        incs = np.ascontiguousarray(incs)
        if const:
            z, yt, wt, blow = kern.affine_path(
                np.ascontiguousarray(z_init), dt, incs, slope, level,
                theta_check, Psi_c, np.ascontiguousarray(Theta_c), spec.d, bound,
            )
        else:
            z, yt, wt, blow = _simulate_generic(spec, times, dt, z_init, incs, bound)
        bundles.append(PathBundle(
            times=times, z=z, ytilde=yt, wtilde=wt, dW=incs, d=spec.d,
            seed=seed, path_index=i,
            blowup_step=None if blow < 0 else int(blow),
        ))
    return bundles


def _simulate_generic(spec, times, dt, z_init, dW, bound):
    # coefficients may depend on (t, y): evaluate step by step
    N = dW.shape[0]
    d, dy = spec.d, spec.dy
    z = np.empty((N + 1, spec.d1))
    yt = np.zeros((N + 1, dy))
    wt = np.zeros((N + 1, dy))
    z[0] = z_init
    blow = -1
    for k in range(N):
        t = float(times[k])
        y = z[k, d:]
        f = derived_at(spec, t, y)
        th = spec.theta(t, y)
        Th = spec.Theta(t, y)
        b = f.b_slope.T @ z[k, :d] + f.b_level
        B = spec.Bdot(t, y).T @ z[k, :d] + spec.B0(t, y)
        dz_x = b * dt + th @ dW[k]
        dz_y = B * dt + Th @ dW[k]
        z[k + 1, :d] = z[k, :d] + dz_x
        z[k + 1, d:] = y + dz_y
        yt[k + 1] = yt[k] + f.Psi @ dz_y
        wt[k + 1] = wt[k] + f.Psi @ (Th @ dW[k])
        if not np.all(np.abs(z[k + 1]) <= bound):
            blow = k + 1
            z[k + 2:] = np.nan
            yt[k + 2:] = np.nan
            wt[k + 2:] = np.nan
            break
    return z, yt, wt, blow


def coarsen_increments(arr: np.ndarray, factor: int) -> np.ndarray:
    """Sum consecutive groups of `factor` increments (Brownian coarsening)."""
    N = arr.shape[0]
    if N % factor:
        raise ValueError(f"cannot coarsen {N} increments by factor {factor}")
    return arr.reshape(N // factor, factor, *arr.shape[1:]).sum(axis=1)


def coarsen_path(path: PathBundle, factor: int) -> PathBundle:
    """Subsample a fine path onto a step `factor` times coarser.

    States and observation functionals are taken at every factor-th
    time; driving increments are summed.  The coarse bundle shares the
    fine path's realization, which is what step-refinement studies
    need.  The exact one-step drift identity linking dytilde to dwtilde
    holds only at the original resolution, so keep the fine bundle for
    likelihood-ratio algebra.
    """
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    if factor > 1 and path.n_steps % factor:
        raise ValueError(
            f"path with {path.n_steps} steps cannot be coarsened by {factor}"
        )
    if factor == 1:
        return path
    return PathBundle(
        times=path.times[::factor].copy(),
        z=path.z[::factor].copy(),
        ytilde=path.ytilde[::factor].copy(),
        wtilde=path.wtilde[::factor].copy(),
        dW=coarsen_increments(path.dW, factor),
        d=path.d,
        seed=path.seed,
        path_index=path.path_index,
        blowup_step=path.blowup_step,
    )


def exponential_martingale(path: PathBundle, xi: np.ndarray, log: bool = False) -> np.ndarray:
    """Discrete stochastic exponential of -xi against the path's wtilde.

    xi holds left-endpoint integrand values, shape (N, dy).  Returns the
    running series of length N+1 starting at 1 (0 in log form),

        rho_k = exp(-sum_{j<k} xi_j . dwtilde_j - 1/2 sum_{j<k} |xi_j|^2 dt).

    Each factor has conditional mean one exactly, so the series is a
    discrete martingale for any adapted integrand.
    """
    path.require_healthy()
    xi = np.asarray(xi, dtype=float)
    dwt = np.diff(path.wtilde, axis=0)
    if xi.shape != dwt.shape:
        raise ValueError(f"xi has shape {xi.shape}, expected {dwt.shape}")
    incs = -(xi * dwt).sum(axis=1) - 0.5 * (xi * xi).sum(axis=1) * path.dt
    lr = np.concatenate([[0.0], np.cumsum(incs)])
    return lr if log else np.exp(lr)


@dataclass
class FactorizationCheck:
    lhs: np.ndarray
    rhs: np.ndarray
    max_gap: float


def factorization_check(spec: ModelSpec, path: PathBundle, W: np.ndarray,
                        V: np.ndarray) -> FactorizationCheck:
    """Check the shift identity between the two change-of-measure densities.

    With zeta_k = h_slope_k^T W_k^{-1} V_k - h_level_k the product

        rho(h(x)) * exp(-sum zeta . dytilde - 1/2 sum |zeta|^2 dt)

    must equal rho(h(x) + zeta) step for step; the identity is exact
    discrete algebra, so max_gap should sit at roundoff level.
    """
    path.require_healthy()
    fs = fields_along(spec, path.times[:-1], path.y[:-1])
    x = path.x[:-1]
    Bt = np.einsum("kij,ki->kj", fs.h_slope, x) + fs.h_level
    WinvV = np.linalg.solve(W[:-1], V[:-1][..., None])[..., 0]
    zeta = np.einsum("kij,ki->kj", fs.h_slope, WinvV) - fs.h_level
    dyt = path.dytilde
    log_rho_B = exponential_martingale(path, Bt, log=True)
    corr = -(zeta * dyt).sum(axis=1) - 0.5 * (zeta * zeta).sum(axis=1) * path.dt
    lhs = np.exp(log_rho_B + np.concatenate([[0.0], np.cumsum(corr)]))
    rhs = exponential_martingale(path, Bt + zeta)
    return FactorizationCheck(lhs=lhs, rhs=rhs, max_gap=float(np.max(np.abs(lhs - rhs))))
