"""Generic 1-D divergence-form SPDE with growing lower-order terms.

The equation stepped here is

    du = ( D(a Du + frakb u) + b Du - (c + lam) u + D f1 + f0 ) dt
         + ( sigma_k Du + nu_k u + g_k ) dw^k

on a symmetric box with zero ends.  Every coefficient may depend on
(t, x); the deterministic operator (including advection and the
zero-order term) is solved implicitly, free terms enter the implicit
right-hand side, and the noise channels act explicitly with the
left-endpoint increments.  Weak-form pairings reuse the solver's own
midpoint fluxes against midpoint differences of the test function, so
the spatial summation by parts is exact and residuals measure time
discretization alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import solve_banded

from .models import ModelValidationError

__all__ = [
    "GeneralCoefficients",
    "CoefficientFields",
    "heat_coefficients",
    "noisy_heat_coefficients",
    "heat_l2_norm_sq",
    "general_step",
    "GeneralRun",
    "run_general",
    "weak_residual",
    "product_rule_residual",
    "AprioriReport",
    "apriori_ratio",
]


def _nodal(value, t, x):
    v = value(t, x) if callable(value) else value
    return np.broadcast_to(np.asarray(v, dtype=float), x.shape)


def _channel(value, t, x, m):
    v = value(t, x) if callable(value) else value
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1, 1)
    elif v.ndim == 1:
        # nodal profile shared by channels, or per-channel constants;
        # a length matching the grid reads as nodal
        if len(v) == len(x):
            v = v.reshape(1, -1)
        elif len(v) == m:
            v = v.reshape(-1, 1)
        else:
            raise ValueError(
                f"channel coefficient of length {len(v)} matches neither "
                f"the grid ({len(x)}) nor n_channels ({m})"
            )
    return np.broadcast_to(v, (m, len(x)))


@dataclass
class CoefficientFields:
    """All coefficients sampled on the nodes at one time."""

    a: np.ndarray
    frakb: np.ndarray
    b: np.ndarray
    c: np.ndarray
    f0: np.ndarray
    f1: np.ndarray
    sigma: np.ndarray
    nu: np.ndarray
    g: np.ndarray
    lam: float


@dataclass
class GeneralCoefficients:
    """Coefficient set for the general equation.

    Scalar entries (a, frakb, b, c, f0, f1) are constants or callables
    of (t, nodes); channel entries (sigma, nu, g) are scalars, length-m
    vectors, (m, n) arrays, or callables producing any of those.
    n_channels fixes m.  lam is the constant zero-order shift.
    """

    a: object = 0.5
    frakb: object = 0.0
    b: object = 0.0
    c: object = 0.0
    f0: object = 0.0
    f1: object = 0.0
    sigma: object = 0.0
    nu: object = 0.0
    g: object = 0.0
    lam: float = 0.0
    n_channels: int = 1
    label: str = "general"

    def at(self, t: float, x: np.ndarray) -> CoefficientFields:
        m = self.n_channels
        return CoefficientFields(
            a=_nodal(self.a, t, x), frakb=_nodal(self.frakb, t, x),
            b=_nodal(self.b, t, x), c=_nodal(self.c, t, x),
            f0=_nodal(self.f0, t, x), f1=_nodal(self.f1, t, x),
            sigma=_channel(self.sigma, t, x, m),
            nu=_channel(self.nu, t, x, m),
            g=_channel(self.g, t, x, m), lam=self.lam,
        )

    def validate(self, times, x: np.ndarray, delta_floor: float = 1e-8):
        """Sampled coefficient checks: parabolicity margin and signs."""
        if self.lam < 0.0:
            raise ModelValidationError(f"lam must be nonnegative, got {self.lam}")
        for t in np.atleast_1d(times):
            cf = self.at(float(t), x)
            margin = cf.a - 0.5 * (cf.sigma ** 2).sum(axis=0)
            if margin.min() < delta_floor:
                i = int(np.argmin(margin))
                raise ModelValidationError(
                    f"parabolicity margin a - |sigma|^2/2 = {margin[i]:.3e} "
                    f"at (t, x) = ({t:g}, {x[i]:g}) is below {delta_floor:g}"
                )
            if cf.c.min() < 0.0:
                raise ModelValidationError(
                    f"zero-order coefficient c is negative at t={t:g}"
                )
            if not np.isfinite(cf.nu).all():
                raise ModelValidationError(f"nu is not finite at t={t:g}")


def heat_coefficients(n_channels: int = 1) -> GeneralCoefficients:
    """Pure heat configuration: a = 1/2, everything else zero."""
    return GeneralCoefficients(a=0.5, n_channels=n_channels, label="heat")


def noisy_heat_coefficients(n_channels: int = 1) -> GeneralCoefficients:
    """Heat operator with every lower-order and stochastic slot exercised.

    Coefficients are bounded and smooth, the parabolicity margin is
    a - sigma^2/2 = 0.455, and the free terms are localized bumps so
    the a-priori ratio has nonzero data to divide by.
    """
    return GeneralCoefficients(
        a=0.5,
        frakb=lambda t, x: 0.2 * np.exp(-x * x),
        b=lambda t, x: 0.3 * np.tanh(x),
        c=lambda t, x: 0.1 * (1.0 + np.tanh(x)),
        f0=lambda t, x: 0.3 * np.exp(-((x - 1.0) ** 2)),
        f1=lambda t, x: 0.2 * np.exp(-x * x),
        sigma=0.3, nu=0.2,
        g=lambda t, x: 0.5 * np.exp(-x * x),
        lam=0.05, n_channels=n_channels, label="noisy_heat",
    )


def heat_l2_norm_sq(t: float) -> float:
    """Squared L2 norm of the heat evolution of a standard normal density."""
    return 1.0 / (2.0 * np.sqrt(np.pi * (1.0 + t)))


def _grad(u: np.ndarray, h: float) -> np.ndarray:
    g = np.zeros_like(u)
    g[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    return g


def general_step(u: np.ndarray, axis: np.ndarray, h: float, dt: float,
                 cf: CoefficientFields, dw: np.ndarray) -> np.ndarray:
    """One implicit/explicit step of the general equation.

    Solves (I - dt Ldet) u* = u + dt (D f1 + f0) on the interior, with
    Ldet the flux-form operator D(a Du + frakb u) + b Du - (c + lam) u
    (coefficients at arithmetic midpoints), then adds the channels
    (sigma_k Du* + nu_k u* + g_k) dw_k and clamps the ends.
    """
    n = len(axis)
    am = 0.5 * (cf.a[:-1] + cf.a[1:])
    fm = 0.5 * (cf.frakb[:-1] + cf.frakb[1:])
    lower = am[:-1] / h ** 2 - fm[:-1] / (2.0 * h) - cf.b[1:-1] / (2.0 * h)
    upper = am[1:] / h ** 2 + fm[1:] / (2.0 * h) + cf.b[1:-1] / (2.0 * h)
    diag = (-(am[:-1] + am[1:]) / h ** 2 + (fm[1:] - fm[:-1]) / (2.0 * h)
            - cf.c[1:-1] - cf.lam)
    ab = np.zeros((3, n - 2))
    ab[0, 1:] = -dt * upper[:-1]
    ab[1, :] = 1.0 - dt * diag
    ab[2, :-1] = -dt * lower[1:]
    free = _grad(cf.f1, h) + cf.f0
    rhs = u[1:-1] + dt * free[1:-1]
    v = np.zeros(n)
    v[1:-1] = solve_banded((1, 1), ab, rhs)
    dv = _grad(v, h)
    out = v + ((cf.sigma * dv + cf.nu * v + cf.g) * dw[:, None]).sum(axis=0)
    out[0] = 0.0
    out[-1] = 0.0
    return out


@dataclass
class GeneralRun:
    """Solution series of the general equation along one noise path."""

    coeffs: GeneralCoefficients
    times: np.ndarray
    axis: np.ndarray
    h: float
    series: np.ndarray
    dW: np.ndarray
    seed: int | None = None
    meta: dict = dc_field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1


def run_general(coeffs: GeneralCoefficients, u0: np.ndarray, axis: np.ndarray,
                T: float | None = None, dt: float | None = None,
                seed: int | None = None, dW: np.ndarray | None = None,
                validate: bool = True) -> GeneralRun:
    """Step the general equation from u0 under fresh or pinned noise.

    Either pass (T, dt) with a seed for internally generated channel
    increments, or pin dW of shape (N, m) directly (then dt is still
    required and T = N dt); pinning is how refinement studies keep the
    same underlying noise across step sizes.
    """
    u0 = np.asarray(u0, dtype=float)
    h = float(axis[1] - axis[0])
    if dW is not None:
        dW = np.asarray(dW, dtype=float)
        if dt is None:
            raise ValueError("dt is required alongside pinned dW")
        N = dW.shape[0]
    else:
        if T is None or dt is None:
            raise ValueError("need T and dt (or pinned dW)")
        N = int(round(T / dt))
        if abs(N * dt - T) > 1e-9 * max(1.0, T):
            raise ValueError(f"T={T} is not an integer multiple of dt={dt}")
        rng = np.random.default_rng(np.random.SeedSequence(seed or 0))
        dW = rng.standard_normal((N, coeffs.n_channels)) * np.sqrt(dt)
    times = np.arange(N + 1) * dt
    if validate:
        probe = times[np.unique(np.linspace(0, N, min(8, N + 1)).astype(int))]
        coeffs.validate(probe, axis)
    series = np.empty((N + 1, len(axis)))
    u = u0.copy()
    u[0] = 0.0
    u[-1] = 0.0
    series[0] = u
    for k in range(N):
        cf = coeffs.at(float(times[k]), axis)
        u = general_step(u, axis, h, dt, cf, dW[k])
        series[k + 1] = u
    return GeneralRun(coeffs=coeffs, times=times, axis=axis, h=h,
                      series=series, dW=dW, seed=seed)


def _check_test_function(phi: np.ndarray, n: int):
    if phi.shape != (n,):
        raise ValueError(f"test function has shape {phi.shape}, expected ({n},)")
    if phi[0] != 0.0 or phi[-1] != 0.0:
        raise ValueError("test function must vanish at the boundary nodes "
                         "(compact support inside the box)")


def _sample_phi(phi, axis: np.ndarray) -> np.ndarray:
    vals = np.asarray(phi(axis) if callable(phi) else phi, dtype=float)
    _check_test_function(vals, len(axis))
    return vals


def weak_residual(run: GeneralRun, phi) -> np.ndarray:
    """Accumulated weak-form residual series against a test function.

    At each step the pairing (u_t, phi) is compared with the start
    value plus the left-endpoint quadratures of the drift and noise
    integrals.  The flux part pairs midpoint values against midpoint
    differences of phi, which reproduces the solver's own summation by
    parts exactly; what remains is the time-discretization error, so
    the max |residual| falls at order about one half in dt.
    """
    phi_v = _sample_phi(phi, run.axis)
    h = run.h
    dt = run.dt
    dphi = np.diff(phi_v) / h
    res = np.empty(run.n_steps + 1)
    res[0] = 0.0
    acc = 0.0
    pair0 = h * (run.series[0] * phi_v).sum()
    for k in range(run.n_steps):
        u = run.series[k]
        cf = run.coeffs.at(float(run.times[k]), run.axis)
        am = 0.5 * (cf.a[:-1] + cf.a[1:])
        fm = 0.5 * (cf.frakb[:-1] + cf.frakb[1:])
        f1m = 0.5 * (cf.f1[:-1] + cf.f1[1:])
        um = 0.5 * (u[:-1] + u[1:])
        dum = np.diff(u) / h
        du = _grad(u, h)
        det = (-h * ((am * dum + fm * um + f1m) * dphi).sum()
               + h * ((cf.b * du - (cf.c + cf.lam) * u + cf.f0) * phi_v).sum())
        stoch = h * (((cf.sigma * du + cf.nu * u + cf.g) * phi_v).sum(axis=1)
                     @ run.dW[k])
        acc += det * dt + stoch
        res[k + 1] = h * (run.series[k + 1] * phi_v).sum() - pair0 - acc
    return res


def product_rule_residual(run_a: GeneralRun, run_b: GeneralRun, phi,
                          ito_correction: bool = True) -> np.ndarray:
    """Accumulated residual of the two-solution product identity.

    Tests d(u v, phi) = (v du + u dv, phi) + (h, phi) dt with
    h = sum_k (sigma_k Du + nu_k u + g_k)(sigma'_k Dv + nu'_k v + g'_k)
    evaluated at left endpoints, using the solvers' own increments for
    du and dv.  Both runs must share the grid, step, and noise path.
    With ito_correction switched off the quadratic covariation is left
    uncompensated and the residual stops converging; that is the
    positive control showing the correction term is real.
    """
    if run_a.axis.shape != run_b.axis.shape or \
            not np.array_equal(run_a.axis, run_b.axis):
        raise ValueError("runs live on different grids")
    if run_a.dW.shape != run_b.dW.shape or \
            not np.array_equal(run_a.dW, run_b.dW):
        raise ValueError("runs were driven by different noise paths")
    phi_v = _sample_phi(phi, run_a.axis)
    h = run_a.h
    dt = run_a.dt
    res = np.empty(run_a.n_steps + 1)
    res[0] = 0.0
    acc = 0.0
    pair0 = h * (run_a.series[0] * run_b.series[0] * phi_v).sum()
    for k in range(run_a.n_steps):
        u = run_a.series[k]
        v = run_b.series[k]
        du_inc = run_a.series[k + 1] - u
        dv_inc = run_b.series[k + 1] - v
        acc += h * ((v * du_inc + u * dv_inc) * phi_v).sum()
        if ito_correction:
            cfa = run_a.coeffs.at(float(run_a.times[k]), run_a.axis)
            cfb = run_b.coeffs.at(float(run_b.times[k]), run_b.axis)
            Ga = cfa.sigma * _grad(u, h) + cfa.nu * u + cfa.g
            Gb = cfb.sigma * _grad(v, h) + cfb.nu * v + cfb.g
            acc += dt * h * ((Ga * Gb).sum(axis=0) * phi_v).sum()
        res[k + 1] = (h * (run_a.series[k + 1] * run_b.series[k + 1]
                           * phi_v).sum() - pair0 - acc)
    return res


@dataclass
class AprioriReport:
    """Empirical stability constant of the first-order energy estimate."""

    p: float
    numerator: float
    denominator: float

    @property
    def ratio(self) -> float:
        return self.numerator / self.denominator


def apriori_ratio(run: GeneralRun, p: float = 2.0) -> AprioriReport:
    """Solution graph norm against the data norm driving it.

    numerator = int_0^T ( |u|_p^p + |Du|_p^p ) dt, denominator =
    |u0|_p^p + |Du0|_p^p + int_0^T ( |f0|_p^p + |f1|_p^p + ||g||_p^p ) dt
    with all norms discrete and the channel norm taken of the pointwise
    l2 magnitude of g.  Rejects the all-zero-data problem.
    """
    h = run.h
    dt = run.dt
    norm_p = lambda v: float((np.abs(v) ** p).sum() * h)
    num = 0.0
    den = norm_p(run.series[0]) + norm_p(_grad(run.series[0], run.h))
    for k in range(run.n_steps):
        u = run.series[k]
        num += dt * (norm_p(u) + norm_p(_grad(u, h)))
        cf = run.coeffs.at(float(run.times[k]), run.axis)
        gmag = np.sqrt((cf.g ** 2).sum(axis=0))
        den += dt * (norm_p(cf.f0) + norm_p(cf.f1) + norm_p(gmag))
    if den == 0.0:
        raise ValueError("a-priori ratio needs nonzero data or initial value")
    return AprioriReport(p=p, numerator=num, denominator=den)
