"""Observation-driven quadratic form: the (W, V, U) filter triple.

For conditionally Gaussian models the unnormalized conditional density
is exp(-Q_t(x)) up to a constant, with Q_t(x) = 1/2 x^T W_t x + V_t.x + U_t.
W solves a deterministic matrix Riccati ODE (integrated by classical RK4
with coefficients frozen at the left endpoint), while V and U solve
linear SDEs driven by the whitened observation increments (integrated
by Euler-Maruyama).  The conditional mean and covariance are read off
as xbar = -W^{-1} V and Sigma = W^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backends
from .errors import FilterDivergenceError
from .models import ModelSpec, FieldSeries, fields_along
from .paths import PathBundle

__all__ = [
    "QuadraticForm",
    "FilterRun",
    "run_filter",
    "step_riccati",
    "eval_Q",
    "q_sde_residual",
    "eta_sde_residual",
    "a_process",
    "completed_square_gap",
]


@dataclass
class QuadraticForm:
    """Q(x) = 1/2 x^T W x + V.x + U with W symmetric positive definite."""

    W: np.ndarray
    V: np.ndarray
    U: float

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        self.V = np.atleast_1d(np.asarray(self.V, dtype=float))
        self.U = float(self.U)
        d = self.V.shape[0]
        if self.W.shape != (d, d):
            raise ValueError(f"W shape {self.W.shape} incompatible with V shape {self.V.shape}")
        if np.max(np.abs(self.W - self.W.T)) > 1e-12 * max(1.0, np.max(np.abs(self.W))):
            raise ValueError("W must be symmetric")
        if np.linalg.eigvalsh(self.W)[0] <= 0.0:
            raise ValueError("W must be positive definite")

    @classmethod
    def isotropic(cls, d: int, eps: float = 1.0) -> "QuadraticForm":
        """The default prior form 1/2 eps |x|^2 (Gaussian N(0, eps^{-1} I))."""
        return cls(W=eps * np.eye(d), V=np.zeros(d), U=0.0)

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xs = np.atleast_2d(x)
        q = 0.5 * np.einsum("pi,ij,pj->p", xs, self.W, xs) + xs @ self.V + self.U
        return q[0] if x.ndim == 1 else q

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self.W.T + self.V if x.ndim > 1 else self.W @ x + self.V

    def eta(self, x: np.ndarray) -> np.ndarray:
        return np.exp(-self.value(x))

    def mean_cov(self) -> tuple:
        cov = np.linalg.inv(self.W)
        return -cov @ self.V, cov


def eval_Q(form: QuadraticForm, x: np.ndarray) -> tuple:
    """Value, gradient and exponential weight of Q at x."""
    return form.value(x), form.grad(x), form.eta(x)


@dataclass
class FilterRun:
    """Filter triple along one path, with positivity diagnostics.

    min_eig tracks the smallest eigenvalue of W at every step; max_asym
    is the largest pre-symmetrization asymmetry the integrator saw
    (roundoff scale unless something is wrong).
    """

    spec: ModelSpec
    times: np.ndarray
    W: np.ndarray        # (N+1, d, d)
    V: np.ndarray        # (N+1, d)
    U: np.ndarray        # (N+1,)
    min_eig: np.ndarray  # (N+1,)
    max_asym: float
    q0: QuadraticForm

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def form_at(self, k: int) -> QuadraticForm:
        return QuadraticForm(W=self.W[k], V=self.V[k], U=self.U[k])

    def xbar(self) -> np.ndarray:
        """Conditional mean series -W^{-1} V, shape (N+1, d)."""
        return -np.linalg.solve(self.W, self.V[..., None])[..., 0]

    def cov(self) -> np.ndarray:
        """Conditional covariance series W^{-1}, shape (N+1, d, d)."""
        return np.linalg.inv(self.W)


def _min_eig_series(W: np.ndarray) -> np.ndarray:
    if W.shape[1] == 1:
        return W[:, 0, 0].copy()
    return np.linalg.eigvalsh(W)[:, 0]


def run_filter(spec: ModelSpec, path: PathBundle, q0: QuadraticForm | None = None,
               fields: FieldSeries | None = None) -> FilterRun:
    """Integrate (W, V, U) along a path's whitened observations.

    Raises FilterDivergenceError naming the time at which W stopped
    being positive definite (the usual causes are a dt too large for the
    coefficient scale, or a badly conditioned model).
    """
    path.require_healthy()
    if q0 is None:
        q0 = QuadraticForm.isotropic(spec.d)
    if q0.V.shape[0] != spec.d:
        raise ValueError(f"q0 dimension {q0.V.shape[0]} does not match model d={spec.d}")
    if fields is None:
        fields = fields_along(spec, path.times[:-1], path.y[:-1])
    contig = np.ascontiguousarray
    kern = _backends.active()
    W, V, U, first_bad, max_asym = kern.riccati_path(
        path.dt, contig(path.dytilde),
        contig(fields.b_slope), contig(fields.h_slope), contig(fields.sigma),
        contig(fields.a), contig(fields.ahat),
        contig(fields.b_level), contig(fields.h_level),
        contig(q0.W), contig(q0.V), float(q0.U),
    )
    if first_bad >= 0:
        raise FilterDivergenceError(
            "inverse covariance lost positive definiteness at "
            f"t={path.times[first_bad]:.6g} (step {first_bad}); "
            "reduce dt or rescale the model"
        )
    return FilterRun(
        spec=spec, times=path.times, W=W, V=V, U=U,
        min_eig=_min_eig_series(W), max_asym=float(max_asym), q0=q0,
    )


def _rhs(C, HH, ahat, M):
    return C @ M + M @ C.T - 2.0 * M @ ahat @ M + HH


def step_riccati(dt: float, dyt: np.ndarray, f, W: np.ndarray, V: np.ndarray,
                 U: float) -> tuple:
    """One reference step of the triple (readable twin of the kernels).

    f is a DerivedFields instance at the left endpoint.  Returns the
    advanced (W, V, U); W comes back symmetrized.  Kept in plain NumPy
    as the semantic anchor for the backend equivalence tests.
    """
    C = f.h_slope @ f.sigma.T - f.b_slope
    HH = f.h_slope @ f.h_slope.T
    k1 = _rhs(C, HH, f.ahat, W)
    k2 = _rhs(C, HH, f.ahat, W + 0.5 * dt * k1)
    k3 = _rhs(C, HH, f.ahat, W + 0.5 * dt * k2)
    k4 = _rhs(C, HH, f.ahat, W + dt * k3)
    Wn = W + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    Wn = 0.5 * (Wn + Wn.T)
    sb = f.sigma @ f.h_level - f.b_level
    Vn = V - (W @ f.sigma + f.h_slope) @ dyt + (
        C @ V - 2.0 * W @ (f.ahat @ V) + W @ sb + f.h_slope @ f.h_level
    ) * dt
    Un = U - (f.sigma.T @ V + f.h_level) @ dyt + (
        float(np.sum(f.a * W)) + V @ sb - V @ (f.ahat @ V)
        + 0.5 * f.h_level @ f.h_level + float(np.trace(f.b_slope))
    ) * dt
    return Wn, Vn, float(Un)


def _stated_increments(spec, path, run, fields=None):
    """Drift and martingale pieces of the triple's equations, left endpoints."""
    if fields is None:
        fields = fields_along(spec, path.times[:-1], path.y[:-1])
    W = run.W[:-1]
    V = run.V[:-1]
    dt = run.dt
    dyt = path.dytilde
    C = np.einsum("kil,kjl->kij", fields.h_slope, fields.sigma) - fields.b_slope
    HH = np.einsum("kil,kjl->kij", fields.h_slope, fields.h_slope)
    WaW = np.einsum("kij,kjl,klm->kim", W, fields.ahat, W)
    fW = C @ W + np.einsum("kij,klj->kil", W, C) - 2.0 * WaW + HH
    sb = np.einsum("kij,kj->ki", fields.sigma, fields.h_level) - fields.b_level
    v_mart = -np.einsum("kil,kl->ki", W @ fields.sigma + fields.h_slope, dyt)
    v_drift = (
        np.einsum("kij,kj->ki", C, V)
        - 2.0 * np.einsum("kij,kj->ki", W @ fields.ahat, V)
        + np.einsum("kij,kj->ki", W, sb)
        + np.einsum("kil,kl->ki", fields.h_slope, fields.h_level)
    )
    u_mart = -np.einsum("kl,kl->k", np.einsum("kjl,kj->kl", fields.sigma, V) + fields.h_level, dyt)
    u_drift = (
        np.einsum("kij,kij->k", fields.a, W)
        + np.einsum("ki,ki->k", V, sb)
        - np.einsum("ki,kij,kj->k", V, fields.ahat, V)
        + 0.5 * np.einsum("kl,kl->k", fields.h_level, fields.h_level)
        + np.trace(fields.b_slope, axis1=1, axis2=2)
    )
    return fW, v_mart, v_drift * dt, u_mart, u_drift * dt


def q_sde_residual(spec: ModelSpec, path: PathBundle, run: FilterRun,
                   x: np.ndarray) -> np.ndarray:
    """Per-step residual of the scalar equation satisfied by Q_t(x) at fixed x.

    The stated increment uses left-endpoint coefficients throughout;
    the V and U parts cancel against the integrator exactly, so what
    remains measures the distance between the RK4 advance of W and its
    stated one-step drift.  Shrinks at second order in dt.
    """
    x = np.asarray(x, dtype=float)
    fW, v_mart, v_drift, u_mart, u_drift = _stated_increments(spec, path, run)
    dQ = (
        0.5 * np.einsum("i,kij,j->k", x, np.diff(run.W, axis=0), x)
        + np.diff(run.V, axis=0) @ x
        + np.diff(run.U)
    )
    stated = (
        0.5 * np.einsum("i,kij,j->k", x, fW, x) * run.dt
        + (v_mart + v_drift) @ x
        + u_mart + u_drift
    )
    return dQ - stated


def eta_sde_residual(spec: ModelSpec, path: PathBundle, run: FilterRun,
                     x: np.ndarray) -> np.ndarray:
    """Per-step residual of the equation for eta = exp(-Q) at fixed x.

    Expands d eta = eta (-dQ + 1/2 d<Q>) with the quadratic variation of
    the martingale part of dQ; first order in dt.
    """
    x = np.asarray(x, dtype=float)
    fields = fields_along(spec, path.times[:-1], path.y[:-1])
    W = run.W[:-1]
    V = run.V[:-1]
    g = (
        np.einsum("kil,i->kl", W @ fields.sigma + fields.h_slope, x)
        + np.einsum("kjl,kj->kl", fields.sigma, V)
        + fields.h_level
    )
    qv = np.einsum("kl,kl->k", g, g) * run.dt
    Q = 0.5 * np.einsum("i,kij,j->k", x, run.W, x) + run.V @ x + run.U
    eta = np.exp(-Q)
    return np.diff(eta) - eta[:-1] * (-np.diff(Q) + 0.5 * qv)


def _w_roots(W: np.ndarray) -> tuple:
    """Symmetric square root and inverse square root of a stacked SPD series."""
    lam, Q = np.linalg.eigh(W)
    root = np.einsum("kij,kj,klj->kil", Q, np.sqrt(lam), Q)
    iroot = np.einsum("kij,kj,klj->kil", Q, 1.0 / np.sqrt(lam), Q)
    return root, iroot


def a_process(spec: ModelSpec, path: PathBundle, run: FilterRun) -> np.ndarray:
    """Deterministic compensator of the completed-square decomposition.

    A_t accumulates tr(a W) + tr(b_slope) - 1/2 ||W^{1/2} sigma +
    W^{-1/2} h_slope||_F^2 with left-point quadrature; A_0 = 0.
    """
    fields = fields_along(spec, path.times[:-1], path.y[:-1])
    W = run.W[:-1]
    root, iroot = _w_roots(W)
    M = root @ fields.sigma + iroot @ fields.h_slope
    integ = (
        np.einsum("kij,kij->k", fields.a, W)
        + np.trace(fields.b_slope, axis1=1, axis2=2)
        - 0.5 * np.einsum("kil,kil->k", M, M)
    )
    return np.concatenate([[0.0], np.cumsum(integ * run.dt)])


def completed_square_gap(spec: ModelSpec, path: PathBundle, run: FilterRun,
                         xs: np.ndarray) -> np.ndarray:
    """Gap series between Q_t(x) and its completed-square reconstruction.

    The reconstruction is 1/2 |W^{1/2} x + W^{-1/2} V|^2 plus the
    accumulated zeta functionals, the compensator A_t, and the constant
    R0 = U_0 - 1/2 V_0^T W_0^{-1} V_0.  Returns max over probe points of
    the absolute gap at every time; the discrete gap is a quadratic
    variation fluctuation of order sqrt(T dt).
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    fields = fields_along(spec, path.times[:-1], path.y[:-1])
    WinvV = np.linalg.solve(run.W[:-1], run.V[:-1][..., None])[..., 0]
    zeta = np.einsum("kij,ki->kj", fields.h_slope, WinvV) - fields.h_level
    dyt = path.dytilde
    zint = np.concatenate([[0.0], np.cumsum(
        (zeta * dyt).sum(axis=1) + 0.5 * (zeta * zeta).sum(axis=1) * run.dt
    )])
    A = a_process(spec, path, run)
    R0 = run.U[0] - 0.5 * run.V[0] @ np.linalg.solve(run.W[0], run.V[0])
    root, iroot = _w_roots(run.W)
    shift = np.einsum("kij,pj->kpi", root, xs) + (iroot @ run.V[:, :, None])[:, None, :, 0]
    sq = 0.5 * np.einsum("kpi,kpi->kp", shift, shift)
    lhs = (
        0.5 * np.einsum("pi,kij,pj->kp", xs, run.W, xs)
        + run.V @ xs.T + run.U[:, None]
    )
    rhs = sq + (zint + A + R0)[:, None]
    return np.max(np.abs(lhs - rhs), axis=1)
