"""Model specification and derived coefficient fields.

A model couples an unobserved signal x in R^d with an observation
y in R^dy through

    dx = b(t, x, y) dt + theta(t, y) dw
    dy = B(t, x, y) dt + Theta(t, y) dw

driven by one Wiener process w in R^dw.  Both drifts are affine in x,

    b(t, x, y) = bdot(t, y)^T x + b0(t, y)
    B(t, x, y) = Bdot(t, y)^T x + B0(t, y)

and the diffusion matrices depend on (t, y) only.  Solvers never touch
the raw coefficients; they consume the derived fields (whitening matrix,
effective diffusions, whitened observation drift) through derived_at.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Coefficient",
    "ModelSpec",
    "DerivedFields",
    "SamplingPlan",
    "ValidationReport",
    "ModelValidationError",
    "constant",
    "affine_clipped",
    "sigmoid",
    "from_callable",
    "derived_at",
    "drift_at",
    "validate_model",
    "FieldSeries",
    "fields_along",
    "classic_scalar",
    "scalar_correlated",
    "silent_observation",
    "random_bounded",
]

EIG_FLOOR = 1e-10


class ModelValidationError(ValueError):
    """A model violates a structural assumption the solvers rely on."""


class Coefficient:
    """Matrix-valued coefficient of (t, y) with a constant fast path.

    Wraps either a fixed array or a callable (t, y) -> array.  The
    ``constant_value`` attribute is the array itself when the
    coefficient does not depend on (t, y), else None; hot loops use it
    to evaluate coefficients once instead of per step.
    """

    __slots__ = ("shape", "_fn", "constant_value")

    def __init__(self, shape, fn=None, constant_value=None):
        self.shape = tuple(shape)
        self._fn = fn
        self.constant_value = None
        if constant_value is not None:
            arr = np.asarray(constant_value, dtype=float)
            if arr.shape != self.shape:
                raise ModelValidationError(
                    f"coefficient shape {arr.shape} does not match declared {self.shape}"
                )
            self.constant_value = arr

    @property
    def is_constant(self) -> bool:
        return self.constant_value is not None

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        if self.constant_value is not None:
            return self.constant_value
        out = np.asarray(self._fn(t, y), dtype=float)
        if out.shape != self.shape:
            raise ModelValidationError(
                f"coefficient callable returned shape {out.shape}, expected {self.shape}"
            )
        return out


def constant(value) -> Coefficient:
    """Coefficient fixed in (t, y)."""
    arr = np.asarray(value, dtype=float)
    return Coefficient(arr.shape, constant_value=arr)


def _driver(y, direction):
    if direction is None:
        return float(y[0]) if y.shape[0] else 0.0
    return float(direction @ y)


def affine_clipped(base, slope, bound, direction=None) -> Coefficient:
    """base + slope * clip(u, -bound, bound) with u a linear read of y.

    The clip keeps the coefficient bounded, so Lipschitz-in-y holds with
    constant |slope|.  ``direction`` selects u = direction . y (default:
    the first observation coordinate).
    """
    base = np.asarray(base, dtype=float)
    slope = np.asarray(slope, dtype=float)
    if slope.shape != base.shape:
        raise ModelValidationError("affine_clipped: slope shape must match base")
    bound = float(bound)
    dirv = None if direction is None else np.asarray(direction, dtype=float)

    def fn(t, y):
        u = _driver(y, dirv)
        return base + slope * min(max(u, -bound), bound)

    return Coefficient(base.shape, fn=fn)


def sigmoid(base, amp, scale=1.0, direction=None) -> Coefficient:
    """base + amp * tanh(scale * u), bounded and smooth in y."""
    base = np.asarray(base, dtype=float)
    amp = np.asarray(amp, dtype=float)
    if amp.shape != base.shape:
        raise ModelValidationError("sigmoid: amp shape must match base")
    scale = float(scale)
    dirv = None if direction is None else np.asarray(direction, dtype=float)

    def fn(t, y):
        return base + amp * np.tanh(scale * _driver(y, dirv))

    return Coefficient(base.shape, fn=fn)


def from_callable(fn: Callable, shape) -> Coefficient:
    """Wrap an arbitrary (t, y) -> array callable (host plugin hook)."""
    return Coefficient(shape, fn=fn)


@dataclass
class ModelSpec:
    """Dimensions plus the six coefficient fields of the signal/observation pair."""

    d: int
    dy: int
    dw: int
    theta: Coefficient   # (d, dw)  signal diffusion
    Theta: Coefficient   # (dy, dw) observation diffusion
    bdot: Coefficient    # (d, d)   signal drift slope, b = bdot^T x + b0
    b0: Coefficient      # (d,)
    Bdot: Coefficient    # (d, dy)  observation drift slope
    B0: Coefficient      # (dy,)
    label: str = ""

    def __post_init__(self):
        expected = {
            "theta": (self.d, self.dw),
            "Theta": (self.dy, self.dw),
            "bdot": (self.d, self.d),
            "b0": (self.d,),
            "Bdot": (self.d, self.dy),
            "B0": (self.dy,),
        }
        for name, shape in expected.items():
            coef = getattr(self, name)
            if coef.shape != shape:
                raise ModelValidationError(
                    f"{name} has shape {coef.shape}, expected {shape} "
                    f"for d={self.d}, dy={self.dy}, dw={self.dw}"
                )

    @property
    def d1(self) -> int:
        return self.d + self.dy

    @property
    def is_constant(self) -> bool:
        return all(
            getattr(self, name).is_constant
            for name in ("theta", "Theta", "bdot", "b0", "Bdot", "B0")
        )


@dataclass(frozen=True)
class DerivedFields:
    """Coefficient fields the solvers actually consume, at one (t, y).

    Psi is the symmetric inverse square root of Theta Theta^T (the
    observation whitener), Phi its inverse.  sigma couples signal and
    observation noise; a, alpha and ahat = a - alpha are the full,
    coupled and effective diffusion matrices.  h_slope, h_level give the
    whitened observation drift Psi B(t, x, y) = h_slope^T x + h_level.
    """

    a: np.ndarray        # (d, d)   1/2 theta theta^T
    alpha: np.ndarray    # (d, d)   1/2 sigma sigma^T
    ahat: np.ndarray     # (d, d)   a - alpha
    sigma: np.ndarray    # (d, dy)  theta Theta^T Psi
    Psi: np.ndarray      # (dy, dy)
    Phi: np.ndarray      # (dy, dy)
    h_slope: np.ndarray  # (d, dy)  Bdot Psi
    h_level: np.ndarray  # (dy,)    Psi B0
    b_slope: np.ndarray  # (d, d)   bdot
    b_level: np.ndarray  # (d,)     b0
    acheck: np.ndarray   # (d+dy, d+dy) 1/2 of the stacked diffusion gram matrix

    def h_at(self, x: np.ndarray) -> np.ndarray:
        """Whitened observation drift at signal value x."""
        return self.h_slope.T @ x + self.h_level


def derived_at(spec: ModelSpec, t: float, y: np.ndarray) -> DerivedFields:
    """Evaluate every derived field at one (t, y).

    Raises ModelValidationError when the observation noise covariance
    Theta Theta^T is numerically singular at this point (the whitener
    does not exist there).
    """
    th = spec.theta(t, y)
    Th = spec.Theta(t, y)
    G = Th @ Th.T
    lam, Q = np.linalg.eigh(G)
    if lam.min() <= EIG_FLOOR * max(1.0, lam.max()):
        raise ModelValidationError(
            "observation noise covariance Theta Theta^T is singular at "
            f"(t, y)=({t:.6g}, {np.array2string(np.asarray(y), precision=4)}): "
            f"min eigenvalue {lam.min():.3e}"
        )
    Psi = (Q * (lam ** -0.5)) @ Q.T
    Phi = (Q * (lam ** 0.5)) @ Q.T
    a = 0.5 * th @ th.T
    sg = th @ Th.T @ Psi
    alpha = 0.5 * sg @ sg.T
    ahat = a - alpha
    Bd = spec.Bdot(t, y)
    tc = np.vstack([th, Th])
    return DerivedFields(
        a=a,
        alpha=alpha,
        ahat=ahat,
        sigma=sg,
        Psi=Psi,
        Phi=Phi,
        h_slope=Bd @ Psi,
        h_level=Psi @ spec.B0(t, y),
        b_slope=spec.bdot(t, y),
        b_level=spec.b0(t, y),
        acheck=0.5 * tc @ tc.T,
    )


def drift_at(spec: ModelSpec, t: float, z: np.ndarray) -> tuple:
    """Signal and observation drifts at full state z = (x, y)."""
    x = z[: spec.d]
    y = z[spec.d:]
    b = spec.bdot(t, y).T @ x + spec.b0(t, y)
    B = spec.Bdot(t, y).T @ x + spec.B0(t, y)
    return b, B


@dataclass
class SamplingPlan:
    """Where validate_model probes the coefficient fields."""

    t_max: float = 1.0
    n_t: int = 5
    n_y: int = 24
    y_scale: float = 3.0
    seed: int = 0


@dataclass
class ValidationReport:
    ok: bool
    n_samples: int
    acheck_min: float
    ahat_min: float
    obs_noise_min: float
    bounds: dict = field(default_factory=dict)
    lipschitz: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)


def validate_model(spec: ModelSpec, plan: SamplingPlan | None = None) -> ValidationReport:
    """Check the structural assumptions on a sample of (t, y) points.

    Verifies dw >= d + dy (the stacked diffusion cannot otherwise have
    full rank), uniform positive definiteness of the stacked gram matrix
    and of the effective diffusion ahat, invertibility of the
    observation noise covariance, and finite bounds plus empirical
    Lipschitz-in-y constants for every coefficient.  Raises
    ModelValidationError on the first hard failure; soft diagnostics
    land in the report.
    """
    if plan is None:
        plan = SamplingPlan()
    if spec.dw < spec.d1:
        raise ModelValidationError(
            f"driving Wiener dimension dw={spec.dw} is below d+dy={spec.d1}; "
            "the stacked diffusion cannot be nondegenerate"
        )
    rng = np.random.default_rng(plan.seed)
    ts = np.linspace(0.0, plan.t_max, plan.n_t)
    ys = rng.normal(0.0, plan.y_scale, size=(plan.n_y, spec.dy))
    ys[0] = 0.0

    acheck_min = np.inf
    ahat_min = np.inf
    noise_min = np.inf
    names = ("theta", "Theta", "bdot", "b0", "Bdot", "B0")
    bounds = {name: 0.0 for name in names}
    lips = {name: 0.0 for name in names}
    n_samples = 0
    for t in ts:
        for y in ys:
            fields_ty = derived_at(spec, t, y)
            noise = np.linalg.eigvalsh(fields_ty.Phi @ fields_ty.Phi)[0]
            acheck_min = min(acheck_min, np.linalg.eigvalsh(fields_ty.acheck)[0])
            ahat_min = min(ahat_min, np.linalg.eigvalsh(fields_ty.ahat)[0])
            noise_min = min(noise_min, noise)
            if acheck_min <= EIG_FLOOR:
                raise ModelValidationError(
                    "stacked diffusion gram matrix is degenerate at "
                    f"(t, y)=({t:.6g}, {np.array2string(y, precision=4)}): "
                    f"min eigenvalue {acheck_min:.3e}"
                )
            if ahat_min <= EIG_FLOOR:
                raise ModelValidationError(
                    "effective diffusion a - alpha is degenerate at "
                    f"(t, y)=({t:.6g}, {np.array2string(y, precision=4)}): "
                    f"min eigenvalue {ahat_min:.3e}"
                )
            for name in names:
                val = getattr(spec, name)(t, y)
                bounds[name] = max(bounds[name], float(np.max(np.abs(val))))
            n_samples += 1
        # Lipschitz-in-y finite differences on random pairs at this t
        for _ in range(8):
            y1, y2 = rng.normal(0.0, plan.y_scale, size=(2, spec.dy))
            gap = np.linalg.norm(y1 - y2)
            if gap < 1e-12:
                continue
            for name in names:
                coef = getattr(spec, name)
                if coef.is_constant:
                    continue
                diff = np.max(np.abs(coef(t, y1) - coef(t, y2)))
                lips[name] = max(lips[name], float(diff / gap))
    for name in names:
        if not np.isfinite(bounds[name]):
            raise ModelValidationError(f"coefficient {name} is unbounded on the sample set")
    return ValidationReport(
        ok=True,
        n_samples=n_samples,
        acheck_min=float(acheck_min),
        ahat_min=float(ahat_min),
        obs_noise_min=float(noise_min),
        bounds=bounds,
        lipschitz=lips,
    )


@dataclass(frozen=True)
class FieldSeries:
    """Derived fields sampled at the left endpoint of every step.

    Arrays have a leading axis of length N (the step count).  For
    constant-coefficient models these are broadcast views of a single
    evaluation; call np.ascontiguousarray before handing them to a
    kernel that requires contiguous storage.
    """

    a: np.ndarray        # (N, d, d)
    ahat: np.ndarray     # (N, d, d)
    sigma: np.ndarray    # (N, d, dy)
    h_slope: np.ndarray  # (N, d, dy)
    h_level: np.ndarray  # (N, dy)
    b_slope: np.ndarray  # (N, d, d)
    b_level: np.ndarray  # (N, d)


def fields_along(spec: ModelSpec, times: np.ndarray, y: np.ndarray) -> FieldSeries:
    """Sample derived fields at the given (t, y) pairs.

    Entry k of the series is the derived set at (times[k], y[k]).  Step
    integrators pass the left endpoints times[:-1], y[:-1] so the series
    pairs elementwise with per-step increments.
    """
    N = len(times)
    if spec.is_constant:
        f = derived_at(spec, float(times[0]), y[0])
        return FieldSeries(
            a=np.broadcast_to(f.a, (N,) + f.a.shape),
            ahat=np.broadcast_to(f.ahat, (N,) + f.ahat.shape),
            sigma=np.broadcast_to(f.sigma, (N,) + f.sigma.shape),
            h_slope=np.broadcast_to(f.h_slope, (N,) + f.h_slope.shape),
            h_level=np.broadcast_to(f.h_level, (N,) + f.h_level.shape),
            b_slope=np.broadcast_to(f.b_slope, (N,) + f.b_slope.shape),
            b_level=np.broadcast_to(f.b_level, (N,) + f.b_level.shape),
        )
    d, dy = spec.d, spec.dy
    out = FieldSeries(
        a=np.empty((N, d, d)),
        ahat=np.empty((N, d, d)),
        sigma=np.empty((N, d, dy)),
        h_slope=np.empty((N, d, dy)),
        h_level=np.empty((N, dy)),
        b_slope=np.empty((N, d, d)),
        b_level=np.empty((N, d)),
    )
    for k in range(N):
        f = derived_at(spec, float(times[k]), y[k])
        out.a[k] = f.a
        out.ahat[k] = f.ahat
        out.sigma[k] = f.sigma
        out.h_slope[k] = f.h_slope
        out.h_level[k] = f.h_level
        out.b_slope[k] = f.b_slope
        out.b_level[k] = f.b_level
    return out


# ---------------------------------------------------------------------------
# stock models

def classic_scalar() -> ModelSpec:
    """OU signal observed in independent unit noise.

    dx = -x dt + dw1, dy = x dt + dw2.  The inverse conditional variance
    has the closed-form fixed point 1 + sqrt(2).
    """
    return ModelSpec(
        d=1, dy=1, dw=2,
        theta=constant([[1.0, 0.0]]),
        Theta=constant([[0.0, 1.0]]),
        bdot=constant([[-1.0]]),
        b0=constant([0.0]),
        Bdot=constant([[1.0]]),
        B0=constant([0.0]),
        label="classic-scalar",
    )


def scalar_correlated(rho: float = 0.5) -> ModelSpec:
    """Scalar model with signal noise leaking into the observation channel.

    theta = (1, rho) against Theta = (0, 1) gives sigma = rho, so the
    gradient term of the density equation is active.
    """
    return ModelSpec(
        d=1, dy=1, dw=2,
        theta=constant([[1.0, rho]]),
        Theta=constant([[0.0, 1.0]]),
        bdot=constant([[-1.0]]),
        b0=constant([0.0]),
        Bdot=constant([[1.0]]),
        B0=constant([0.0]),
        label=f"scalar-correlated-{rho:g}",
    )


def silent_observation(rho: float = 0.5) -> ModelSpec:
    """Correlated-noise model whose observation drift is identically zero.

    With B = 0 the density equation keeps its gradient noise term but
    total mass is conserved pathwise, which makes this the mass-drift
    control model.
    """
    return ModelSpec(
        d=1, dy=1, dw=2,
        theta=constant([[1.0, rho]]),
        Theta=constant([[0.0, 1.0]]),
        bdot=constant([[-1.0]]),
        b0=constant([0.0]),
        Bdot=constant([[0.0]]),
        B0=constant([0.0]),
        label=f"silent-observation-{rho:g}",
    )


def random_bounded(seed: int, y_dependent: bool = False) -> ModelSpec:
    """Seeded random model with bounded coefficients and nondegenerate noise.

    Dimensions are drawn as d in 1..3, dy in 1..2, dw = d + dy + 1.  The
    diffusion rows carry identity anchors so the stacked gram matrix
    stays uniformly positive definite.  With ``y_dependent`` one
    coefficient field is replaced by a bounded sigmoid family.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    d = int(rng.integers(1, 4))
    dy = int(rng.integers(1, 3))
    dw = d + dy + 1
    th = 0.3 * rng.uniform(-1.0, 1.0, size=(d, dw))
    th[:, :d] += np.diag(rng.uniform(0.8, 1.3, size=d))
    Th = 0.3 * rng.uniform(-1.0, 1.0, size=(dy, dw))
    Th[:, d:d + dy] += np.diag(rng.uniform(0.8, 1.3, size=dy))
    bd = 0.3 * rng.uniform(-1.0, 1.0, size=(d, d)) + np.diag(rng.uniform(-1.2, -0.4, size=d))
    Bd = rng.uniform(-0.8, 0.8, size=(d, dy))
    b_0 = rng.uniform(-0.5, 0.5, size=d)
    B_0 = rng.uniform(-0.5, 0.5, size=dy)
    bdot_c = constant(bd)
    Bdot_c = constant(Bd)
    if y_dependent:
        Bdot_c = sigmoid(Bd, 0.25 * rng.uniform(-1.0, 1.0, size=(d, dy)), scale=0.7)
    return ModelSpec(
        d=d, dy=dy, dw=dw,
        theta=constant(th),
        Theta=constant(Th),
        bdot=bdot_c,
        b0=constant(b_0),
        Bdot=Bdot_c,
        B0=constant(B_0),
        label=f"random-bounded-{seed}",
    )
