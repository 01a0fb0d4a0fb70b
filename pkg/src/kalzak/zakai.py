"""Grid solvers for the unnormalized density and its transformed twin.

Two equations share one splitting scheme.  The direct equation evolves
the unnormalized conditional density with a conservative (flux form)
second-order operator; the transformed equation evolves the density
divided by exp(-Q), which trades the unbounded observation drift for
time-dependent advection built from the quadratic-form run.  Each step
solves the deterministic operator implicitly on the interior and then
applies the stochastic operator explicitly with the left-endpoint
whitened observation increment (optional Milstein correction).

1-D single-channel runs dispatch to the compiled backend kernels; 2-D
runs (and 1-D with several observation channels) assemble sparse
interior matrices per step and factorize with SuperLU.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import _backends
from .errors import MassError, NumericError
from .grids import DensityGrid, box_halfwidth, init_density, integral
from .models import ModelSpec, fields_along
from .riccati import FilterRun, QuadraticForm, run_filter

__all__ = [
    "SolverOptions",
    "ZakaiRun",
    "apply_lstar",
    "apply_lambdastar",
    "zakai_step",
    "reduced_step",
    "run_zakai",
    "run_reduced",
    "reconstruct",
    "normalize_stack",
    "closed_form_snapshots",
    "l1_distance",
    "EnergyDiagnostic",
    "energy_diagnostic",
    "cfl_suggest",
]


@dataclass
class SolverOptions:
    """Knobs shared by the direct and transformed runs.

    milstein adds the second-order stochastic correction (in several
    channels the cross terms assume the noise operators commute, which
    holds up to a bounded commutator here; the strong-order tests run
    single-channel).  cfl is "warn", "raise" or "off" and governs what
    happens when the path step exceeds the advisory bound.  Snapshots
    beyond max_snapshots are thinned uniformly when the full series
    would be large (2-D); 1-D runs keep every step unless store_series
    is switched off.
    """

    milstein: bool = True
    store_series: bool = True
    max_snapshots: int = 64
    cfl: str = "warn"


# ---------------------------------------------------------------------------
# operators on nodal values


def _mesh(axes: tuple) -> tuple:
    if len(axes) == 1:
        return axes[0][:, None], axes[0].shape
    X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.stack([X, Y], axis=-1).reshape(-1, 2), X.shape


def _grad_central(u: np.ndarray, h: float) -> np.ndarray:
    """Central differences with zero boundary rows, shape (dim, *u.shape)."""
    g = np.zeros((u.ndim,) + u.shape)
    if u.ndim == 1:
        g[0, 1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    else:
        g[0, 1:-1, :] = (u[2:, :] - u[:-2, :]) / (2.0 * h)
        g[1, :, 1:-1] = (u[:, 2:] - u[:, :-2]) / (2.0 * h)
    return g


def _zero_boundary(u: np.ndarray):
    if u.ndim == 1:
        u[0] = 0.0
        u[-1] = 0.0
    else:
        u[0, :] = 0.0
        u[-1, :] = 0.0
        u[:, 0] = 0.0
        u[:, -1] = 0.0


def _assemble_1d(axis, h, a00, drift, slope, level):
    """Interior tridiagonal of the deterministic operator, as sparse.

    drift "flux" divides midpoint fluxes (conservative form used by the
    direct equation); "advect" applies nodal central advection (the
    transformed equation's non-divergence form).
    """
    n = len(axis)
    ni = n - 2
    if drift == "flux":
        xm = 0.5 * (axis[:-1] + axis[1:])
        bmid = slope * xm + level
        lower = a00 / h ** 2 + bmid[:-1] / (2.0 * h)
        diag = -2.0 * a00 / h ** 2 - (bmid[1:] - bmid[:-1]) / (2.0 * h)
        upper = a00 / h ** 2 - bmid[1:] / (2.0 * h)
    else:
        c = slope * axis[1:-1] + level
        lower = a00 / h ** 2 - c / (2.0 * h)
        diag = np.full(ni, -2.0 * a00 / h ** 2)
        upper = a00 / h ** 2 + c / (2.0 * h)
    return sp.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csc")


def _assemble_2d(axis, h, a_mat, drift, slope_mat, level_vec):
    """Interior nine-point matrix of the deterministic operator (2-D).

    The diffusion tensor is constant in space at a given step, so the
    conservative and non-divergence second-order parts coincide; only
    the first-order term differs between the two equations, exactly as
    in the 1-D assembly.
    """
    n = len(axis)
    ni = n - 2
    xi = axis[1:-1]
    I, J = np.meshgrid(np.arange(ni), np.arange(ni), indexing="ij")
    I = I.ravel()
    J = J.ravel()
    X = xi[I]
    Y = xi[J]
    a00, a01, a11 = a_mat[0, 0], a_mat[0, 1], a_mat[1, 1]

    rows, cols, vals = [], [], []

    def add(di, dj, data):
        ok = (I + di >= 0) & (I + di < ni) & (J + dj >= 0) & (J + dj < ni)
        rows.append((I * ni + J)[ok])
        cols.append(((I + di) * ni + (J + dj))[ok])
        vals.append(np.broadcast_to(data, I.shape)[ok])

    if drift == "flux":
        bxp = slope_mat[0, 0] * (X + 0.5 * h) + slope_mat[1, 0] * Y + level_vec[0]
        bxm = slope_mat[0, 0] * (X - 0.5 * h) + slope_mat[1, 0] * Y + level_vec[0]
        byp = slope_mat[0, 1] * X + slope_mat[1, 1] * (Y + 0.5 * h) + level_vec[1]
        bym = slope_mat[0, 1] * X + slope_mat[1, 1] * (Y - 0.5 * h) + level_vec[1]
        add(0, 0, -2.0 * (a00 + a11) / h ** 2
            - (bxp - bxm) / (2.0 * h) - (byp - bym) / (2.0 * h))
        add(+1, 0, a00 / h ** 2 - bxp / (2.0 * h))
        add(-1, 0, a00 / h ** 2 + bxm / (2.0 * h))
        add(0, +1, a11 / h ** 2 - byp / (2.0 * h))
        add(0, -1, a11 / h ** 2 + bym / (2.0 * h))
    else:
        cx = slope_mat[0, 0] * X + slope_mat[0, 1] * Y + level_vec[0]
        cy = slope_mat[1, 0] * X + slope_mat[1, 1] * Y + level_vec[1]
        add(0, 0, np.full(I.shape, -2.0 * (a00 + a11) / h ** 2))
        add(+1, 0, a00 / h ** 2 + cx / (2.0 * h))
        add(-1, 0, a00 / h ** 2 - cx / (2.0 * h))
        add(0, +1, a11 / h ** 2 + cy / (2.0 * h))
        add(0, -1, a11 / h ** 2 - cy / (2.0 * h))
    if a01 != 0.0:
        c = a01 / (2.0 * h ** 2)
        add(+1, +1, c)
        add(-1, -1, c)
        add(+1, -1, -c)
        add(-1, +1, -c)
    m = ni * ni
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m, m),
    ).tocsc()


def apply_lstar(grid: DensityGrid, a_mat, b_slope, b_level) -> np.ndarray:
    """Conservative second-order operator applied to nodal values.

    Drift vector at a point x is b_slope^T x + b_level; the diffusion
    tensor a_mat is constant over the box.  Boundary rows are zero
    (homogeneous Dirichlet).  Uses the same stencil the implicit solver
    inverts, so one explicit application is directly comparable.
    """
    a_mat = np.atleast_2d(np.asarray(a_mat, dtype=float))
    b_slope = np.atleast_2d(np.asarray(b_slope, dtype=float))
    b_level = np.atleast_1d(np.asarray(b_level, dtype=float))
    if grid.dim == 1:
        L = _assemble_1d(grid.axes[0], grid.h, a_mat[0, 0], "flux",
                         b_slope[0, 0], b_level[0])
    else:
        L = _assemble_2d(grid.axes[0], grid.h, a_mat, "flux", b_slope, b_level)
    out = np.zeros_like(grid.values)
    inner = (slice(1, -1),) * grid.dim
    out[inner] = (L @ grid.values[inner].ravel()).reshape(out[inner].shape)
    return out


def apply_lambdastar(grid: DensityGrid, sigma, h_slope, h_level) -> np.ndarray:
    """Stochastic operator channels applied to nodal values, (dy, *shape).

    Channel k is -sum_i sigma[i,k] D_i u + (h_slope^T x + h_level)_k u
    with central differences and zero boundary rows.
    """
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    h_slope = np.atleast_2d(np.asarray(h_slope, dtype=float))
    h_level = np.atleast_1d(np.asarray(h_level, dtype=float))
    dy = h_level.shape[0]
    pts, shape = _mesh(grid.axes)
    g = _grad_central(grid.values, grid.h)
    out = np.empty((dy,) + grid.values.shape)
    for c in range(dy):
        fld = (pts @ h_slope[:, c] + h_level[c]).reshape(shape)
        out[c] = fld * grid.values
        for i in range(grid.dim):
            out[c] -= sigma[i, c] * g[i]
        _zero_boundary(out[c])
    return out


# ---------------------------------------------------------------------------
# single 1-D steps, readable twins of the backend kernels


def zakai_step(u, axis, h, dt, dy_inc, a00, bs, b0, sg, hs, h0, milstein=True):
    """One splitting step of the direct equation on a 1-D grid."""
    n = len(axis)
    L = _assemble_1d(axis, h, a00, "flux", bs, b0)
    A = sp.identity(n - 2, format="csc") - dt * L
    v = np.zeros(n)
    v[1:-1] = splu(A).solve(u[1:-1])
    fld = hs * axis + h0
    lam = np.zeros(n)
    lam[1:-1] = -sg * (v[2:] - v[:-2]) / (2.0 * h) + fld[1:-1] * v[1:-1]
    out = v + lam * dy_inc
    if milstein:
        lam2 = np.zeros(n)
        lam2[1:-1] = -sg * (lam[2:] - lam[:-2]) / (2.0 * h) + fld[1:-1] * lam[1:-1]
        out += 0.5 * lam2 * (dy_inc ** 2 - dt)
    out[0] = 0.0
    out[-1] = 0.0
    return out


def reduced_step(u, axis, h, dt, dy_inc, a00, sg, cs, c0, milstein=True):
    """One splitting step of the transformed equation on a 1-D grid."""
    n = len(axis)
    L = _assemble_1d(axis, h, a00, "advect", cs, c0)
    A = sp.identity(n - 2, format="csc") - dt * L
    v = np.zeros(n)
    v[1:-1] = splu(A).solve(u[1:-1])
    lam = np.zeros(n)
    lam[1:-1] = -sg * (v[2:] - v[:-2]) / (2.0 * h)
    out = v + lam * dy_inc
    if milstein:
        lam2 = np.zeros(n)
        lam2[1:-1] = -sg * (lam[2:] - lam[:-2]) / (2.0 * h)
        out += 0.5 * lam2 * (dy_inc ** 2 - dt)
    out[0] = 0.0
    out[-1] = 0.0
    return out


# ---------------------------------------------------------------------------
# full runs


@dataclass
class ZakaiRun:
    """Output of a grid run: snapshots plus per-step mass diagnostics.

    series stacks the stored snapshots (K, n) or (K, n, n); the steps
    they belong to are in snapshot_steps.  mass and minval cover every
    step regardless of thinning.  kind is "direct" or "reduced"; a
    reduced run needs the quadratic-form run it was built against to
    mean anything, see reconstruct().
    """

    spec: ModelSpec
    kind: str
    times: np.ndarray
    h: float
    axes: tuple
    snapshot_steps: np.ndarray
    series: np.ndarray
    mass: np.ndarray
    minval: np.ndarray
    opts: SolverOptions
    q0: QuadraticForm | None = None
    meta: dict = dc_field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def L(self) -> float:
        return float(self.axes[0][-1])

    @property
    def final(self) -> np.ndarray:
        return self.series[-1]

    @property
    def snapshot_times(self) -> np.ndarray:
        return self.times[self.snapshot_steps]

    def density(self, j: int) -> DensityGrid:
        return DensityGrid(dim=self.dim, h=self.h, axes=self.axes,
                           values=self.series[j].copy(), kind=self.kind)


def _snapshot_steps(N: int, dim: int, opts: SolverOptions) -> np.ndarray:
    if not opts.store_series:
        return np.array([0, N])
    if dim == 1:
        return np.arange(N + 1)
    k = min(opts.max_snapshots, N + 1)
    return np.unique(np.round(np.linspace(0, N, k)).astype(int))


def _check_cfl(spec, path, h, L, opts):
    if opts.cfl == "off":
        return
    bound = cfl_suggest(spec, path, h, L)
    if path.dt <= bound * (1.0 + 1e-12):
        return
    msg = (f"path step dt={path.dt:g} exceeds the advisory bound "
           f"{bound:g} for h={h:g} (explicit stochastic update)")
    if opts.cfl == "raise":
        raise NumericError(msg)
    warnings.warn(msg, RuntimeWarning, stacklevel=3)


def _scan_series(kind, series, times, h, dim):
    """Mass and minimum per step, with finiteness and positivity guards."""
    axes_sum = tuple(range(1, dim + 1))
    finite = np.isfinite(series).all(axis=axes_sum)
    if not finite.all():
        k = int(np.argmin(finite))
        raise MassError(f"{kind} run lost finiteness at step {k} "
                        f"(t={times[k]:.6g}); reduce dt or enlarge the box")
    mass = series.sum(axis=axes_sum) * h ** dim
    if kind == "direct" and (mass <= 0.0).any():
        k = int(np.argmax(mass <= 0.0))
        raise MassError(f"direct run mass turned non-positive at step {k} "
                        f"(t={times[k]:.6g})")
    return mass, series.min(axis=axes_sum)


def _per_step_scalars(fields):
    C = lambda v: np.ascontiguousarray(v, dtype=np.float64)
    return (C(fields.a[:, 0, 0]), C(fields.b_slope[:, 0, 0]),
            C(fields.b_level[:, 0]), C(fields.sigma[:, 0, 0]),
            C(fields.h_slope[:, 0, 0]), C(fields.h_level[:, 0]))


def _run_generic(spec, path, u0, fields, kind, filter_run, opts, axes, h):
    """Python stepping loop shared by 2-D runs and multi-channel 1-D runs."""
    N = path.n_steps
    dt = path.dt
    dyt = path.dytilde
    dy = spec.dy
    dim = spec.d
    axis = axes[0]
    pts, shape = _mesh(axes)
    inner = (slice(1, -1),) * dim
    steps = _snapshot_steps(N, dim, opts)
    keep = np.zeros(N + 1, dtype=bool)
    keep[steps] = True
    series = np.empty((len(steps),) + u0.shape)
    mass = np.empty(N + 1)
    minval = np.empty(N + 1)
    u = u0.copy()
    stored = 0
    if keep[0]:
        series[stored] = u
        stored += 1
    mass[0] = u.sum() * h ** dim
    minval[0] = u.min()

    lu = None
    for k in range(N):
        if lu is None or not spec.is_constant or kind == "reduced":
            a_k = fields.a[k]
            if kind == "direct":
                slope, level = fields.b_slope[k], fields.b_level[k]
                mode = "flux"
            else:
                S = fields.sigma[k] @ fields.h_slope[k].T
                slope = (S - 2.0 * fields.ahat[k] @ filter_run.W[k]
                         - fields.b_slope[k].T)
                level = (fields.sigma[k] @ fields.h_level[k]
                         - 2.0 * fields.ahat[k] @ filter_run.V[k]
                         - fields.b_level[k])
                mode = "advect"
            if dim == 1:
                Lmat = _assemble_1d(axis, h, a_k[0, 0], mode,
                                    slope[0, 0], level[0])
            else:
                Lmat = _assemble_2d(axis, h, a_k, mode, slope, level)
            lu = splu(sp.identity(Lmat.shape[0], format="csc") - dt * Lmat)

        v = np.zeros_like(u)
        v[inner] = lu.solve(u[inner].ravel()).reshape(v[inner].shape)

        sig_k = fields.sigma[k]
        if kind == "direct":
            flds = [(pts @ fields.h_slope[k][:, c] + fields.h_level[k][c])
                    .reshape(shape) for c in range(dy)]
        else:
            flds = [None] * dy

        def lam_apply(w):
            g = _grad_central(w, h)
            out = np.empty((dy,) + w.shape)
            for c in range(dy):
                out[c] = -sum(sig_k[i, c] * g[i] for i in range(dim))
                if flds[c] is not None:
                    out[c] += flds[c] * w
                _zero_boundary(out[c])
            return out

        lam = lam_apply(v)
        u = v + np.tensordot(dyt[k], lam, axes=(0, 0))
        if opts.milstein:
            for c2 in range(dy):
                lam2 = lam_apply(lam[c2])
                for c1 in range(dy):
                    w2 = dyt[k, c1] * dyt[k, c2] - (dt if c1 == c2 else 0.0)
                    u += 0.5 * w2 * lam2[c1]
        _zero_boundary(u)

        m = u.sum() * h ** dim
        if not np.isfinite(m):
            raise MassError(f"{kind} run lost finiteness at step {k + 1} "
                            f"(t={path.times[k + 1]:.6g})")
        if kind == "direct" and m <= 0.0:
            raise MassError(f"direct run mass turned non-positive at step "
                            f"{k + 1} (t={path.times[k + 1]:.6g})")
        mass[k + 1] = m
        minval[k + 1] = u.min()
        if keep[k + 1]:
            series[stored] = u
            stored += 1
    return steps, series, mass, minval


def _prepare(spec, path, q0, h, L, filter_run, opts, need_filter):
    path.require_healthy()
    opts = opts or SolverOptions()
    q0 = q0 or QuadraticForm.isotropic(spec.d)
    if spec.d not in (1, 2):
        raise ValueError(f"grid runs support d in (1, 2), got d={spec.d}")
    if filter_run is None and (need_filter or L is None):
        filter_run = run_filter(spec, path, q0=q0)
    if L is None:
        L = box_halfwidth(filter_run)
    grid0 = init_density(spec.d, L, h, kind="exp_neg_q", q=q0)
    _check_cfl(spec, path, h, grid0.L, opts)
    fields = fields_along(spec, path.times[:-1], path.y[:-1])
    return opts, q0, filter_run, grid0, fields


def run_zakai(spec: ModelSpec, path, q0: QuadraticForm | None = None,
              h: float = 0.05, L: float | None = None,
              filter_run: FilterRun | None = None,
              opts: SolverOptions | None = None) -> ZakaiRun:
    """Direct run of the unnormalized density equation along one path.

    The initial profile is exp(-q0) scaled to unit mass.  The box
    half-width defaults to the closed-form mean plus eight deviations
    over the whole run (a quadratic-form run is computed when neither
    filter_run nor L is given).  The path's own step is the solver
    step; refine by simulating (or coarsening) the path accordingly.
    """
    opts, q0, filter_run, grid0, fields = _prepare(
        spec, path, q0, h, L, filter_run, opts, need_filter=False)
    m0 = integral(grid0)
    u0 = grid0.values / m0
    if spec.d == 1 and spec.dy == 1:
        a, bs, b0, sg, hs, h0 = _per_step_scalars(fields)
        kernel = _backends.active()
        series = kernel.zakai_1d(
            np.ascontiguousarray(u0), np.ascontiguousarray(grid0.axes[0]),
            float(h), float(path.dt),
            np.ascontiguousarray(path.dytilde[:, 0]),
            a, bs, b0, sg, hs, h0, bool(opts.milstein))
        series = np.asarray(series)
        mass, minval = _scan_series("direct", series, path.times, h, 1)
        steps = _snapshot_steps(path.n_steps, 1, opts)
        series = series[steps] if len(steps) != len(series) else series
    else:
        steps, series, mass, minval = _run_generic(
            spec, path, u0, fields, "direct", filter_run, opts, grid0.axes, h)
    return ZakaiRun(spec=spec, kind="direct", times=path.times.copy(), h=h,
                    axes=grid0.axes, snapshot_steps=steps, series=series,
                    mass=mass, minval=minval, opts=opts, q0=q0,
                    meta={"backend": _backends.active_name(),
                          "initial_mass": m0})


def run_reduced(spec: ModelSpec, path, filter_run: FilterRun | None = None,
                q0: QuadraticForm | None = None, h: float = 0.05,
                L: float | None = None, pihat0: np.ndarray | None = None,
                opts: SolverOptions | None = None) -> ZakaiRun:
    """Run of the transformed equation (density divided by exp(-Q)).

    Needs the quadratic-form run for its advection coefficients; one is
    computed from q0 when not supplied.  The default initial value is
    the constant 1/mass(exp(-q0)), which makes exp(-Q_0) times it match
    the direct run's normalized start exactly.
    """
    opts, q0, filter_run, grid0, fields = _prepare(
        spec, path, q0, h, L, filter_run, opts, need_filter=True)
    if pihat0 is None:
        u0 = np.full(grid0.values.shape, 1.0 / integral(grid0))
    else:
        u0 = np.asarray(pihat0, dtype=float).reshape(grid0.values.shape).copy()
    _zero_boundary(u0)
    if spec.d == 1 and spec.dy == 1:
        a, bs, b0, sg, hs, h0 = _per_step_scalars(fields)
        ah = np.ascontiguousarray(fields.ahat[:, 0, 0], dtype=np.float64)
        W = filter_run.W[:-1, 0, 0]
        V = filter_run.V[:-1, 0]
        cs = np.ascontiguousarray(sg * hs - 2.0 * ah * W - bs)
        c0 = np.ascontiguousarray(sg * h0 - 2.0 * ah * V - b0)
        kernel = _backends.active()
        series = kernel.reduced_1d(
            np.ascontiguousarray(u0), np.ascontiguousarray(grid0.axes[0]),
            float(h), float(path.dt),
            np.ascontiguousarray(path.dytilde[:, 0]),
            a, sg, cs, c0, bool(opts.milstein))
        series = np.asarray(series)
        mass, minval = _scan_series("reduced", series, path.times, h, 1)
        steps = _snapshot_steps(path.n_steps, 1, opts)
        series = series[steps] if len(steps) != len(series) else series
    else:
        steps, series, mass, minval = _run_generic(
            spec, path, u0, fields, "reduced", filter_run, opts, grid0.axes, h)
    return ZakaiRun(spec=spec, kind="reduced", times=path.times.copy(), h=h,
                    axes=grid0.axes, snapshot_steps=steps, series=series,
                    mass=mass, minval=minval, opts=opts, q0=q0,
                    meta={"backend": _backends.active_name()})


# ---------------------------------------------------------------------------
# post-processing


def reconstruct(run: ZakaiRun, filter_run: FilterRun) -> np.ndarray:
    """Densities exp(-Q_t) * pihat_t at the run's snapshots, stacked.

    Applies to a reduced run; the result is unnormalized and lives on
    the run's grid.
    """
    if run.kind != "reduced":
        raise ValueError("reconstruct needs a reduced run")
    pts, shape = _mesh(run.axes)
    out = np.empty_like(run.series)
    for j, step in enumerate(run.snapshot_steps):
        q = filter_run.form_at(int(step))
        out[j] = q.eta(pts).reshape(shape) * run.series[j]
    return out


def normalize_stack(stack: np.ndarray, h: float, dim: int) -> np.ndarray:
    """Clip each snapshot's undershoot and scale it to unit mass."""
    flat = stack.reshape(stack.shape[0], -1)
    clipped = np.clip(flat, 0.0, None)
    mass = clipped.sum(axis=1) * h ** dim
    if not np.all(np.isfinite(mass)) or (mass <= 0.0).any():
        j = int(np.argmin((mass > 0.0) & np.isfinite(mass)))
        raise MassError(f"snapshot {j} has mass {mass[j]!r}, cannot normalize")
    return (clipped / mass[:, None]).reshape(stack.shape)


def closed_form_snapshots(filter_run: FilterRun, axes: tuple,
                          steps: np.ndarray) -> np.ndarray:
    """Normalized Gaussian filter densities on a grid at the given steps."""
    pts, shape = _mesh(axes)
    h = float(axes[0][1] - axes[0][0])
    dim = len(axes)
    out = np.empty((len(steps),) + shape)
    for j, step in enumerate(steps):
        q = filter_run.form_at(int(step))
        vals = q.eta(pts).reshape(shape)
        out[j] = vals / (vals.sum() * h ** dim)
    return out


def l1_distance(a: np.ndarray, b: np.ndarray, h: float, dim: int) -> np.ndarray:
    """L1 grid distance per snapshot for stacked value arrays."""
    diff = np.abs(a - b).reshape(a.shape[0], -1)
    return diff.sum(axis=1) * h ** dim


# ---------------------------------------------------------------------------
# energy identity for the transformed equation


@dataclass
class EnergyDiagnostic:
    """Weighted p-norm balance along a reduced run.

    weight is the exponential growth compensator built from the trace
    terms; weighted[k] = weight[k] * norms[k] should fall monotonically
    and the full balance (weighted norm plus the accumulated dissipation
    integral minus the start) should vanish as the grid refines.
    """

    p: float
    growth_trace_weight: float
    dissipation_matrix: str
    weight: np.ndarray
    norms: np.ndarray
    dissipation: np.ndarray
    residual: np.ndarray
    max_uptick: float
    max_residual: float

    @property
    def weighted(self) -> np.ndarray:
        return self.weight * self.norms

    @property
    def relative_residual(self) -> float:
        return float(self.max_residual / self.norms[0])


def energy_diagnostic(spec: ModelSpec, path, run: ZakaiRun,
                      filter_run: FilterRun, p: float = 2.0,
                      growth_trace_weight: float = 2.0,
                      dissipation_matrix: str = "ahat") -> EnergyDiagnostic:
    """Evaluate the p-norm energy balance along a reduced run.

    The compensated norm G_t ||pihat_t||_p^p plus p(p-1) times the
    accumulated weighted dissipation integral is constant in the
    continuum; its growth rate uses tr(sigma h_slope^T) minus
    growth_trace_weight * tr(ahat W) minus tr(b_slope).  The weight 2
    on the tr(ahat W) term and the ahat dissipation tensor are the
    combination under which the discrete residual actually converges;
    both knobs stay adjustable for side-by-side comparison runs.
    Requires the full per-step series (1-D runs keep it by default).
    """
    if run.kind != "reduced":
        raise ValueError("energy diagnostic applies to a reduced run")
    if p < 2.0:
        raise ValueError("p must be at least 2")
    N = len(run.times) - 1
    if len(run.snapshot_steps) != N + 1:
        raise ValueError("energy diagnostic needs every step stored "
                         "(run with store_series=True on a 1-D grid)")
    if dissipation_matrix not in ("ahat", "a"):
        raise ValueError("dissipation_matrix must be 'ahat' or 'a'")
    dt = float(run.times[1] - run.times[0])
    dim = run.dim
    h = run.h
    fields = fields_along(spec, run.times[:-1], path.y[:-1])
    W = filter_run.W[:-1]

    gamma = (np.einsum("kic,kic->k", fields.sigma, fields.h_slope)
             - growth_trace_weight * np.einsum("kij,kji->k", fields.ahat, W)
             - np.trace(fields.b_slope, axis1=1, axis2=2))
    weight = np.concatenate([[1.0], np.exp(np.cumsum(gamma * dt))])

    flat = run.series.reshape(N + 1, -1)
    norms = (np.abs(flat) ** p).sum(axis=1) * h ** dim

    amat = fields.ahat if dissipation_matrix == "ahat" else fields.a
    dissipation = np.empty(N)
    for k in range(N):
        u = run.series[k]
        g = _grad_central(u, h)
        quad = np.zeros_like(u)
        for i in range(dim):
            for j in range(dim):
                quad += amat[k][i, j] * g[i] * g[j]
        dissipation[k] = ((np.abs(u) ** (p - 2.0)) * quad).sum() * h ** dim

    acc = np.concatenate([[0.0], np.cumsum(weight[:-1] * dissipation * dt)])
    residual = weight * norms + p * (p - 1.0) * acc - norms[0]
    weighted = weight * norms
    return EnergyDiagnostic(
        p=p, growth_trace_weight=growth_trace_weight,
        dissipation_matrix=dissipation_matrix, weight=weight, norms=norms,
        dissipation=dissipation, residual=residual,
        max_uptick=float(np.max(np.diff(weighted))),
        max_residual=float(np.max(np.abs(residual))),
    )


# ---------------------------------------------------------------------------
# step-size advisory


def cfl_suggest(spec: ModelSpec, path, h: float, L: float,
                safety: float = 0.5, samples: int = 256) -> float:
    """Advisory step bound for the explicit stochastic update.

    Combines the parabolic bound h^2 / (2 d max a_ii), the advection
    bound h / max |b|, and the observation-drift bound 1 / max |h(x)|^2,
    with drift and observation extremes taken over the box |x_i| <= L
    and coefficient extremes sampled along the path.  safety scales the
    overall minimum.  The implicit deterministic half is unconditionally
    stable; this guards the explicit half, so treat it as advice rather
    than a hard wall.
    """
    N = path.n_steps
    idx = np.unique(np.linspace(0, N - 1, min(samples, N)).astype(int))
    fields = fields_along(spec, path.times[idx], path.y[idx])
    amax = float(np.max(np.diagonal(fields.a, axis1=1, axis2=2)))
    bmax = float(np.max(np.abs(fields.b_slope).sum(axis=1) * L
                        + np.abs(fields.b_level)))
    hmax2 = float(np.max(((np.abs(fields.h_slope).sum(axis=1) * L
                           + np.abs(fields.h_level)) ** 2).sum(axis=1)))
    parts = [h ** 2 / (2.0 * spec.d * amax)]
    if bmax > 0.0:
        parts.append(h / bmax)
    if hmax2 > 0.0:
        parts.append(1.0 / hmax2)
    return safety * min(parts)
