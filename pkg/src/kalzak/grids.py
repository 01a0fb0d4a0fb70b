"""Density grids on truncated symmetric boxes.

Densities live on [-L, L]^dim (dim 1 or 2) with uniform spacing h, node
set chosen symmetric about the origin, and homogeneous Dirichlet ends.
With zero boundary values the trapezoid rule collapses to h^dim times
the plain nodal sum; moments use the same quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .errors import MassError
from .riccati import QuadraticForm

__all__ = [
    "DensityGrid",
    "make_axis",
    "init_density",
    "integral",
    "moments",
    "normalize",
    "box_halfwidth",
]


def make_axis(L: float, h: float) -> np.ndarray:
    """Symmetric node axis with spacing exactly h and half-width >= L."""
    if L <= 0 or h <= 0:
        raise ValueError(f"need positive box and spacing, got L={L}, h={h}")
    n_half = max(2, math.ceil(L / h - 1e-9))
    return np.linspace(-n_half * h, n_half * h, 2 * n_half + 1)


@dataclass
class DensityGrid:
    """Nodal values of a density on a symmetric box.

    axes holds one array per dimension (all identical spacing); values
    has shape (n,) in 1-D and (n, n) in 2-D with the first index running
    along axes[0].  meta carries run diagnostics such as the clipped
    mass fraction from the last normalize call.
    """

    dim: int
    h: float
    axes: tuple
    values: np.ndarray
    kind: str = "density"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.axes) != self.dim:
            raise ValueError("axes count does not match dim")
        expected = tuple(len(ax) for ax in self.axes)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape}, expected {expected}")

    @property
    def L(self) -> float:
        return float(self.axes[0][-1])

    @property
    def n(self) -> int:
        return len(self.axes[0])

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (n, 1) or (n, n, 2)."""
        if self.dim == 1:
            return self.axes[0][:, None]
        X, Y = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
        return np.stack([X, Y], axis=-1)

    def zero_boundary(self):
        if self.dim == 1:
            self.values[0] = 0.0
            self.values[-1] = 0.0
        else:
            self.values[0, :] = 0.0
            self.values[-1, :] = 0.0
            self.values[:, 0] = 0.0
            self.values[:, -1] = 0.0


def integral(grid: DensityGrid, values: np.ndarray | None = None) -> float:
    """Trapezoid integral over the box (exact nodal sum under zero ends)."""
    v = grid.values if values is None else values
    return float(v.sum() * grid.h ** grid.dim)


def _gauss_tail(L: float, mean: np.ndarray, cov: np.ndarray) -> float:
    # union bound on the mass a Gaussian leaves outside [-L, L]^dim
    out = 0.0
    for i in range(len(mean)):
        s = math.sqrt(cov[i, i])
        out += 0.5 * erfc((L - abs(mean[i])) / (math.sqrt(2.0) * s))
        out += 0.5 * erfc((L + abs(mean[i])) / (math.sqrt(2.0) * s))
    return out


def init_density(dim: int, L: float, h: float, kind: str = "exp_neg_q",
                 q: QuadraticForm | None = None, mean=None, cov=None,
                 fn=None, tail_tol: float = 1e-8) -> DensityGrid:
    """Initial density on a fresh grid.

    kind selects the profile: "exp_neg_q" evaluates exp(-q) for a
    QuadraticForm q, "gauss" a normal density with the given mean and
    covariance, "custom" an arbitrary callable of the node coordinates.
    Gaussian profiles are checked to leave at most tail_tol of their
    mass outside the box; a violation raises MassError (enlarge L).
    """
    axis = make_axis(L, h)
    axes = (axis,) * dim
    grid = DensityGrid(dim=dim, h=h, axes=axes,
                       values=np.zeros((len(axis),) * dim), kind=kind)
    pts = grid.nodes()
    if kind == "exp_neg_q":
        if q is None:
            raise ValueError("exp_neg_q initial density needs q")
        flat = pts.reshape(-1, dim)
        grid.values = q.eta(flat).reshape(grid.values.shape)
        g_mean, g_cov = q.mean_cov()
    elif kind == "gauss":
        g_mean = np.zeros(dim) if mean is None else np.asarray(mean, dtype=float)
        g_cov = np.eye(dim) if cov is None else np.atleast_2d(np.asarray(cov, dtype=float))
        diff = pts.reshape(-1, dim) - g_mean
        P = np.linalg.inv(g_cov)
        expo = -0.5 * np.einsum("pi,ij,pj->p", diff, P, diff)
        norm = math.sqrt((2.0 * math.pi) ** dim * np.linalg.det(g_cov))
        grid.values = (np.exp(expo) / norm).reshape(grid.values.shape)
    elif kind == "custom":
        if fn is None:
            raise ValueError("custom initial density needs fn")
        grid.values = np.asarray(fn(pts), dtype=float).reshape(grid.values.shape)
        g_mean = None
    else:
        raise ValueError(f"unknown initial density kind {kind!r}")
    if kind in ("exp_neg_q", "gauss"):
        tail = _gauss_tail(grid.L, np.atleast_1d(g_mean), np.atleast_2d(g_cov))
        if tail > tail_tol:
            raise MassError(
                f"initial density leaves {tail:.2e} of its mass outside the box "
                f"(|x| <= {grid.L:g}); tolerance is {tail_tol:.0e}, increase L"
            )
    grid.zero_boundary()
    return grid


def moments(grid: DensityGrid) -> tuple:
    """(mass, mean, cov) of the nodal density by trapezoid quadrature."""
    mass = integral(grid)
    if not np.isfinite(mass) or mass <= 0.0:
        raise MassError(f"density mass {mass} is not positive and finite")
    pts = grid.nodes().reshape(-1, grid.dim)
    w = grid.values.reshape(-1) * grid.h ** grid.dim / mass
    mean = pts.T @ w
    diff = pts - mean
    cov = (diff * w[:, None]).T @ diff
    return mass, mean, cov


def normalize(grid: DensityGrid) -> tuple:
    """Clip negative undershoot to zero and scale to unit mass.

    Negative nodal values (explicit stochastic updates can undershoot)
    are clipped here and nowhere else; the clipped mass fraction is
    recorded in meta["clip_fraction"].  Returns (normalized grid, mass
    before scaling).  Raises MassError when nothing positive remains.
    """
    v = grid.values
    neg = -v[v < 0.0].sum() * grid.h ** grid.dim
    clipped = np.clip(v, 0.0, None)
    mass = clipped.sum() * grid.h ** grid.dim
    if not np.isfinite(mass) or mass <= 0.0:
        raise MassError(f"density collapsed: mass after clipping is {mass}")
    out = DensityGrid(
        dim=grid.dim, h=grid.h, axes=grid.axes, values=clipped / mass,
        kind=grid.kind, meta=dict(grid.meta),
    )
    out.meta["clip_fraction"] = float(neg / mass)
    return out, float(mass)


def box_halfwidth(filter_run, k_sigma: float = 8.0) -> float:
    """Box half-width covering the filter mean plus k_sigma deviations.

    Scans the whole closed-form run: max over time and coordinates of
    |xbar| + k_sigma * sqrt(diag Sigma).
    """
    xbar = filter_run.xbar()
    var = np.diagonal(filter_run.cov(), axis1=1, axis2=2)
    return float(np.max(np.abs(xbar) + k_sigma * np.sqrt(var)))
