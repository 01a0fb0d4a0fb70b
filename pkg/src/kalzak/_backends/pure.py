"""Pure NumPy kernels.

Reference implementations of the hot loops.  The Cython module mirrors
these function for function; keep the two in sync (the backend
equivalence tests will catch drift).  All inputs are C-contiguous
float64 arrays prepared by the callers; per-step coefficient arrays
carry one leading axis of length N (number of steps).
"""

import numpy as np
from scipy.linalg import solve_banded


def affine_path(z0, dt, dW, slope, level, theta_check, Psi, Theta, d, bound):
    """Euler path of dz = (slope z + level) dt + theta_check dW.

    Also accumulates the whitened observation integral (Psi times the
    observation increments) and the rescaled Wiener path (Psi Theta dW).
    Returns (z, ytilde, wtilde, blow_step); blow_step is -1 when the
    sup-norm of z never exceeded `bound`, else the first offending step
    index (entries from there on are NaN).
    """
    N = dW.shape[0]
    d1 = z0.shape[0]
    dy = d1 - d
    z = np.empty((N + 1, d1))
    yt = np.zeros((N + 1, dy))
    wt = np.zeros((N + 1, dy))
    z[0] = z0
    PsiTheta = Psi @ Theta
    blow = -1
    if d1 == 2 and dt > 0:  # scalar signal + scalar observation fast path
        s00, s01 = slope[0]
        s10, s11 = slope[1]
        c0, c1 = level
        psi = Psi[0, 0]
        pt = PsiTheta[0]
        zx, zy = float(z0[0]), float(z0[1])
        for k in range(N):
            dWk = dW[k]
            dx = (s00 * zx + s01 * zy + c0) * dt + theta_check[0] @ dWk
            dyy = (s10 * zx + s11 * zy + c1) * dt + theta_check[1] @ dWk
            zx += dx
            zy += dyy
            z[k + 1, 0] = zx
            z[k + 1, 1] = zy
            yt[k + 1, 0] = yt[k, 0] + psi * dyy
            wt[k + 1, 0] = wt[k, 0] + pt @ dWk
            if not (abs(zx) <= bound and abs(zy) <= bound):
                blow = k + 1
                z[k + 2:] = np.nan
                yt[k + 2:] = np.nan
                wt[k + 2:] = np.nan
                break
        return z, yt, wt, blow
    for k in range(N):
        zk = z[k]
        z[k + 1] = zk + (slope @ zk + level) * dt + theta_check @ dW[k]
        yt[k + 1] = yt[k] + Psi @ (z[k + 1, d:] - zk[d:])
        wt[k + 1] = wt[k] + PsiTheta @ dW[k]
        if not np.all(np.abs(z[k + 1]) <= bound):
            blow = k + 1
            z[k + 2:] = np.nan
            yt[k + 2:] = np.nan
            wt[k + 2:] = np.nan
            break
    return z, yt, wt, blow


def _is_spd(M):
    try:
        np.linalg.cholesky(M)
        return True
    except np.linalg.LinAlgError:
        return False


def riccati_path(dt, dyt, bdot, h_slope, sigma, a, ahat, b0, h_level, W0, V0, U0):
    """Integrate the filter triple (W, V, U) along one observation path.

    W advances by classical RK4 with the quadratic right-hand side
    frozen at the left endpoint and is re-symmetrized after every step;
    V and U advance by Euler-Maruyama against the whitened observation
    increments `dyt`, coefficients at the left endpoint.

    Returns (W, V, U, first_bad, max_asym): first_bad is -1, or the
    first step index at which W stopped being positive definite
    (entries from there on are NaN); max_asym is the largest
    pre-symmetrization asymmetry encountered.
    """
    N = dyt.shape[0]
    d = W0.shape[0]
    dy = dyt.shape[1]
    W = np.empty((N + 1, d, d))
    V = np.empty((N + 1, d))
    U = np.empty(N + 1)
    W[0], V[0], U[0] = W0, V0, U0
    max_asym = 0.0
    first_bad = -1

    if d == 1 and dy == 1:
        w = float(W0[0, 0])
        v = float(V0[0])
        u = float(U0)
        for k in range(N):
            hs = h_slope[k, 0, 0]
            sg = sigma[k, 0, 0]
            ah = ahat[k, 0, 0]
            C = hs * sg - bdot[k, 0, 0]
            hh = hs * hs
            k1 = 2.0 * C * w - 2.0 * ah * w * w + hh
            w2 = w + 0.5 * dt * k1
            k2 = 2.0 * C * w2 - 2.0 * ah * w2 * w2 + hh
            w3 = w + 0.5 * dt * k2
            k3 = 2.0 * C * w3 - 2.0 * ah * w3 * w3 + hh
            w4 = w + dt * k3
            k4 = 2.0 * C * w4 - 2.0 * ah * w4 * w4 + hh
            wn = w + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            dyk = dyt[k, 0]
            sb = sg * h_level[k, 0] - b0[k, 0]
            vn = v + (-(w * sg + hs)) * dyk + (C * v - 2.0 * w * ah * v + w * sb + hs * h_level[k, 0]) * dt
            un = u + (-(sg * v + h_level[k, 0])) * dyk + (
                a[k, 0, 0] * w + v * sb - ah * v * v
                + 0.5 * h_level[k, 0] ** 2 + bdot[k, 0, 0]
            ) * dt
            w, v, u = wn, vn, un
            W[k + 1, 0, 0] = w
            V[k + 1, 0] = v
            U[k + 1] = u
            if not w > 0.0 or not np.isfinite(w):
                first_bad = k + 1
                W[k + 2:] = np.nan
                V[k + 2:] = np.nan
                U[k + 2:] = np.nan
                break
        return W, V, U, first_bad, max_asym

    for k in range(N):
        Wk = W[k]
        Vk = V[k]
        C = h_slope[k] @ sigma[k].T - bdot[k]
        HH = h_slope[k] @ h_slope[k].T
        ah = ahat[k]

        def f(M):
            return C @ M + M @ C.T - 2.0 * M @ ah @ M + HH

        k1 = f(Wk)
        k2 = f(Wk + 0.5 * dt * k1)
        k3 = f(Wk + 0.5 * dt * k2)
        k4 = f(Wk + dt * k3)
        Wn = Wk + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        asym = np.max(np.abs(Wn - Wn.T))
        if asym > max_asym:
            max_asym = asym
        Wn = 0.5 * (Wn + Wn.T)

        sb = sigma[k] @ h_level[k] - b0[k]
        V[k + 1] = Vk + (-(Wk @ sigma[k] + h_slope[k])) @ dyt[k] + (
            C @ Vk - 2.0 * Wk @ (ah @ Vk) + Wk @ sb + h_slope[k] @ h_level[k]
        ) * dt
        U[k + 1] = U[k] + (-(sigma[k].T @ Vk + h_level[k])) @ dyt[k] + (
            np.sum(a[k] * Wk) + Vk @ sb - Vk @ (ah @ Vk)
            + 0.5 * h_level[k] @ h_level[k] + np.trace(bdot[k])
        ) * dt
        W[k + 1] = Wn
        if not np.all(np.isfinite(Wn)) or not _is_spd(Wn):
            first_bad = k + 1
            W[k + 2:] = np.nan
            V[k + 2:] = np.nan
            U[k + 2:] = np.nan
            break
    return W, V, U, first_bad, max_asym


def _lam_apply(v, h, sg, field, out):
    # field is None for the reduced equation (pure gradient operator)
    out[0] = 0.0
    out[-1] = 0.0
    out[1:-1] = -sg * (v[2:] - v[:-2]) / (2.0 * h)
    if field is not None:
        out[1:-1] += field[1:-1] * v[1:-1]
    return out


def zakai_1d(u0, x, h, dt, dyt, a, bs, b0, sg, hs, h0, milstein):
    """Splitting steps of the unnormalized density equation on a 1-D grid.

    Each step solves the conservative (flux form) operator implicitly on
    the interior, then applies the stochastic update explicitly with the
    left-endpoint whitened observation increment.  Dirichlet zero ends.
    Per-step scalar coefficients: diffusion a, drift slope/intercept
    (bs, b0), gradient noise sg and observation drift (hs, h0).
    """
    N = dyt.shape[0]
    n = x.shape[0]
    series = np.empty((N + 1, n))
    series[0] = u0
    u = u0.copy()
    xm = 0.5 * (x[:-1] + x[1:])
    ab = np.zeros((3, n - 2))
    lam1 = np.empty(n)
    lam2 = np.empty(n)
    for k in range(N):
        bmid = bs[k] * xm + b0[k]
        lower = a[k] / h ** 2 + bmid[:-1] / (2.0 * h)
        diag = -2.0 * a[k] / h ** 2 - (bmid[1:] - bmid[:-1]) / (2.0 * h)
        upper = a[k] / h ** 2 - bmid[1:] / (2.0 * h)
        ab[0, 1:] = -dt * upper[:-1]
        ab[1, :] = 1.0 - dt * diag
        ab[2, :-1] = -dt * lower[1:]
        v = np.zeros(n)
        v[1:-1] = solve_banded((1, 1), ab, u[1:-1])
        field = hs[k] * x + h0[k]
        _lam_apply(v, h, sg[k], field, lam1)
        u = v + lam1 * dyt[k]
        if milstein:
            _lam_apply(lam1, h, sg[k], field, lam2)
            u += 0.5 * lam2 * (dyt[k] ** 2 - dt)
        u[0] = 0.0
        u[-1] = 0.0
        series[k + 1] = u
    return series


def reduced_1d(u0, x, h, dt, dyt, a, sg, cs, c0, milstein):
    """Splitting steps of the transformed (bounded-coefficient) equation.

    The deterministic part is non-divergence, a D2 u + (cs x + c0) D u,
    solved implicitly; the stochastic part is the pure gradient operator
    -sg D u against `dyt`.  Same conventions as zakai_1d.
    """
    N = dyt.shape[0]
    n = x.shape[0]
    series = np.empty((N + 1, n))
    series[0] = u0
    u = u0.copy()
    xi = x[1:-1]
    ab = np.zeros((3, n - 2))
    lam1 = np.empty(n)
    lam2 = np.empty(n)
    for k in range(N):
        c = cs[k] * xi + c0[k]
        lower = a[k] / h ** 2 - c / (2.0 * h)
        upper = a[k] / h ** 2 + c / (2.0 * h)
        ab[0, 1:] = -dt * upper[:-1]
        ab[1, :] = 1.0 + dt * 2.0 * a[k] / h ** 2
        ab[2, :-1] = -dt * lower[1:]
        v = np.zeros(n)
        v[1:-1] = solve_banded((1, 1), ab, u[1:-1])
        _lam_apply(v, h, sg[k], None, lam1)
        u = v + lam1 * dyt[k]
        if milstein:
            _lam_apply(lam1, h, sg[k], None, lam2)
            u += 0.5 * lam2 * (dyt[k] ** 2 - dt)
        u[0] = 0.0
        u[-1] = 0.0
        series[k + 1] = u
    return series
