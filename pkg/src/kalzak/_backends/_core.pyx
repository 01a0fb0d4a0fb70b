# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels. Mirrors pure.py function for function."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, sqrt

cnp.import_array()


def affine_path(double[::1] z0, double dt, double[:, ::1] dW,
                double[:, ::1] slope, double[::1] level,
                double[:, ::1] theta_check, double[:, ::1] Psi,
                double[:, ::1] Theta, int d, double bound):
    cdef Py_ssize_t N = dW.shape[0]
    cdef Py_ssize_t d1 = z0.shape[0]
    cdef Py_ssize_t dy = d1 - d
    cdef Py_ssize_t dw = dW.shape[1]
    cdef Py_ssize_t k, i, j
    cdef double acc, mx
    cdef long blow = -1

    z_arr = np.empty((N + 1, d1))
    yt_arr = np.zeros((N + 1, dy))
    wt_arr = np.zeros((N + 1, dy))
    pt_arr = np.asarray(Psi) @ np.asarray(Theta)
    dz_arr = np.empty(d1)
    cdef double[:, ::1] z = z_arr
    cdef double[:, ::1] yt = yt_arr
    cdef double[:, ::1] wt = wt_arr
    cdef double[:, ::1] PsiTheta = pt_arr
    cdef double[::1] dz = dz_arr

    for i in range(d1):
        z[0, i] = z0[i]
    for k in range(N):
        for i in range(d1):
            acc = level[i]
            for j in range(d1):
                acc += slope[i, j] * z[k, j]
            acc *= dt
            for j in range(dw):
                acc += theta_check[i, j] * dW[k, j]
            dz[i] = acc
            z[k + 1, i] = z[k, i] + acc
        for i in range(dy):
            acc = 0.0
            for j in range(dy):
                acc += Psi[i, j] * dz[d + j]
            yt[k + 1, i] = yt[k, i] + acc
            acc = 0.0
            for j in range(dw):
                acc += PsiTheta[i, j] * dW[k, j]
            wt[k + 1, i] = wt[k, i] + acc
        mx = 0.0
        for i in range(d1):
            if fabs(z[k + 1, i]) > mx:
                mx = fabs(z[k + 1, i])
        if not (mx <= bound):
            blow = k + 1
            break
    if blow >= 0 and blow + 1 <= N:
        z_arr[blow + 1:] = np.nan
        yt_arr[blow + 1:] = np.nan
        wt_arr[blow + 1:] = np.nan
    return z_arr, yt_arr, wt_arr, blow


cdef inline void _riccati_rhs(Py_ssize_t d, double[:, ::1] C, double[:, ::1] HH,
                              double[:, ::1] ah, double[:, ::1] M,
                              double[:, ::1] P, double[:, ::1] out) nogil:
    # out = C M + (C M)^T - 2 M ah M + HH   (M symmetric on entry)
    cdef Py_ssize_t i, j, l
    cdef double acc
    for i in range(d):
        for j in range(d):
            acc = 0.0
            for l in range(d):
                acc += ah[i, l] * M[l, j]
            P[i, j] = acc           # P = ah M
    for i in range(d):
        for j in range(d):
            acc = HH[i, j]
            for l in range(d):
                acc += C[i, l] * M[l, j] + M[i, l] * C[j, l] - 2.0 * M[i, l] * P[l, j]
            out[i, j] = acc


cdef inline int _spd(Py_ssize_t d, double[:, ::1] M, double[:, ::1] L) nogil:
    # Cholesky into L; returns 1 when M is symmetric positive definite
    cdef Py_ssize_t i, j, l
    cdef double acc
    for i in range(d):
        for j in range(i + 1):
            acc = M[i, j]
            for l in range(j):
                acc -= L[i, l] * L[j, l]
            if i == j:
                if not (acc > 0.0) or not isfinite(acc):
                    return 0
                L[i, i] = sqrt(acc)
            else:
                L[i, j] = acc / L[j, j]
    return 1


def riccati_path(double dt, double[:, ::1] dyt, double[:, :, ::1] bdot,
                 double[:, :, ::1] h_slope, double[:, :, ::1] sigma,
                 double[:, :, ::1] a, double[:, :, ::1] ahat,
                 double[:, ::1] b0, double[:, ::1] h_level,
                 double[:, ::1] W0, double[::1] V0, double U0):
    cdef Py_ssize_t N = dyt.shape[0]
    cdef Py_ssize_t d = W0.shape[0]
    cdef Py_ssize_t dy = dyt.shape[1]
    cdef Py_ssize_t k, i, j, l
    cdef double acc, asym, max_asym = 0.0
    cdef double w, v, u, hs, sg, ah1, C1, hh, k1, k2, k3, k4, w2, w3, w4, dyk, sb1, v_new
    cdef long first_bad = -1

    W_arr = np.empty((N + 1, d, d))
    V_arr = np.empty((N + 1, d))
    U_arr = np.empty(N + 1)
    cdef double[:, :, ::1] W = W_arr
    cdef double[:, ::1] V = V_arr
    cdef double[::1] U = U_arr
    for i in range(d):
        V[0, i] = V0[i]
        for j in range(d):
            W[0, i, j] = W0[i, j]
    U[0] = U0

    if d == 1 and dy == 1:
        w = W0[0, 0]
        v = V0[0]
        u = U0
        for k in range(N):
            hs = h_slope[k, 0, 0]
            sg = sigma[k, 0, 0]
            ah1 = ahat[k, 0, 0]
            C1 = hs * sg - bdot[k, 0, 0]
            hh = hs * hs
            k1 = 2.0 * C1 * w - 2.0 * ah1 * w * w + hh
            w2 = w + 0.5 * dt * k1
            k2 = 2.0 * C1 * w2 - 2.0 * ah1 * w2 * w2 + hh
            w3 = w + 0.5 * dt * k2
            k3 = 2.0 * C1 * w3 - 2.0 * ah1 * w3 * w3 + hh
            w4 = w + dt * k3
            k4 = 2.0 * C1 * w4 - 2.0 * ah1 * w4 * w4 + hh
            dyk = dyt[k, 0]
            sb1 = sg * h_level[k, 0] - b0[k, 0]
            v_new = v + (-(w * sg + hs)) * dyk + (C1 * v - 2.0 * w * ah1 * v + w * sb1 + hs * h_level[k, 0]) * dt
            u = u + (-(sg * v + h_level[k, 0])) * dyk + (
                a[k, 0, 0] * w + v * sb1 - ah1 * v * v
                + 0.5 * h_level[k, 0] * h_level[k, 0] + bdot[k, 0, 0]) * dt
            w = w + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            v = v_new
            W[k + 1, 0, 0] = w
            V[k + 1, 0] = v
            U[k + 1] = u
            if not (w > 0.0) or not isfinite(w):
                first_bad = k + 1
                break
        if first_bad >= 0 and first_bad + 1 <= N:
            W_arr[first_bad + 1:] = np.nan
            V_arr[first_bad + 1:] = np.nan
            U_arr[first_bad + 1:] = np.nan
        return W_arr, V_arr, U_arr, first_bad, max_asym

    C_arr = np.empty((d, d)); HH_arr = np.empty((d, d))
    P_arr = np.empty((d, d)); F1 = np.empty((d, d)); F2 = np.empty((d, d))
    F3 = np.empty((d, d)); F4 = np.empty((d, d)); Wt = np.empty((d, d))
    Wn_arr = np.empty((d, d)); L_arr = np.empty((d, d))
    av_arr = np.empty(d); sb_arr = np.empty(d); vn_arr = np.empty(d)
    cdef double[:, ::1] C = C_arr, HH = HH_arr, P = P_arr
    cdef double[:, ::1] kk1 = F1, kk2 = F2, kk3 = F3, kk4 = F4, Wtmp = Wt
    cdef double[:, ::1] Wn = Wn_arr, L = L_arr
    cdef double[::1] av = av_arr, sb = sb_arr, vn = vn_arr
    cdef double trb, quad, du

    for k in range(N):
        for i in range(d):
            for j in range(d):
                acc = 0.0
                for l in range(dy):
                    acc += h_slope[k, i, l] * sigma[k, j, l]
                C[i, j] = acc - bdot[k, i, j]
                acc = 0.0
                for l in range(dy):
                    acc += h_slope[k, i, l] * h_slope[k, j, l]
                HH[i, j] = acc
        _riccati_rhs(d, C, HH, ahat[k], W[k], P, kk1)
        for i in range(d):
            for j in range(d):
                Wtmp[i, j] = W[k, i, j] + 0.5 * dt * kk1[i, j]
        _riccati_rhs(d, C, HH, ahat[k], Wtmp, P, kk2)
        for i in range(d):
            for j in range(d):
                Wtmp[i, j] = W[k, i, j] + 0.5 * dt * kk2[i, j]
        _riccati_rhs(d, C, HH, ahat[k], Wtmp, P, kk3)
        for i in range(d):
            for j in range(d):
                Wtmp[i, j] = W[k, i, j] + dt * kk3[i, j]
        _riccati_rhs(d, C, HH, ahat[k], Wtmp, P, kk4)
        for i in range(d):
            for j in range(d):
                Wn[i, j] = W[k, i, j] + dt * (kk1[i, j] + 2.0 * kk2[i, j]
                                              + 2.0 * kk3[i, j] + kk4[i, j]) / 6.0
        asym = 0.0
        for i in range(d):
            for j in range(d):
                if fabs(Wn[i, j] - Wn[j, i]) > asym:
                    asym = fabs(Wn[i, j] - Wn[j, i])
        if asym > max_asym:
            max_asym = asym
        for i in range(d):
            for j in range(i, d):
                acc = 0.5 * (Wn[i, j] + Wn[j, i])
                Wn[i, j] = acc
                Wn[j, i] = acc

        # V, U with left-endpoint states
        trb = 0.0
        for i in range(d):
            acc = 0.0
            for l in range(dy):
                acc += sigma[k, i, l] * h_level[k, l]
            sb[i] = acc - b0[k, i]
            acc = 0.0
            for j in range(d):
                acc += ahat[k, i, j] * V[k, j]
            av[i] = acc                      # av = ahat V
            trb += bdot[k, i, i]
        quad = 0.0
        for i in range(d):
            du = 0.0
            for l in range(dy):
                acc = 0.0
                for j in range(d):
                    acc += W[k, i, j] * sigma[k, j, l]
                du += (acc + h_slope[k, i, l]) * dyt[k, l]
            acc = 0.0
            for j in range(d):
                acc += C[i, j] * V[k, j] - 2.0 * W[k, i, j] * av[j] + W[k, i, j] * sb[j]
            for l in range(dy):
                acc += h_slope[k, i, l] * h_level[k, l]
            vn[i] = V[k, i] - du + acc * dt
            quad += V[k, i] * av[i]
        acc = 0.0
        for l in range(dy):
            du = 0.0
            for j in range(d):
                du += sigma[k, j, l] * V[k, j]
            acc += (du + h_level[k, l]) * dyt[k, l]
        du = 0.0
        for i in range(d):
            for j in range(d):
                du += a[k, i, j] * W[k, i, j]
            du += V[k, i] * sb[i]
        for l in range(dy):
            du += 0.5 * h_level[k, l] * h_level[k, l]
        U[k + 1] = U[k] - acc + (du - quad + trb) * dt
        for i in range(d):
            V[k + 1, i] = vn[i]
            for j in range(d):
                W[k + 1, i, j] = Wn[i, j]
        if not _spd(d, Wn, L):
            first_bad = k + 1
            break
    if first_bad >= 0 and first_bad + 1 <= N:
        W_arr[first_bad + 1:] = np.nan
        V_arr[first_bad + 1:] = np.nan
        U_arr[first_bad + 1:] = np.nan
    return W_arr, V_arr, U_arr, first_bad, max_asym


cdef inline void _thomas(Py_ssize_t m, double[::1] lo, double[::1] di,
                         double[::1] up, double[::1] rhs, double[::1] cp,
                         double[::1] dp, double[::1] out) nogil:
    cdef Py_ssize_t i
    cdef double den
    cp[0] = up[0] / di[0]
    dp[0] = rhs[0] / di[0]
    for i in range(1, m):
        den = di[i] - lo[i] * cp[i - 1]
        cp[i] = up[i] / den
        dp[i] = (rhs[i] - lo[i] * dp[i - 1]) / den
    out[m - 1] = dp[m - 1]
    for i in range(m - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]


def zakai_1d(double[::1] u0, double[::1] x, double h, double dt,
             double[::1] dyt, double[::1] a, double[::1] bs, double[::1] b0,
             double[::1] sg, double[::1] hs, double[::1] h0, int milstein):
    cdef Py_ssize_t N = dyt.shape[0]
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = n - 2
    cdef Py_ssize_t k, i
    cdef double bm_l, bm_r, inv_h2, inv_2h, dyk, corr, fld

    series_arr = np.empty((N + 1, n))
    cdef double[:, ::1] series = series_arr
    lo_a = np.empty(m); di_a = np.empty(m); up_a = np.empty(m)
    rhs_a = np.empty(m); cp_a = np.empty(m); dp_a = np.empty(m); sol_a = np.empty(m)
    v_a = np.zeros(n); l1_a = np.zeros(n); l2_a = np.zeros(n)
    cdef double[::1] lo = lo_a, di = di_a, up = up_a, rhs = rhs_a
    cdef double[::1] cp = cp_a, dp = dp_a, sol = sol_a
    cdef double[::1] v = v_a, l1 = l1_a, l2 = l2_a

    for i in range(n):
        series[0, i] = u0[i]
    inv_h2 = 1.0 / (h * h)
    inv_2h = 1.0 / (2.0 * h)
    for k in range(N):
        for i in range(m):
            bm_l = bs[k] * 0.5 * (x[i] + x[i + 1]) + b0[k]
            bm_r = bs[k] * 0.5 * (x[i + 1] + x[i + 2]) + b0[k]
            lo[i] = -dt * (a[k] * inv_h2 + bm_l * inv_2h)
            di[i] = 1.0 - dt * (-2.0 * a[k] * inv_h2 - (bm_r - bm_l) * inv_2h)
            up[i] = -dt * (a[k] * inv_h2 - bm_r * inv_2h)
            rhs[i] = series[k, i + 1]
        _thomas(m, lo, di, up, rhs, cp, dp, sol)
        for i in range(m):
            v[i + 1] = sol[i]
        v[0] = 0.0
        v[n - 1] = 0.0
        dyk = dyt[k]
        for i in range(1, n - 1):
            fld = hs[k] * x[i] + h0[k]
            l1[i] = -sg[k] * (v[i + 1] - v[i - 1]) * inv_2h + fld * v[i]
        l1[0] = 0.0
        l1[n - 1] = 0.0
        if milstein:
            corr = 0.5 * (dyk * dyk - dt)
            for i in range(1, n - 1):
                fld = hs[k] * x[i] + h0[k]
                l2[i] = -sg[k] * (l1[i + 1] - l1[i - 1]) * inv_2h + fld * l1[i]
            for i in range(1, n - 1):
                series[k + 1, i] = v[i] + l1[i] * dyk + l2[i] * corr
        else:
            for i in range(1, n - 1):
                series[k + 1, i] = v[i] + l1[i] * dyk
        series[k + 1, 0] = 0.0
        series[k + 1, n - 1] = 0.0
    return series_arr


def reduced_1d(double[::1] u0, double[::1] x, double h, double dt,
               double[::1] dyt, double[::1] a, double[::1] sg,
               double[::1] cs, double[::1] c0, int milstein):
    cdef Py_ssize_t N = dyt.shape[0]
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = n - 2
    cdef Py_ssize_t k, i
    cdef double c, inv_h2, inv_2h, dyk, corr

    series_arr = np.empty((N + 1, n))
    cdef double[:, ::1] series = series_arr
    lo_a = np.empty(m); di_a = np.empty(m); up_a = np.empty(m)
    rhs_a = np.empty(m); cp_a = np.empty(m); dp_a = np.empty(m); sol_a = np.empty(m)
    v_a = np.zeros(n); l1_a = np.zeros(n); l2_a = np.zeros(n)
    cdef double[::1] lo = lo_a, di = di_a, up = up_a, rhs = rhs_a
    cdef double[::1] cp = cp_a, dp = dp_a, sol = sol_a
    cdef double[::1] v = v_a, l1 = l1_a, l2 = l2_a

    for i in range(n):
        series[0, i] = u0[i]
    inv_h2 = 1.0 / (h * h)
    inv_2h = 1.0 / (2.0 * h)
    for k in range(N):
        for i in range(m):
            c = cs[k] * x[i + 1] + c0[k]
            lo[i] = -dt * (a[k] * inv_h2 - c * inv_2h)
            di[i] = 1.0 + dt * 2.0 * a[k] * inv_h2
            up[i] = -dt * (a[k] * inv_h2 + c * inv_2h)
            rhs[i] = series[k, i + 1]
        _thomas(m, lo, di, up, rhs, cp, dp, sol)
        for i in range(m):
            v[i + 1] = sol[i]
        v[0] = 0.0
        v[n - 1] = 0.0
        dyk = dyt[k]
        for i in range(1, n - 1):
            l1[i] = -sg[k] * (v[i + 1] - v[i - 1]) * inv_2h
        l1[0] = 0.0
        l1[n - 1] = 0.0
        if milstein:
            corr = 0.5 * (dyk * dyk - dt)
            for i in range(1, n - 1):
                l2[i] = -sg[k] * (l1[i + 1] - l1[i - 1]) * inv_2h
            for i in range(1, n - 1):
                series[k + 1, i] = v[i] + l1[i] * dyk + l2[i] * corr
        else:
            for i in range(1, n - 1):
                series[k + 1, i] = v[i] + l1[i] * dyk
        series[k + 1, 0] = 0.0
        series[k + 1, n - 1] = 0.0
    return series_arr
