"""Compiled inner loops for the element-potential equilibrium solver.

All arrays are float64. Status codes: 0 converged, 1 iteration limit,
2 singular Newton matrix, 3 HP bracket failure.
"""
import math

import numpy as np
from numba import njit

_MAX_STEP = 5.0


@njit(cache=True)
def nasa7_h_s(low, high, T_common, T, h_rt, s_r):
    lnT = math.log(T)
    for j in range(low.shape[0]):
        c = low[j] if T <= T_common[j] else high[j]
        h_rt[j] = (c[0] + T * (c[1] / 2 + T * (c[2] / 3 + T * (c[3] / 4 + T * c[4] / 5)))
                   + c[5] / T)
        s_r[j] = c[0] * lnT + T * (c[1] + T * (c[2] / 2 + T * (c[3] / 3 + T * c[4] / 4))) + c[6]


@njit(cache=True)
def nasa7_cp(low, high, T_common, T, cp_r):
    for j in range(low.shape[0]):
        c = low[j] if T <= T_common[j] else high[j]
        cp_r[j] = c[0] + T * (c[1] + T * (c[2] + T * (c[3] + T * c[4])))


@njit(cache=True)
def _gauss_solve(J, rhs):
    n = rhs.shape[0]
    M = J.copy()
    x = rhs.copy()
    for k in range(n):
        p = k
        big = abs(M[k, k])
        for i in range(k + 1, n):
            if abs(M[i, k]) > big:
                big = abs(M[i, k])
                p = i
        if big < 1e-300:
            return x, False
        if p != k:
            for c in range(n):
                tmp = M[k, c]
                M[k, c] = M[p, c]
                M[p, c] = tmp
            tmp = x[k]
            x[k] = x[p]
            x[p] = tmp
        for i in range(k + 1, n):
            f = M[i, k] / M[k, k]
            if f != 0.0:
                for c in range(k, n):
                    M[i, c] -= f * M[k, c]
                x[i] -= f * x[k]
    for k in range(n - 1, -1, -1):
        acc = x[k]
        for c in range(k + 1, n):
            acc -= M[k, c] * x[c]
        x[k] = acc / M[k, k]
    return x, True


@njit(cache=True)
def _mole_fractions(A, g, lnP, lam, x):
    ne, ns = A.shape
    for j in range(ns):
        arg = -g[j] - lnP
        for e in range(ne):
            arg += A[e, j] * lam[e]
        x[j] = arg


@njit(cache=True)
def _residual(A, lnb, args, lnN, F, W, S):
    """Log-form residuals, overflow-safe.

    F_e = ln(N sum_j A_ej x_j) - ln b_e and F_sum = ln(sum_j x_j), with
    ln x_j = ``args[j]``. Each sum is shifted by its own maximum; ``W``
    receives the shifted weights per row and ``S`` the shifted sums.
    """
    ne, ns = A.shape
    for e in range(ne + 1):
        m = -1e300
        for j in range(ns):
            if (e == ne or A[e, j] > 0.0) and args[j] > m:
                m = args[j]
        acc = 0.0
        for j in range(ns):
            a = 1.0 if e == ne else A[e, j]
            if a > 0.0:
                W[e, j] = a * math.exp(args[j] - m)
                acc += W[e, j]
            else:
                W[e, j] = 0.0
        S[e] = acc
        if e < ne:
            F[e] = lnN + m + math.log(acc) - lnb[e]
        else:
            F[e] = m + math.log(acc)
    norm = 0.0
    for i in range(ne + 1):
        if abs(F[i]) > norm:
            norm = abs(F[i])
    return norm


@njit(cache=True)
def solve_tp(A, b, g, lnP, lam, lnN, max_iter, tol):
    """Newton iteration on element potentials ``lam`` and log total moles.

    Mole fractions are x_j = exp(-g_j - ln(P/P_ref) + sum_e lam_e A_ej),
    which makes the Gibbs stationarity conditions hold identically; the
    iteration drives the logs of the element balances and of sum(x) to
    zero. ``lam`` is updated in place. Returns (lnN, iterations, status,
    residual).
    """
    ne, ns = A.shape
    n = ne + 1
    lnb = np.log(b)
    args = np.empty(ns)
    args_t = np.empty(ns)
    F = np.empty(n)
    Ft = np.empty(n)
    W = np.empty((n, ns))
    Wt = np.empty((n, ns))
    S = np.empty(n)
    St = np.empty(n)
    J = np.empty((n, n))
    lam_t = np.empty(ne)
    _mole_fractions(A, g, lnP, lam, args)
    res = _residual(A, lnb, args, lnN, F, W, S)
    it = 0
    while it < max_iter:
        if res < tol:
            return lnN, it, 0, res
        it += 1
        for e in range(n):
            for k in range(ne):
                acc = 0.0
                for j in range(ns):
                    acc += W[e, j] * A[k, j]
                J[e, k] = acc / S[e]
            J[e, ne] = 1.0 if e < ne else 0.0
        rhs = -F
        step, ok = _gauss_solve(J, rhs)
        res_t = np.inf
        lnN_t = lnN
        if ok:
            biggest = 0.0
            for i in range(n):
                if abs(step[i]) > biggest:
                    biggest = abs(step[i])
            alpha = 1.0
            if biggest > _MAX_STEP:
                alpha = _MAX_STEP / biggest
            # backtracking on the max-norm residual
            for _ in range(30):
                for e in range(ne):
                    lam_t[e] = lam[e] + alpha * step[e]
                lnN_t = lnN + alpha * step[ne]
                _mole_fractions(A, g, lnP, lam_t, args_t)
                res_t = _residual(A, lnb, args_t, lnN_t, Ft, Wt, St)
                if res_t < res:
                    break
                alpha *= 0.5
        if not res_t < res:
            # Newton direction useless (near-singular J): Levenberg-Marquardt
            JtJ = J.T @ J
            JtF = J.T @ F
            mu = 1e-6 * (np.trace(JtJ) / n + 1e-300)
            for _ in range(40):
                M = JtJ.copy()
                for i in range(n):
                    M[i, i] += mu
                step, ok = _gauss_solve(M, -JtF)
                if ok:
                    biggest = 0.0
                    for i in range(n):
                        if abs(step[i]) > biggest:
                            biggest = abs(step[i])
                    if biggest > _MAX_STEP:
                        step *= _MAX_STEP / biggest
                    for e in range(ne):
                        lam_t[e] = lam[e] + step[e]
                    lnN_t = lnN + step[ne]
                    _mole_fractions(A, g, lnP, lam_t, args_t)
                    res_t = _residual(A, lnb, args_t, lnN_t, Ft, Wt, St)
                    if res_t < res:
                        break
                mu *= 10.0
            if not res_t < res:
                return lnN, it, 2, res
        for e in range(ne):
            lam[e] = lam_t[e]
        lnN = lnN_t
        args[:] = args_t
        F[:] = Ft
        W[:, :] = Wt
        S[:] = St
        res = res_t
    if res < tol:
        return lnN, it, 0, res
    return lnN, it, 1, res


@njit(cache=True)
def initial_potentials(A, g, lnP, x_guess, weight):
    """Weighted least-squares element potentials reproducing ``x_guess``."""
    ne, ns = A.shape
    M = np.zeros((ne, ne))
    rhs = np.zeros(ne)
    for j in range(ns):
        c = math.log(max(x_guess[j], 1e-30)) + g[j] + lnP
        for e in range(ne):
            rhs[e] += weight[j] * A[e, j] * c
            for k in range(ne):
                M[e, k] += weight[j] * A[e, j] * A[k, j]
    lam, ok = _gauss_solve(M, rhs)
    return lam


@njit(cache=True)
def gibbs_rt(low, high, T_common, T):
    ns = low.shape[0]
    h_rt = np.empty(ns)
    s_r = np.empty(ns)
    nasa7_h_s(low, high, T_common, T, h_rt, s_r)
    return h_rt - s_r, h_rt


@njit(cache=True)
def tp_at(A, b, low, high, T_common, mw, T, lnP, lam, lnN, max_iter, tol):
    """Equilibrium at T; returns (lnN, iters, status, residual, h_mass [J/kg])."""
    g, h_rt = gibbs_rt(low, high, T_common, T)
    lnN, it, status, res = solve_tp(A, b, g, lnP, lam, lnN, max_iter, tol)
    ns = A.shape[1]
    x = np.empty(ns)
    _mole_fractions(A, g, lnP, lam, x)
    x = np.exp(x)
    N = math.exp(lnN)
    H = 0.0
    m = 0.0
    for j in range(ns):
        H += N * x[j] * h_rt[j]
        m += N * x[j] * mw[j]
    return lnN, it, status, res, H * 8.31446261815324 * T / m


@njit(cache=True)
def tp_robust(A, b, low, high, T_common, mw, T, lnP, lam, lnN, T_from,
              x_guess, weight, lnN_guess, max_iter, tol):
    """TP solve warm-started from potentials converged at ``T_from``.

    Element potentials scale roughly as 1/T, so the warm start is
    rescaled; on failure the solve restarts from the cold guess.
    """
    lam_w = lam * (T_from / T)
    lam[:] = lam_w
    lnN, it, st, res, h = tp_at(A, b, low, high, T_common, mw, T, lnP, lam, lnN, max_iter, tol)
    if st == 0:
        return lnN, it, st, res, h
    g, _ = gibbs_rt(low, high, T_common, T)
    lam[:] = initial_potentials(A, g, lnP, x_guess, weight)
    lnN2, it2, st, res, h = tp_at(A, b, low, high, T_common, mw, T, lnP, lam, lnN_guess,
                                  max_iter, tol)
    return lnN2, it + it2, st, res, h


@njit(cache=True)
def frozen_temperature(n, low, high, T_common, mw, h_target, T_start, T_lo, T_hi):
    """Temperature at which a fixed composition ``n`` has mass enthalpy ``h_target``."""
    ns = n.shape[0]
    h_rt = np.empty(ns)
    s_r = np.empty(ns)
    cp_r = np.empty(ns)
    mass = 0.0
    for j in range(ns):
        mass += n[j] * mw[j]
    T = T_start
    for _ in range(50):
        nasa7_h_s(low, high, T_common, T, h_rt, s_r)
        nasa7_cp(low, high, T_common, T, cp_r)
        H = 0.0
        C = 0.0
        for j in range(ns):
            H += n[j] * h_rt[j] * T
            C += n[j] * cp_r[j]
        dT = (h_target * mass / 8.31446261815324 - H) / C
        T = min(max(T + dT, T_lo), T_hi)
        if abs(dT) < 1e-6:
            break
    return T


@njit(cache=True)
def solve_hp(A, b, low, high, T_common, mw, h_target, lnP, x_guess, weight,
             n_guess, T_lo_lim, T_hi_lim, max_iter, tol, h_tol):
    """Find T with equilibrium mass enthalpy equal to ``h_target``.

    Starts from the frozen-guess-composition temperature, brackets by
    expanding steps, then Illinois regula falsi with bisection safeguard.
    Returns (T, lam, lnN, total_iters, status, residual, h, T_lo, T_hi).
    """
    total = 0
    lnN_guess = math.log(n_guess.sum())
    T = frozen_temperature(n_guess, low, high, T_common, mw, h_target, 2000.0,
                           T_lo_lim, T_hi_lim)
    g, _ = gibbs_rt(low, high, T_common, T)
    lam = initial_potentials(A, g, lnP, x_guess, weight)
    lnN, it, st, res, h = tp_robust(A, b, low, high, T_common, mw, T, lnP, lam, lnN_guess, T,
                                    x_guess, weight, lnN_guess, max_iter, tol)
    total += it
    if st != 0:
        return T, lam, lnN, total, st, res, h, T, T
    f = h - h_target
    if abs(f) <= h_tol:
        return T, lam, lnN, total, 0, res, h, T, T
    Ta = T
    fa = f
    lam_a = lam.copy()
    lnN_a = lnN
    dT = 50.0
    Tb = Ta
    fb = fa
    found = False
    for _ in range(60):
        T_prev = Tb
        if fa > 0.0:
            Tb = max(Tb - dT, T_lo_lim)
        else:
            Tb = min(Tb + dT, T_hi_lim)
        lnN, it, st, res, h = tp_robust(A, b, low, high, T_common, mw, Tb, lnP, lam, lnN,
                                        T_prev, x_guess, weight, lnN_guess, max_iter, tol)
        total += it
        if st != 0:
            return Tb, lam, lnN, total, st, res, h, min(Ta, Tb), max(Ta, Tb)
        fb = h - h_target
        if fb * fa <= 0.0:
            found = True
            break
        Ta = Tb
        fa = fb
        lam_a[:] = lam
        lnN_a = lnN
        if Tb <= T_lo_lim or Tb >= T_hi_lim:
            break
        dT *= 2.0
    if not found:
        return Tb, lam, lnN, total, 3, res, h, min(Ta, Tb), max(Ta, Tb)
    if abs(fb) <= h_tol:
        return Tb, lam, lnN, total, 0, res, h, min(Ta, Tb), max(Ta, Tb)
    lam_b = lam.copy()
    lnN_b = lnN
    Tc = Tb
    for _ in range(200):
        Tc = (Ta * fb - Tb * fa) / (fb - fa)
        lo = min(Ta, Tb)
        hi = max(Ta, Tb)
        if not (lo < Tc < hi):
            Tc = 0.5 * (Ta + Tb)
        # warm start from the nearer endpoint
        if abs(Tc - Tb) < abs(Tc - Ta):
            lam[:] = lam_b
            lnN = lnN_b
            T_from = Tb
        else:
            lam[:] = lam_a
            lnN = lnN_a
            T_from = Ta
        lnN, it, st, res, h = tp_robust(A, b, low, high, T_common, mw, Tc, lnP, lam, lnN,
                                        T_from, x_guess, weight, lnN_guess, max_iter, tol)
        total += it
        if st != 0:
            return Tc, lam, lnN, total, st, res, h, lo, hi
        fc = h - h_target
        if abs(fc) <= h_tol or hi - lo < 1e-11 * Tc:
            return Tc, lam, lnN, total, 0, res, h, lo, hi
        if fc * fb < 0.0:
            Ta = Tb
            fa = fb
            lam_a[:] = lam_b
            lnN_a = lnN_b
        else:
            fa *= 0.5
        Tb = Tc
        fb = fc
        lam_b[:] = lam
        lnN_b = lnN
    return Tc, lam, lnN, total, 1, res, h, min(Ta, Tb), max(Ta, Tb)


@njit(cache=True)
def composition_at(A, low, high, T_common, T, lnP, lam):
    g, _ = gibbs_rt(low, high, T_common, T)
    x = np.empty(A.shape[1])
    _mole_fractions(A, g, lnP, lam, x)
    return np.exp(x)
