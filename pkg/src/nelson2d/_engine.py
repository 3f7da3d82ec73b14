"""Compiled inner loops for path functionals on the polar grid."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _phi2(x):
    # (x - 1 + e^{-x}) / x^2
    if x < 1e-2:
        return 0.5 - x / 6 + x * x / 24 - x * x * x / 120 + x * x * x * x / 720
    return (x + math.expm1(-x)) / (x * x)


@njit(cache=True)
def scan_grid(kx, ky, wgt, ridx, om, v, beta, tests, lengths, pos, moved, is_jump):
    """Walk a piecewise constant path through the grid.

    kx, ky, wgt, ridx: flattened grid (n_g,) with radial index per node.
    om, v, beta: radial arrays (n_r,).  tests: (n_f, n_r) radial test functions f.
    lengths: (K,) segment lengths; pos: (K, N, 2) positions on each segment.
    moved / is_jump: (K, N) whether particle j changed position at the start of
    segment k, and whether that change is a jump of the Levy measure.

    Returns cumulative arrays at the K+1 segment boundaries:
      I[k, f] = int_0^{t_k} Re <U+_s | f sum_j e^{-ik.X_j,s}> ds
      H[k]    = sum of jump increments Re <U+ | (e_new - e_old) beta> up to t_k
      C[k]    = Re <U+_{t_k} | beta sum_j e^{-ik.X_j,t_k}>
      Wg[k]   = int_0^{t_k} sum_{j != l} w(X_j - X_l) ds (grid quadrature)
    and the final U+ on the grid.
    """
    n_g = kx.size
    n_r = om.size
    K = lengths.size
    N = pos.shape[1]
    n_f = tests.shape[0]
    U = np.zeros(n_g, dtype=np.complex128)
    E = np.zeros((N, n_g), dtype=np.complex128)
    S = np.zeros(n_g, dtype=np.complex128)
    I = np.zeros((K + 1, n_f))
    H = np.zeros(K + 1)
    C = np.zeros(K + 1)
    Wg = np.zeros(K + 1)
    a = np.empty(n_r)
    b = np.empty(n_r)
    d = np.empty(n_r)
    acc_f = np.zeros(n_f)
    h_tot = 0.0
    w_tot = 0.0
    for k in range(K):
        # phase updates and jump increments at the segment start
        for j in range(N):
            if not moved[k, j]:
                continue
            px = pos[k, j, 0]
            py = pos[k, j, 1]
            dh = 0.0
            for g in range(n_g):
                ph = kx[g] * px + ky[g] * py
                en = complex(math.cos(ph), -math.sin(ph))
                de = en - E[j, g]
                if is_jump[k, j]:
                    dh += wgt[g] * beta[ridx[g]] * (U[g].real * de.real + U[g].imag * de.imag)
                S[g] += de
                E[j, g] = en
            h_tot += dh
        if k > 0:
            H[k] = h_tot
            cc = 0.0
            for g in range(n_g):
                cc += wgt[g] * beta[ridx[g]] * (U[g].real * S[g].real + U[g].imag * S[g].imag)
            C[k] = cc
        L = lengths[k]
        for i in range(n_r):
            x = L * om[i]
            d[i] = math.exp(-x)
            a[i] = -math.expm1(-x) / om[i]
            b[i] = L * L * _phi2(x)
        for f in range(n_f):
            acc_f[f] = 0.0
        wk = 0.0
        for g in range(n_g):
            i = ridx[g]
            s = S[g]
            us = U[g].real * s.real + U[g].imag * s.imag
            s2 = s.real * s.real + s.imag * s.imag
            for f in range(n_f):
                acc_f[f] += wgt[g] * tests[f, i] * (us * a[i] + v[i] * s2 * b[i])
            wk += wgt[g] * v[i] * beta[i] * (s2 - N)
            U[g] = d[i] * U[g] + a[i] * v[i] * s
        for f in range(n_f):
            I[k + 1, f] = I[k, f] + acc_f[f]
        w_tot += L * wk
        Wg[k + 1] = w_tot
    H[K] = h_tot
    cc = 0.0
    for g in range(n_g):
        cc += wgt[g] * beta[ridx[g]] * (U[g].real * S[g].real + U[g].imag * S[g].imag)
    C[K] = cc
    return I, H, C, Wg, U


@njit(cache=True)
def pair_sum_table(lengths, pos, knots, values, y_split):
    """int sum_{j != l} w(X_j - X_l) ds with w tabulated on knots uniform in
    xi = ln|y| below y_split and ln(y_split) + (|y| - y_split)/y_split above."""
    K = lengths.size
    N = pos.shape[1]
    out = np.zeros(K + 1)
    tot = 0.0
    lo = knots[0]
    hi = knots[-1]
    n = knots.size
    step = (hi - lo) / (n - 1)
    for k in range(K):
        s = 0.0
        for j in range(N):
            for l in range(j + 1, N):
                dx = pos[k, j, 0] - pos[k, l, 0]
                dy = pos[k, j, 1] - pos[k, l, 1]
                r = math.sqrt(dx * dx + dy * dy)
                if r <= 0.0:
                    z = lo
                elif r < y_split:
                    z = math.log(r)
                else:
                    z = math.log(y_split) + (r - y_split) / y_split
                if z <= lo:
                    val = values[0]
                elif z >= hi:
                    val = values[n - 1]
                else:
                    u = (z - lo) / step
                    m = int(u)
                    if m > n - 3:
                        m = n - 3
                    if m < 1:
                        m = 1
                    # cubic Lagrange on knots m-1..m+2
                    t = u - m
                    y0 = values[m - 1]
                    y1 = values[m]
                    y2 = values[m + 1]
                    y3 = values[m + 2]
                    val = (-t * (t - 1) * (t - 2) / 6 * y0 + (t + 1) * (t - 1) * (t - 2) / 2 * y1
                           - (t + 1) * t * (t - 2) / 2 * y2 + (t + 1) * t * (t - 1) / 6 * y3)
                s += 2 * val
        tot += lengths[k] * s
        out[k + 1] = tot
    return out
