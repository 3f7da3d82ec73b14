"""The action above a splitting scale kappa with no ultraviolet cutoff.

All inner products between plane waves reduce to radial kernels

    K(delta, D) = int_kappa^inf 2 pi r phi(r) exp(-delta omega(r)) J0(r D) dr

with phi one of
    F_beta : 1 / (omega^2 (omega + psi))
    F_psi  : psi_eps / (omega^3 (omega + psi))
    G_psi  : psi_eps / (omega^2 (omega + psi))   (delta = 0 only)
all times g^2.  The kernels are tabulated once per (params, kappa, eps) and
interpolated by bicubic splines in (ln delta, D).
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.interpolate import CubicSpline, RectBivariateSpline

from .action import (ActionEngine, ActionParts, PairPotentialTable, _cache_dir, _key,
                     default_kappa)
from .kspace import psi, small_jump_symbol
from .levy_paths import jump_rate
from .special_functions import j0_scalar

_GX, _GW = np.polynomial.legendre.leggauss(10)
OSC_CUT = 500.0
R_FAR = 1e8
DAMP = 45.0


@njit(cache=True)
def _psie_at(r, lnr0, step, vals, lam_eps):
    u = (math.log(r) - lnr0) / step
    n = vals.size
    if u >= n - 1:
        return lam_eps
    m = int(u)
    if m < 1:
        m = 1
    if m > n - 3:
        m = n - 3
    t = u - m
    return (-t * (t - 1) * (t - 2) / 6 * vals[m - 1] + (t + 1) * (t - 1) * (t - 2) / 2 * vals[m]
            - (t + 1) * t * (t - 2) / 2 * vals[m + 1] + (t + 1) * t * (t - 1) / 6 * vals[m + 2])


@njit(cache=True)
def hankel_kernel(kind, kappa, delta, D, m_p, m_b, lnr0, step, psie, lam_eps, gx, gw):
    if delta > 0 and delta * math.sqrt(kappa * kappa + m_b * m_b) > DAMP:
        return 0.0
    r_end = OSC_CUT / D if D > 0 else R_FAR
    if delta > 0:
        r_end = min(r_end, DAMP / delta)
    r_end = max(r_end, 2 * kappa)
    half = math.pi / D if D > 0 else 1e300
    total = 0.0
    e = kappa
    while e < r_end:
        h = min(max(0.5 * e, 0.25), half, r_end - e)
        for q in range(gx.size):
            r = e + 0.5 * h * (gx[q] + 1)
            w = math.sqrt(r * r + m_b * m_b)
            p = r * r / (math.sqrt(r * r + m_p * m_p) + m_p) if m_p > 0 else r
            if kind == 0:
                f = 1 / (w * w * (w + p))
            elif kind == 1:
                f = _psie_at(r, lnr0, step, psie, lam_eps) / (w * w * w * (w + p))
            else:
                f = _psie_at(r, lnr0, step, psie, lam_eps) / (w * w * (w + p))
            if delta > 0:
                f *= math.exp(-delta * w)
            total += 0.5 * h * gw[q] * 2 * math.pi * r * f * j0_scalar(r * D)
        e += h
    if delta == 0 and kind != 1:
        # integrand ~ A / r^2 beyond r_end
        A = math.pi if kind == 0 else math.pi * lam_eps
        if D > 0:
            z = r_end * D
            total += A * D * (-math.sqrt(2 / math.pi) * z**-2.5 * math.sin(z - math.pi / 4))
        else:
            total += A / r_end
    return total


@njit(cache=True)
def _kernel_grid(kind, kappa, deltas, Ds, m_p, m_b, lnr0, step, psie, lam_eps, gx, gw):
    out = np.empty((deltas.size, Ds.size))
    for i in range(deltas.size):
        for j in range(Ds.size):
            out[i, j] = hankel_kernel(kind, kappa, deltas[i], Ds[j], m_p, m_b, lnr0, step, psie,
                                      lam_eps, gx, gw)
    return out


@njit(cache=True)
def _kernel_points(kind, kappa, deltas, Ds, m_p, m_b, lnr0, step, psie, lam_eps, gx, gw):
    out = np.empty(deltas.size)
    for i in range(deltas.size):
        out[i] = hankel_kernel(kind, kappa, deltas[i], Ds[i], m_p, m_b, lnr0, step, psie,
                               lam_eps, gx, gw)
    return out


class RadialKernel:
    """Interpolated K(delta, D) with direct quadrature outside the table."""

    def __init__(self, kind, kappa, params, psie_table, deltas, Ds, values, row0):
        self.kind = kind
        self.kappa = kappa
        self.params = params
        self.psie = psie_table
        self.deltas = deltas
        self.Ds = Ds
        self.d_min = deltas[0] if deltas.size else np.inf
        self.d_max = deltas[-1] if deltas.size else 0.0
        self.D_max = Ds[-1]
        self.values = values
        self.row0 = row0
        self.spl0 = CubicSpline(Ds, row0)
        self.spl = RectBivariateSpline(np.log(deltas), Ds, values) if deltas.size else None
        self.g2 = params.g**2

    def direct(self, delta, D):
        lnr0, step, vals, lam_eps = self.psie
        delta = np.ascontiguousarray(delta, dtype=float)
        D = np.ascontiguousarray(D, dtype=float)
        return self.g2 * _kernel_points(self.kind, self.kappa, delta, D, self.params.m_p,
                                        self.params.m_b, lnr0, step, vals, lam_eps, _GX, _GW)

    def __call__(self, delta, D):
        delta = np.asarray(delta, dtype=float)
        D = np.asarray(D, dtype=float)
        out = np.zeros(np.broadcast(delta, D).shape)
        delta, D = np.broadcast_arrays(delta, D)
        far = D > self.D_max
        if np.any(far):
            out[far] = self.direct(delta[far], D[far])
        near = ~far
        z = near & (delta <= 0)
        out[z] = self.g2 * self.spl0(D[z])
        if self.spl is None:
            return out
        mid = near & (delta > 0) & (delta < self.d_min)
        if np.any(mid):
            lam = delta[mid] / self.d_min
            out[mid] = self.g2 * ((1 - lam) * self.spl0(D[mid])
                                  + lam * self.spl.ev(np.log(self.d_min), D[mid]))
        tab = near & (delta >= self.d_min) & (delta <= self.d_max)
        if np.any(tab):
            out[tab] = self.g2 * self.spl.ev(np.log(delta[tab]), D[tab])
        return out


@dataclass
class UVKernels:
    kappa: float
    eps: float
    F_beta: RadialKernel
    F_psi: RadialKernel
    G_psi: RadialKernel
    pair: PairPotentialTable


def _psie_table(params, kappa, eps):
    r_hi = max(1e5 / eps, 10 * kappa)
    step = 0.005
    lnr = np.arange(math.log(kappa) - 2 * step, math.log(r_hi) + 3 * step, step)
    r = np.exp(lnr)
    vals = psi(r, params.m_p) - small_jump_symbol(r, eps, params.m_p)
    return float(lnr[0]), step, vals, float(jump_rate(eps, params.m_p))


def _grids(params, kappa):
    w_k = math.sqrt(kappa**2 + params.m_b**2)
    deltas = np.exp(np.arange(math.log(1e-7), math.log(DAMP / w_k) + 0.2, 0.2))
    D_max = 40.0
    Ds = np.unique(np.concatenate([[0.0], np.geomspace(1e-5, 0.8 / kappa, 80),
                                   np.arange(0.8 / kappa, D_max + 1e-9, 0.15 / kappa)]))
    return deltas, Ds


def build_uv_kernels(params, kappa, eps, use_cache=True):
    key = _key("uv", N=params.N, m_p=params.m_p, m_b=params.m_b, kappa=kappa, eps=eps,
               cut=OSC_CUT, far=R_FAR)
    fn = _cache_dir() / f"uvkern_{key}.npz"
    psie = _psie_table(params, kappa, eps)
    deltas, Ds = _grids(params, kappa)
    if use_cache and fn.exists():
        z = np.load(fn)
        tabs = [z["Fb"], z["Fp"], z["Gp"]]
    else:
        lnr0, step, vals, lam_eps = psie
        tabs = []
        for kind in (0, 1):
            full = _kernel_grid(kind, kappa, np.concatenate([[0.0], deltas]), Ds, params.m_p,
                                params.m_b, lnr0, step, vals, lam_eps, _GX, _GW)
            tabs.append(full)
        tabs.append(_kernel_grid(2, kappa, np.zeros(1), Ds, params.m_p, params.m_b, lnr0, step,
                                 vals, lam_eps, _GX, _GW))
        if use_cache:
            np.savez(fn, Fb=tabs[0], Fp=tabs[1], Gp=tabs[2])
    kern = []
    for kind, tab in zip((0, 1), tabs[:2]):
        kern.append(RadialKernel(kind, kappa, params, psie, deltas, Ds, tab[1:], tab[0]))
    kern.append(RadialKernel(2, kappa, params, psie, np.zeros(0), Ds, None, tabs[2][0]))
    pair = PairPotentialTable.build(params, sigma=kappa, lam=math.inf)
    return UVKernels(kappa, eps, kern[0], kern[1], kern[2], pair)


@lru_cache(maxsize=8)
def uv_kernels(params, kappa, eps):
    return build_uv_kernels(params, kappa, eps)


def _dist(a, b):
    return np.hypot(a[..., 0] - b[..., 0], a[..., 1] - b[..., 1])


def uv_parts(x, path, times, params, kappa, kernels=None):
    """w, c and m restricted to momenta above kappa, at each query time."""
    if path.epsilon is None:
        raise ValueError("needs a jump-resolved path")
    kern = kernels or uv_kernels(params, kappa, path.epsilon)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    t_end = float(times.max())
    starts, lengths, pos = path.segments(t_end, breaks=times)
    pos = x[None] + pos
    K, N = lengths.size, pos.shape[1]
    tau = np.concatenate([starts, [t_end]])
    Fb, Fp, Gp = kern.F_beta, kern.F_psi, kern.G_psi

    # jump sum at segment starts
    ev = np.searchsorted(path.times, starts[1:], side="left")
    hit = ev < path.n_events
    hit[hit] = path.times[ev[hit]] == starts[1:][hit]
    H = np.zeros(K + 1)
    for n in range(1, K):
        if not hit[n - 1]:
            continue
        for l in np.nonzero(path.jump_mask[ev[n - 1]])[0]:
            a, b = pos[n - 1, l], pos[n, l]
            d1 = (tau[n] - tau[1:n + 1])[:, None]
            d0 = (tau[n] - tau[:n])[:, None]
            P = pos[:n]
            val = (Fb(d1, _dist(P, b)) - Fb(d0, _dist(P, b))
                   - Fb(d1, _dist(P, a)) + Fb(d0, _dist(P, a)))
            H[n] += val.sum()
    H = np.cumsum(H)

    # compensator per segment
    comp = np.zeros(K + 1)
    for n in range(K):
        L = lengths[n]
        Dcur = _dist(pos[n][:, None], pos[n][None, :])
        seg = (L * Gp(0.0, Dcur) - Fp(0.0, Dcur) + Fp(L, Dcur)).sum()
        if n > 0:
            P = pos[:n]
            D = _dist(P[:, :, None, :], pos[n][None, None, :, :])
            t0 = tau[n]
            t1 = tau[n + 1]
            ti1 = tau[1:n + 1][:, None, None]
            ti0 = tau[:n][:, None, None]
            seg += (Fp(t0 - ti1, D) - Fp(t1 - ti1, D) - Fp(t0 - ti0, D) + Fp(t1 - ti0, D)).sum()
        comp[n + 1] = comp[n] + seg

    w_cum = kern.pair.path_integral(lengths, pos)
    idx = np.minimum(np.searchsorted(tau, times - 1e-14 * max(1.0, t_end)), K)
    out = []
    for t, n in zip(times, idx):
        xt = x + path.value(t)
        if n == 0:
            c = 0.0
        else:
            P = pos[:n]
            D = _dist(P[:, :, None, :], xt[None, None, :, :])
            d1 = (t - tau[1:n + 1])[:, None, None]
            d0 = (t - tau[:n])[:, None, None]
            c = float((Fb(d1, D) - Fb(d0, D)).sum())
        out.append((float(w_cum[n]), c, float(H[n] + comp[n])))
    return out


def renormalized_parts(x, path, t, params, kappa=None, grid=None):
    """ActionParts of u_{sigma, inf, t} split at kappa."""
    kappa = default_kappa(params) if kappa is None else kappa
    if path.epsilon is None:
        raise ValueError("needs a jump-resolved path")
    low = params.with_(lam=kappa)
    eng = ActionEngine(low, grid, eps=path.epsilon) if grid is not None \
        else _low_engine(low, path.epsilon)
    d = eng.parts(x, path, [t])[0]
    w, c, m = uv_parts(x, path, [t], params, kappa)[0]
    u = d.direct_u + w - c + m
    return ActionParts(w=w, c=c, m=m, u=u, counter_term=d.counter_term, kappa=kappa,
                       direct_u=d.direct_u, epsilon=path.epsilon)


@lru_cache(maxsize=8)
def _low_engine(params, eps):
    return ActionEngine(params, eps=eps)
