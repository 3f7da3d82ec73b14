"""The complex action of a path: direct cutoff integral and the w - c + m decomposition."""
import hashlib
import json
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import it2j0y0, j1

from . import _engine
from ._radial import bessel_rule
from .kspace import (ModelParams, PolarGrid, beta, coupling, cutoff_mask, dispersion, grid_for,
                     omega, psi, renorm_energy, small_jump_symbol)
from .special_functions import bessel_j0, integral_j0


@dataclass
class ActionParts:
    w: float
    c: float
    m: float
    u: float
    counter_term: float = 0.0
    kappa: float | None = None
    direct_u: float | None = None
    drift: float | None = None
    epsilon: float | None = None

    def row(self, path_id=0):
        return {"path_id": path_id, "w": self.w, "c": self.c, "m": self.m, "u": self.u,
                "direct_u": self.direct_u, "epsilon": self.epsilon, "kappa": self.kappa}


# ---------------------------------------------------------------- pair potential

def _theta_integrand(r, params):
    p, w = dispersion(r, params)
    return 2 * np.pi * r / (w * (w + p))


def _int_j0_over_x_tail(z):
    """int_z^inf J0(x)/x dx."""
    return -np.euler_gamma - np.log(z / 2) + it2j0y0(z)[0]


def _int_j0_over_x2_tail(z):
    """int_z^inf J0(x)/x^2 dx."""
    return bessel_j0(z) / z - 1 + integral_j0(z) - j1(z)


def pair_potential_radial(r, params, sigma=None, lam=None):
    """w_{sigma,lam}(y) at |y| = r by direct oscillation-aware quadrature."""
    sigma = params.sigma if sigma is None else sigma
    lam = params.lam if lam is None else lam
    r = float(r)
    g2 = params.g**2
    h0 = 0.25 * min(1.0, max(params.m_b, 0.05))
    if np.isfinite(lam):
        if r == 0:
            return renorm_energy(sigma, lam, params)
        k, wk = bessel_rule(sigma, lam, r, h0=h0)
        return g2 * float(np.sum(wk * _theta_integrand(k, params) * bessel_j0(k * r)))
    if r == 0:
        return 0.0
    # subtract pi/r + pi m_p/(2 r^2) beyond r0 and add its transform in closed form
    r0 = max(sigma, 4.0 * max(1.0, params.m_p, params.m_b))
    r_end = max(10 * r0, min(2e4, 4000 / r))
    # r0 must be a panel edge because the subtracted tail switches on there
    k1, w1 = bessel_rule(sigma, r0, r, h0=h0)
    k2, w2 = bessel_rule(r0, r_end, r, h0=h0)
    k, wk = np.concatenate([k1, k2]), np.concatenate([w1, w2])
    f = _theta_integrand(k, params)
    tail = np.where(k >= r0, np.pi / k + np.pi * params.m_p / (2 * k * k), 0.0)
    val = float(np.sum(wk * (f - tail) * bessel_j0(k * r)))
    z = r0 * r
    val += np.pi * _int_j0_over_x_tail(z) + 0.5 * np.pi * params.m_p * r * _int_j0_over_x2_tail(z)
    return g2 * val


def pair_potential(y, params, sigma=None, lam=None):
    y = np.asarray(y, dtype=float)
    return pair_potential_radial(math.hypot(y[0], y[1]), params, sigma, lam)


def _xi(r, y_split):
    r = np.asarray(r, dtype=float)
    return np.where(r < y_split, np.log(np.maximum(r, 1e-300)), math.log(y_split) + (r - y_split) / y_split)


def _lagrange4(knots_lo, step, values, z):
    n = values.size
    u = (z - knots_lo) / step
    m = np.clip(np.floor(u).astype(int), 1, n - 3)
    t = u - m
    y0, y1, y2, y3 = values[m - 1], values[m], values[m + 1], values[m + 2]
    return (-t * (t - 1) * (t - 2) / 6 * y0 + (t + 1) * (t - 1) * (t - 2) / 2 * y1
            - (t + 1) * t * (t - 2) / 2 * y2 + (t + 1) * t * (t - 1) / 6 * y3)


def _cache_dir():
    d = Path(os.environ.get("NELSON2D_CACHE", Path.home() / ".cache" / "nelson2d"))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _key(tag, **kw):
    blob = json.dumps({"tag": tag, **kw}, sort_keys=True, default=float)
    return hashlib.sha1(blob.encode()).hexdigest()[:16]


@dataclass
class PairPotentialTable:
    """w_{sigma,lam}(|y|) on knots uniform in xi = ln|y| (|y| < 1) and |y| - 1 (|y| >= 1)."""
    params: ModelParams
    sigma: float
    lam: float
    xi0: float
    step: float
    values: np.ndarray
    y_max: float
    interp_error: float = float("nan")
    y_split: float = 1.0

    @classmethod
    def build(cls, params, sigma=None, lam=None, step=None, y_max=None, use_cache=True):
        sigma = params.sigma if sigma is None else sigma
        lam = params.lam if lam is None else lam
        if step is None:
            step = min(0.02, 0.1 / lam) if np.isfinite(lam) else 0.02
        if y_max is None:
            y_max = 60.0 / min(params.m_b, params.m_p) if params.m_p > 0 else 150.0
            y_max = min(y_max, 150.0)
        key = _key("w", N=params.N, m_p=params.m_p, m_b=params.m_b, g=params.g, sigma=sigma,
                   lam=lam, step=step, y_max=y_max)
        fn = _cache_dir() / f"wtable_{key}.npz"
        if use_cache and fn.exists():
            z = np.load(fn)
            return cls(params, sigma, lam, float(z["xi0"]), step, z["values"], y_max,
                       float(z["err"]))
        xi0 = math.log(1e-8)
        xi1 = float(_xi(y_max, 1.0))
        n = int(math.ceil((xi1 - xi0) / step)) + 1
        knots = xi0 + step * np.arange(n)
        radii = np.where(knots < 0, np.exp(knots), 1 + knots)
        vals = np.array([pair_potential_radial(r, params, sigma, lam) for r in radii])
        tab = cls(params, sigma, lam, xi0, step, vals, y_max)
        rng = np.random.default_rng(0)
        probe = np.exp(rng.uniform(math.log(1e-4), math.log(0.9 * y_max), 40))
        ref = np.array([pair_potential_radial(r, params, sigma, lam) for r in probe])
        tab.interp_error = float(np.max(np.abs(tab(probe) - ref)))
        if use_cache:
            np.savez(fn, xi0=xi0, values=vals, err=tab.interp_error)
        return tab

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        z = _xi(r, self.y_split)
        out = _lagrange4(self.xi0, self.step, self.values, np.clip(z, self.xi0, None))
        out = np.where(r > self.y_max, 0.0, out)
        if not np.isfinite(self.lam):
            out = np.where(r == 0, 0.0, out)
        return out

    def path_integral(self, lengths, pos):
        """Cumulative int sum_{j != l} w(X_j - X_l) ds at the segment ends."""
        vals = self.values
        if self.y_max < np.inf:
            # zero beyond y_max: append knots carrying zeros past the end
            vals = np.concatenate([vals, np.zeros(3)])
        knots = self.xi0 + self.step * np.arange(vals.size)
        return _engine.pair_sum_table(lengths, pos, knots, vals, self.y_split)


@lru_cache(maxsize=32)
def _pair_table_cached(params, sigma, lam):
    return PairPotentialTable.build(params, sigma, lam)


# ---------------------------------------------------------------- grid engine

class ActionEngine:
    """Evaluates all path functionals of one (params, grid, eps) combination."""

    def __init__(self, params, grid=None, eps=None, pair_table=None):
        if not np.isfinite(params.lam):
            raise ValueError("the grid engine needs a finite cutoff")
        self.params = params
        self.grid = grid or grid_for(params)
        self.eps = eps
        gr = self.grid
        r = gr.r
        mask = cutoff_mask(gr, params).astype(float)
        self.om = omega(r, params.m_b)
        self.v = coupling(r, params) * mask
        self.beta = beta(r, params) * mask
        s_eps = small_jump_symbol(r, eps, params.m_p) if eps else np.zeros_like(r)
        self.tests = np.ascontiguousarray(np.stack([
            self.v, (psi(r, params.m_p) - s_eps) * self.beta, s_eps * self.beta]))
        self.kx = np.ascontiguousarray(gr.kx.ravel())
        self.ky = np.ascontiguousarray(gr.ky.ravel())
        self.wgt = np.ascontiguousarray(gr.weights.ravel())
        self.ridx = np.repeat(np.arange(r.size), gr.n_theta)
        self.e_ren = renorm_energy(params.sigma, params.lam, params)
        self.pair_table = pair_table

    def _pair(self):
        if self.pair_table is None:
            self.pair_table = _pair_table_cached(self.params, self.params.sigma, self.params.lam)
        return self.pair_table

    def scan(self, x, path, t_end, breaks=()):
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        starts, lengths, pos = path.segments(t_end, breaks)
        pos = x[None] + pos
        K = lengths.size
        moved = np.ones((K, pos.shape[1]), bool)
        moved[1:] = np.any(pos[1:] != pos[:-1], axis=2)
        is_jump = np.zeros_like(moved)
        # a segment start that is an event time carries the jump flags of that event
        ev = np.searchsorted(path.times, starts[1:], side="left")
        hit = (ev < path.n_events)
        hit[hit] = path.times[ev[hit]] == starts[1:][hit]
        is_jump[1:][hit] = path.jump_mask[ev[hit]]
        is_jump &= moved
        I, H, C, Wg, U = _engine.scan_grid(self.kx, self.ky, self.wgt, self.ridx, self.om, self.v,
                                           self.beta, self.tests, lengths, pos, moved, is_jump)
        ends = np.concatenate([[0.0], np.cumsum(lengths)])
        ends[-1] = t_end
        return dict(times=ends, direct=I[:, 0], comp=I[:, 1], drift=I[:, 2], jumps=H, c=C,
                    w_grid=Wg, U=U.reshape(self.grid.shape), lengths=lengths, pos=pos)

    def parts(self, x, path, times, compensator="truncated"):
        """ActionParts at each requested time (sorted, within the horizon)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.eps is None and path.epsilon is not None:
            raise ValueError("engine built without eps for a jump-resolved path")
        t_end = float(times.max())
        res = self.scan(x, path, t_end, breaks=times)
        idx = np.searchsorted(res["times"], times - 1e-14 * max(1.0, t_end))
        idx = np.minimum(idx, res["times"].size - 1)
        w_cum = self._pair().path_integral(res["lengths"], res["pos"])
        out = []
        for t, i in zip(times, idx):
            counter = t * self.params.N * self.e_ren
            m = res["jumps"][i] + res["comp"][i]
            if compensator == "full":
                m += res["drift"][i]
            w = w_cum[i]
            c = res["c"][i]
            out.append(ActionParts(w=w, c=c, m=m, u=w - c + m, counter_term=counter,
                                   direct_u=res["direct"][i] - counter, drift=res["drift"][i],
                                   epsilon=path.epsilon))
        return out


@lru_cache(maxsize=16)
def _engine_cached(params, eps):
    return ActionEngine(params, eps=eps)


def _engine_for(params, path, grid=None):
    if grid is not None:
        return ActionEngine(params, grid, path.epsilon)
    return _engine_cached(params, path.epsilon)


def interaction_term(x, path, t, params):
    if params.N == 1:
        return 0.0
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    _, lengths, pos = path.segments(t)
    table = _pair_table_cached(params, params.sigma, params.lam)
    return float(table.path_integral(lengths, x[None] + pos)[-1])


def boundary_term(x, path, t, params, grid=None):
    if t == 0:
        return 0.0
    return float(_engine_for(params, path, grid).scan(x, path, t)["c"][-1])


def martingale_term(x, path, t, params, grid=None, compensator="truncated"):
    """Jump sum minus compensator; the compensator uses the same eps-truncated measure
    unless compensator='full'."""
    if path.epsilon is None:
        raise ValueError("martingale term needs a jump-resolved path")
    res = _engine_for(params, path, grid).scan(x, path, t)
    m = res["jumps"][-1] + res["comp"][-1]
    if compensator == "full":
        m += res["drift"][-1]
    return float(m)


def small_jump_drift(x, path, t, params, grid=None):
    """int_0^t Re <U+_s | (psi - psi_eps) beta sum_l e^{-ik.X_l,s}> ds.

    This is the exact difference direct - (w - c + m) when the compensator uses
    the truncated measure, up to quadrature error.
    """
    return float(_engine_for(params, path, grid).scan(x, path, t)["drift"][-1])


def direct_action(x, path, t, params, grid=None):
    if not np.isfinite(params.lam):
        raise ValueError("direct action needs a finite cutoff")
    if t == 0:
        return 0.0
    eng = _engine_for(params, path, grid) if path.epsilon is not None or grid is not None \
        else _engine_cached(params, None)
    return float(eng.scan(x, path, t)["direct"][-1] - t * params.N * eng.e_ren)


def direct_action_error(x, path, t, params, grid):
    """Quadrature error estimate: change of the direct action under grid refinement."""
    fine = PolarGrid.build(grid.r_min, grid.r_max, 2 * (grid.r.size // 8), 8, 2 * grid.n_theta)
    return abs(direct_action(x, path, t, params, fine) - direct_action(x, path, t, params, grid))


def renormalized_action(x, path, t, params, kappa=None, grid=None):
    """u = direct_action on (sigma, kappa) + [w - c + m] on (kappa, lam)."""
    from .uv import renormalized_parts
    return renormalized_parts(x, path, t, params, kappa, grid)


def default_kappa(params):
    return max(params.g**2 * params.N, 2 * params.m_b)
