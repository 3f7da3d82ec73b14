"""Exponential vectors and the action of the Feynman-Kac integrand on them."""
import cmath
import math
from dataclasses import dataclass

import numpy as np

from .action import ActionEngine
from .kspace import FieldFunction, coupling, cutoff_mask, omega, plane_waves, u_process
from .levy_paths import split_path


@dataclass(frozen=True)
class CoherentState:
    """exp(log_amplitude) * eps(profile)."""
    log_amplitude: complex
    profile: FieldFunction

    @classmethod
    def vacuum(cls, grid):
        return cls(0j, FieldFunction(grid, np.zeros(grid.shape, complex)))


def coherent_inner(a, b):
    if a.profile.grid is not b.profile.grid:
        raise ValueError("states live on different grids")
    return cmath.exp(a.log_amplitude.conjugate() + b.log_amplitude + a.profile.inner(b.profile))


def _check_finite(z):
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise FloatingPointError("non-finite log amplitude")
    return z


def apply_W(x, path, t, params, state, action_parts=None, potential_integral=0.0, engine=None):
    """W_t eps(h) = exp(u - int V - <U-|h>) eps(e^{-t omega} h - U+).

    action_parts may be an ActionParts (its direct_u is used when present, else u),
    a plain number, or None to compute the direct action on the state's grid.
    """
    grid = state.profile.grid
    if t == 0:
        return state
    u = action_parts
    if u is not None and not np.isscalar(u):
        u = u.direct_u if u.direct_u is not None else u.u
    if u is None:
        eng = engine or ActionEngine(params, grid, eps=path.epsilon)
        u = eng.parts(x, path, [t])[0].direct_u
    up = u_process(+1, x, path, t, params, grid)
    um = u_process(-1, x, path, t, params, grid)
    h = state.profile
    decay = np.exp(-t * omega(grid.r, params.m_b))
    new_profile = h.scale(decay) - up
    log_amp = state.log_amplitude + u - potential_integral - um.inner(h)
    return CoherentState(_check_finite(complex(log_amp)), new_profile)


def flow_check(x, path, s, t, params, grid, engine=None):
    """Residuals (r2, r3, r4) of the flow relations for a split at t and a further time s."""
    if s + t > path.horizon * (1 + 1e-12):
        raise ValueError("s + t exceeds the horizon")
    if s == 0:
        return 0.0, 0.0, 0.0
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    xt, shifted = split_path(path, t)
    x2 = x + xt
    w = omega(grid.r, params.m_b)[:, None]
    um_full = u_process(-1, x, path, s + t, params, grid).full()
    up_full = u_process(+1, x, path, s + t, params, grid).full()
    um_t = u_process(-1, x, path, t, params, grid).full()
    up_t = u_process(+1, x, path, t, params, grid).full()
    um_s = u_process(-1, x2, shifted, s, params, grid).full()
    up_s = u_process(+1, x2, shifted, s, params, grid).full()
    r2 = math.sqrt(grid.integrate(np.abs(um_full - um_t - np.exp(-t * w) * um_s) ** 2))
    r3 = math.sqrt(grid.integrate(np.abs(up_full - np.exp(-s * w) * up_t - up_s) ** 2))
    eng = engine or ActionEngine(params, grid, eps=path.epsilon)
    u_full = eng.parts(x, path, [s + t])[0].direct_u
    u_t = eng.parts(x, path, [t])[0].direct_u if t > 0 else 0.0
    u_s = eng.parts(x2, shifted, [s])[0].direct_u
    cross = grid.integrate(np.conj(up_t) * um_s).real
    r4 = abs(u_full - u_t - u_s - cross)
    return r2, r3, r4


def _ladder(path, t, n_sub):
    """Uniform sub-ladder with n_sub cells between consecutive events on [0, t]."""
    k = path.index_at(t)
    cuts = np.concatenate([[0.0], path.times[:k][path.times[:k] < t], [t]])
    nodes = [np.linspace(a, b, n_sub + 1)[:-1] for a, b in zip(cuts[:-1], cuts[1:]) if b > a]
    return np.concatenate(nodes + [[t]])


def generator_residual(x, path, t, params, grid, h1, h2, potential=None, n_sub=8,
                       e_ren=None, counter_sign=1):
    """sup over the ladder of |F(s) - F(0) + int_0^s G| for F(s) = <eps(h1)|W_s eps(h2)>.

    G(s) = [<h1|omega g_s> + sum_j (<f_j|g_s> + <h1|f_j>) + V + N E_ren] F(s) with
    g_s the profile of W_s eps(h2) and f_j = e^{-ik.X_j,s} v.  The s-integral uses the
    left-point rule on the ladder, so the residual is first order in the step.
    counter_sign=-1 flips the counter term inside G (it then fails to converge).
    """
    from .kspace import renorm_energy
    if not np.isfinite(params.lam):
        raise ValueError("needs a finite cutoff")
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    e_ren = renorm_energy(params.sigma, params.lam, params) if e_ren is None else e_ren
    nodes = _ladder(path, t, n_sub)
    r = grid.r
    w = omega(r, params.m_b)[:, None]
    v = (coupling(r, params) * cutoff_mask(grid, params))[:, None]
    wts = grid.weights
    H1 = h1.full()
    H2 = h2.full()
    Up = np.zeros(grid.shape, complex)
    Um = np.zeros(grid.shape, complex)
    u = 0.0
    V_int = 0.0
    F0 = cmath.exp(np.sum(wts * np.conj(H1) * H2))
    integral = 0j
    worst = 0.0
    for i in range(nodes.size):
        s = nodes[i]
        pos = x + path.value(s)
        S = plane_waves(grid, pos).sum(axis=0)
        vS = v * S
        g = np.exp(-s * w) * H2 - Up
        L = u - V_int - np.sum(wts * np.conj(Um) * H2)
        F = cmath.exp(L + np.sum(wts * np.conj(H1) * g))
        res = abs(F - F0 + integral)
        worst = max(worst, res)
        if i == nodes.size - 1:
            break
        V_s = potential(pos) if potential is not None else 0.0
        G = (np.sum(wts * np.conj(H1) * w * g) + np.sum(wts * np.conj(vS) * g)
             + np.sum(wts * np.conj(H1) * vS) + V_s + counter_sign * params.N * e_ren) * F
        h = nodes[i + 1] - s
        integral += G * h
        # exact updates over [s, s + h] with the path frozen
        a = -np.expm1(-h * w) / w
        b = (h - a) / w
        u += (np.sum(wts * (np.conj(Up) * vS).real * a)
              + np.sum(wts * np.abs(vS) ** 2 * b)) - h * params.N * e_ren
        Um = Um + np.exp(-s * w) * a * vS
        Up = np.exp(-h * w) * Up + a * vS
        V_int += V_s * h
    return worst


def semigroup_symmetry(params, grid, f_pair, h_pair, t, n_paths, rng, sampler, potential=None):
    """MC estimates of <Psi'|T_t Psi> and <Psi|T_t Psi'> for Psi = f (x) eps(h).

    f_pair = ((f, f_sampler), (f', f'_sampler)) with f callables on R^{2N} and
    samplers drawing x from |f| / int|f| together with that normalization.
    Returns ((mean1, se1), (mean2, se2)).
    """
    (f, f_draw), (fp, fp_draw) = f_pair
    h, hp = h_pair
    engines = {}
    out = []
    for (left, left_draw, hl), (right, hr) in (((fp, fp_draw, hp), (f, h)),
                                               ((f, f_draw, h), (fp, hp))):
        vals = np.empty(n_paths)
        for i in range(n_paths):
            x, norm, sign = left_draw(rng)
            path = sampler(rng)
            if t == 0:
                st = CoherentState(0j, hl)
                xt = x
            else:
                if path.epsilon not in engines:
                    engines[path.epsilon] = ActionEngine(params, grid, eps=path.epsilon)
                st = apply_W(x, path, t, params, CoherentState(0j, hl),
                             engine=engines[path.epsilon],
                             potential_integral=0.0 if potential is None
                             else potential(x, path, t))
                xt = x + path.value(t).ravel()
            amp = coherent_inner(st, CoherentState(0j, hr))
            vals[i] = norm * sign * right(xt) * amp.real
        out.append((vals.mean(), vals.std(ddof=1) / math.sqrt(n_paths)))
    return tuple(out)
