"""Closed-form energy bounds, exponential moment bounds and asymptotic ratio tables.

Every function evaluates a right-hand side literally.  Constants that only exist
non-constructively are fields of BoundConstants and default to 1.
"""
import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import integrate

from .kspace import renorm_energy


@dataclass(frozen=True)
class BoundConstants:
    b: float = 1.0
    b_prime: float = 1.0
    c: float = 1.0
    c_prime: float = 1.0
    c_m: float = 1.0          # universal constant of the martingale moment bound
    alpha: float = 2.0
    theta: float = 0.99
    s: float = 1.0
    C_theta: float = 1.0      # C(theta, m_p, 1 v m_b) of the upper bound
    c_up: float = 1.0
    c_star: float = 1.0
    eps_star: float = 0.5

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if not self.s > 0:
            raise ValueError("s must be positive")
        if not 0 < self.eps_star < 1:
            raise ValueError("eps_star must lie in (0, 1)")
        if self.c_star < 1:
            raise ValueError("c_star must be at least 1")
        for name in ("b", "b_prime", "c", "c_prime", "c_m", "C_theta", "c_up"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def leading_only(self):
        """Zero every subleading constant; keeps b, alpha, theta, s."""
        return replace(self, b_prime=0.0, c=0.0, c_prime=0.0, C_theta=0.0, c_up=0.0)


DEFAULT = BoundConstants()


def _exp(x):
    # vacuous bounds overflow; report them as infinite
    return math.exp(x) if x < 709.0 else math.inf


def _check_massive_boson(params):
    if params.m_b <= 0:
        raise ValueError("needs m_b > 0")


def lower_bound(params, constants=DEFAULT, variant="small-coupling"):
    _check_massive_boson(params)
    g2, N, mp, mb = params.g**2, params.N, params.m_p, params.m_b
    k = constants
    if variant == "small-coupling":
        return (-k.b * g2 * g2 * N**3 / mb * _exp(8 * math.pi * g2 * N / mb)
                - k.b_prime * g2 * g2 * N**2 * (N - 1) / mb * (1 + mp / mb))
    if variant not in ("large-coupling", "large-coupling-massive"):
        raise ValueError(f"unknown variant {variant!r}")
    if g2 * N < mb:
        raise ValueError("large-coupling bounds need g^2 N >= m_b")
    L = math.log(g2 * N / mb)
    if variant == "large-coupling":
        braces = math.pi * g2 * (2 * N * N - N) * L
    else:
        if mp <= 0:
            raise ValueError("the massive variant needs m_p > 0")
        braces = (2 * math.pi * g2 * N * (N - 1) * L + math.pi * g2 * N * math.log(max(1.0, g2 * N))
                  + math.pi * g2 * N / mp * min(g2 * N, 1.0))
    return -braces - k.c * g2 * N * N - k.c_prime * (N - 1) * mp


def exp_moment_bound(params, constants=DEFAULT, p=1.0, t=1.0, which="u1"):
    """Right-hand side for E[sup_{s<=t} exp(p u_s)]."""
    _check_massive_boson(params)
    if p <= 0 or t < 0:
        raise ValueError("need p > 0 and t >= 0")
    g2, N, mp, mb = params.g**2, params.N, params.m_p, params.m_b
    k = constants
    a = k.alpha
    pref = k.b**N * math.sqrt(a / (a - 1))
    if which == "u1":
        expo = (2 * math.pi * p * N * N * g2 / mb
                + t * k.c_prime * p * p * g2 * g2 * N * N * (N - 1) / mb * (1 + mp / mb)
                + t * k.c * a * p * p * g2 * g2 * N**3 / mb * _exp(8 * math.pi * a * p * g2 * N / mb))
        return pref * _exp(expo)
    if which != "u2":
        raise ValueError(f"unknown bound {which!r}")
    if p * g2 * N <= mb:
        raise ValueError("u2 needs p g^2 N > m_b")
    L = math.log(p * g2 * N / mb)
    if mp > 0:
        first = (2 * math.pi * p * g2 * N * (N - 1) * L + math.pi * p * g2 * N * max(math.log(p * g2 * N), 0.0)
                 + math.pi * g2 * N / mp * min(p * g2 * N, 1.0))
    else:
        first = math.pi * p * g2 * (2 * N * N - N) * L
    rest = k.c_prime * (N - 1) * (mp + p * g2 * N) + k.c * a * p * g2 * N * N * math.exp(8 * math.pi * a)
    return pref * _exp(t * (first + rest))


def trial_integral(params, s, sigma, lam):
    """int_{sigma < |k| < lam} exp(-|k|^2 / (4 s g^4 N^2)) / (|k|^2 + m_b^2) dk."""
    g2N = params.g**2 * params.N
    if g2N == 0:
        return 0.0
    scale = 4 * s * g2N * g2N

    def f(r):
        return 2 * math.pi * r * math.exp(-r * r / scale) / (r * r + params.m_b**2)

    if params.m_b == 0:
        # 2 pi e^{-r^2/scale}/r: integrate in ln r to keep the sigma -> 0 end accurate
        lo, hi = math.log(sigma), math.log(lam)
        pts = [x for x in (math.log(math.sqrt(scale)),) if lo < x < hi]
        return integrate.quad(lambda z: 2 * math.pi * math.exp(-math.exp(2 * z) / scale), lo, hi,
                              points=pts or None, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
    pts = [x for x in (math.sqrt(scale), params.m_b) if sigma < x < lam]
    return integrate.quad(f, sigma, lam, points=pts or None, limit=200, epsabs=1e-13,
                          epsrel=1e-12)[0]


def trial_upper_bound(params, s, sigma=None, lam=None):
    """Gaussian trial-state upper bound on inf spec of the cutoff operator without counter term."""
    sigma = params.sigma if sigma is None else sigma
    lam = params.lam if lam is None else lam
    if not np.isfinite(lam):
        raise ValueError("needs a finite cutoff")
    if s <= 0:
        raise ValueError("s must be positive")
    if params.m_b == 0 and sigma <= 0:
        raise ValueError("m_b = 0 needs sigma > 0")
    if not 0 <= sigma < lam:
        raise ValueError("need 0 <= sigma < lam")
    g2N2 = params.g**2 * params.N**2
    return math.sqrt(math.pi * s / 2) * g2N2 - g2N2 * trial_integral(params, s, sigma, lam)


def trial_upper_bound_renormalized(params, s, sigma=None, lam=None):
    """trial_upper_bound plus the counter term N E^ren."""
    sigma = params.sigma if sigma is None else sigma
    lam = params.lam if lam is None else lam
    return trial_upper_bound(params, s, sigma, lam) + params.N * renorm_energy(sigma, lam, params)


def best_trial_s(params, sigma=None, lam=None, s_grid=None, counter_term=True):
    """Grid search over the trial scale s; returns (s, bound)."""
    s_grid = np.geomspace(1e-4, 1e2, 61) if s_grid is None else s_grid
    fn = trial_upper_bound_renormalized if counter_term else trial_upper_bound
    vals = [fn(params, float(s), sigma, lam) for s in s_grid]
    i = int(np.argmin(vals))
    return float(s_grid[i]), float(vals[i])


def ubgauss2(params, s, constants=DEFAULT):
    """Upper bound with counter term at the cutoff where lam^2 + m_b^2 = g^4 N^2."""
    _check_massive_boson(params)
    g2N = params.g**2 * params.N
    if not g2N > params.m_b:
        raise ValueError("needs g^2 N > m_b")
    N, mb = params.N, params.m_b
    e = math.exp(-1 / (4 * s))
    ep = constants.eps_star
    val = (math.sqrt(math.pi * s / 2) * params.g**2 * N * N
           - 2 * math.pi * e * params.g**2 * N * (N - 1) * math.log(g2N / mb)
           - math.pi * g2N * e * (2 - 2 * ep) / (2 - ep) * max(0.0, math.log(g2N / constants.c_star))
           + math.pi / (4 * s) * g2N)
    if params.m_p == 0:
        val -= math.pi * g2N * e * math.log(min(1.0, g2N) / (math.e * mb))
    return val


def lambda_gn(params):
    return math.sqrt(params.g**4 * params.N**2 - params.m_b**2)


def renormalized_upper_bound(params, theta=None, constants=DEFAULT):
    _check_massive_boson(params)
    theta = constants.theta if theta is None else theta
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    g2, N, mp, mb = params.g**2, params.N, params.m_p, params.m_b
    if not g2 * N > math.sqrt(2) * mb:
        raise ValueError("needs g^2 N > sqrt(2) m_b")
    val = (constants.c_up * (N - 1) * mp + constants.C_theta * g2 * N * N
           - 2 * math.pi * theta * g2 * N * (N - 1) * math.log(g2 * N / mb)
           - math.pi * theta * g2 * N * math.log(max(1.0, g2 * N)))
    if mp == 0:
        val -= math.pi * theta * g2 * N * math.log(min(1.0, g2 * N) / mb)
    return val


_REGIMES = {
    # name: (parameter varied, normaliser, target, lower variant)
    "N": ("N", lambda p: p.N**2 * math.log(p.N), lambda p: -2 * math.pi * p.g**2, "large-coupling"),
    "g": ("g2", lambda p: p.g**2 * math.log(p.g**2),
          lambda p: -math.pi * (2 * p.N**2 - p.N), "large-coupling"),
    "m_b(massive)": ("m_b", lambda p: math.log(p.m_b),
                     lambda p: 2 * math.pi * p.g**2 * p.N * (p.N - 1), "large-coupling-massive"),
    "m_b(massless)": ("m_b", lambda p: math.log(p.m_b),
                      lambda p: math.pi * p.g**2 * (2 * p.N**2 - p.N), "large-coupling"),
}


def asymptotic_table(regime, grid, params, theta=0.999, constants=None):
    """Rows (x, upper/normaliser, lower/normaliser, target) along grid.

    Only the explicit leading coefficients enter unless constants are given.
    """
    if regime not in _REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    knob, norm, target, variant = _REGIMES[regime]
    if regime == "m_b(massive)" and params.m_p <= 0:
        raise ValueError("the massive regime needs m_p > 0")
    if regime == "m_b(massless)" and params.m_p != 0:
        raise ValueError("the massless regime needs m_p = 0")
    k = (constants or BoundConstants()).leading_only() if constants is None else constants
    rows = []
    for x in grid:
        if knob == "N":
            p = params.with_(N=int(x))
        elif knob == "g2":
            p = params.with_(g=math.sqrt(x))
        else:
            p = params.with_(m_b=float(x))
        nrm = norm(p)
        up = renormalized_upper_bound(p, theta, k)
        lo = lower_bound(p, k, variant)
        rows.append(dict(x=float(x), upper_ratio=up / nrm, lower_ratio=lo / nrm, target=target(p)))
    return rows


def constants_header(constants):
    return {f"const_{k}": v for k, v in asdict(constants).items()}
