"""Bessel functions and the densities of the 2D relativistic Levy process.

J0 is evaluated in three regimes:

* x < 8: Taylor series (terms decay once k > x/2, at most ~30 terms),
* 8 <= x < 25: trapezoid rule with 64 nodes on the periodic integral
  J0(x) = (1/2pi) int_0^{2pi} cos(x sin t) dt, whose error is 2|J_64(x)| < 1e-20,
* x >= 25: Hankel asymptotic series P, Q with coefficients generated by the
  recursion a_k = -a_{k-1} (2k-1)^2 / (8k).

The middle branch avoids the loss of accuracy of the asymptotic series near x = 8.
Errors are absolute; relative error is meaningless at the zeros of J0.
"""
import math

import numpy as np
from numba import njit, vectorize
from scipy.special import j0, j1, struve

J0_SERIES_MAX = 8.0
J0_ASYMPTOTIC_MIN = 25.0
_TRAPEZOID_NODES = 64


@njit(cache=True)
def _j0_series(x):
    q = -0.25 * x * x
    term = 1.0
    total = 1.0
    k = 1
    while True:
        term *= q / (k * k)
        total += term
        if abs(term) < 1e-17 * max(abs(total), 1e-3) or k > 60:
            break
        k += 1
    return total


@njit(cache=True)
def _j0_trapezoid(x):
    total = 0.0
    for i in range(_TRAPEZOID_NODES):
        total += math.cos(x * math.sin(2.0 * math.pi * i / _TRAPEZOID_NODES))
    return total / _TRAPEZOID_NODES


@njit(cache=True)
def _j0_hankel(x):
    p = 1.0
    q = 0.0
    a = 1.0
    xp = 1.0
    for k in range(1, 40):
        a = -a * (2 * k - 1) ** 2 / (8.0 * k)
        xp *= x
        term = a / xp
        if k % 2 == 0:
            p += term if (k // 2) % 2 == 0 else -term
        else:
            q += term if ((k - 1) // 2) % 2 == 0 else -term
        if abs(term) < 1e-18:
            break
    # cos(x - pi/4) and sin(x - pi/4) without subtracting pi/4 from a large x
    c = math.cos(x)
    s = math.sin(x)
    cos_chi = (c + s) / math.sqrt(2.0)
    sin_chi = (s - c) / math.sqrt(2.0)
    return math.sqrt(2.0 / (math.pi * x)) * (p * cos_chi - q * sin_chi)


@njit(cache=True)
def j0_scalar(x):
    x = abs(x)
    if x < J0_SERIES_MAX:
        return _j0_series(x)
    if x < J0_ASYMPTOTIC_MIN:
        return _j0_trapezoid(x)
    return _j0_hankel(x)


@vectorize(["float64(float64)"], cache=True)
def _j0_ufunc(x):
    return j0_scalar(x)


def bessel_j0(r):
    """J0(r) for r >= 0 (scalar or array)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("bessel_j0 needs r >= 0")
    out = _j0_ufunc(r)
    return float(out) if out.ndim == 0 else out


def bessel_k(order, x):
    """Modified Bessel function of the third kind, half-integer order 3/2 only."""
    if order != 1.5:
        raise ValueError("only order 3/2 is implemented")
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_k needs x > 0")
    out = np.sqrt(np.pi / (2 * x)) * np.exp(-x) * (1 + 1 / x)
    return float(out) if out.ndim == 0 else out


def _radius(y):
    y = np.asarray(y, dtype=float)
    if y.ndim >= 1 and y.shape[-1] == 2:
        return np.hypot(y[..., 0], y[..., 1])
    raise ValueError("y must have a trailing axis of length 2")


def jump_density_radial(r, m_p):
    """Levy measure density as a function of |y|; zero at the origin."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    pos = r > 0
    rp = r[pos]
    if m_p == 0:
        out[pos] = 1 / (2 * np.pi * rp**3)
    else:
        z = m_p * rp
        # m^{3/2} K_{3/2}(m r) / (sqrt2 (pi r)^{3/2}) with the closed form of K_{3/2}
        out[pos] = np.exp(-z) * (1 + z) / (2 * np.pi * rp**3)
    return float(out) if out.ndim == 0 else out


def levy_jump_density(y, m_p):
    return jump_density_radial(_radius(y), m_p)


def marginal_density_radial(r, t, m_p):
    """Density of X_t at a point of norm r (a density on R^2, not in r)."""
    if t <= 0:
        raise ValueError("t must be positive")
    r = np.asarray(r, dtype=float)
    s = np.sqrt(t * t + r * r)
    if m_p == 0:
        out = t / (2 * np.pi * s**3)
    else:
        out = t * np.exp(-m_p * (s - t)) * (m_p / s**2 + 1 / s**3) / (2 * np.pi)
    return float(out) if np.ndim(out) == 0 else out


def marginal_density(y, t, m_p):
    return marginal_density_radial(_radius(y), t, m_p)


def marginal_radial_cdf(R, t, m_p):
    """P(|X_t| <= R) in closed form: 1 - (t/S) exp(-m_p (S - t)), S = sqrt(t^2 + R^2)."""
    R = np.asarray(R, dtype=float)
    S = np.sqrt(t * t + R * R)
    out = 1 - t / S * np.exp(-m_p * (S - t))
    return float(out) if out.ndim == 0 else out


def integral_j0(x):
    """int_0^x J0(t) dt through Struve functions (scipy's itj0y0 is unreliable for x > 20)."""
    x = np.asarray(x, dtype=float)
    out = x * j0(x) + 0.5 * np.pi * x * (j1(x) * struve(0, x) - j0(x) * struve(1, x))
    return float(out) if out.ndim == 0 else out


def split_density_norm(p, t, m_p, L=0.0, part=1):
    """L^p norm of exp(L|y|) rho_t(y) restricted to m_p sqrt(t^2+|y|^2) <= 1 (part 1)
    or to its complement (part 2)."""
    from scipy import integrate

    if m_p <= 0:
        raise ValueError("the split needs m_p > 0")
    if not 0 <= L < m_p:
        raise ValueError("need 0 <= L < m_p")
    if p < 1:
        raise ValueError("need p >= 1")
    R = math.sqrt(max(1 / m_p**2 - t * t, 0.0))

    def dens(r):
        return math.exp(L * r) * marginal_density_radial(r, t, m_p)

    if p == np.inf:
        if part == 1:
            return dens(0.0) if R > 0 else 0.0
        grid = np.linspace(R, R + 50 / (m_p - L) + 10 * t, 20001)
        return float(np.max(np.exp(L * grid) * marginal_density_radial(grid, t, m_p)))

    def f(z):
        # r = e^z, dr = r dz
        r = math.exp(z)
        return 2 * math.pi * r * r * dens(r) ** p

    lo_z = math.log(t) - 40
    if part == 1:
        if R == 0:
            return 0.0
        val = integrate.quad(f, lo_z, math.log(R), points=[math.log(t)] if t < R else None,
                             limit=400, epsrel=1e-11, epsabs=0)[0]
        val += math.pi * math.exp(2 * lo_z) * dens(0.0) ** p
    else:
        start = max(R, t * 1e-12)
        val = integrate.quad(f, math.log(start), math.log(start) + 60, limit=400, epsrel=1e-11,
                             epsabs=0)[0]
    return val ** (1 / p)
