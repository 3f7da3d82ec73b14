"""Momentum-space grid, model functions and the field processes U+ and U-."""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import j1

from .special_functions import bessel_j0, integral_j0


@dataclass(frozen=True)
class ModelParams:
    N: int = 1
    m_p: float = 1.0
    m_b: float = 1.0
    g: float = 0.3
    sigma: float = 0.0
    lam: float = math.inf

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.m_p < 0:
            raise ValueError("m_p must be >= 0")
        if self.m_b < 0 or (self.m_b == 0 and self.sigma <= 0):
            raise ValueError("m_b must be positive (m_b = 0 needs sigma > 0)")
        if not 0 <= self.sigma < self.lam:
            raise ValueError("need 0 <= sigma < lam")

    def with_(self, **kw):
        d = dict(N=self.N, m_p=self.m_p, m_b=self.m_b, g=self.g, sigma=self.sigma, lam=self.lam)
        d.update(kw)
        return ModelParams(**d)


def psi(r, m_p):
    r = np.asarray(r, dtype=float)
    # sqrt(r^2 + m^2) - m without cancellation
    return r * r / (np.sqrt(r * r + m_p * m_p) + m_p) if m_p > 0 else np.abs(r)


def omega(r, m_b):
    r = np.asarray(r, dtype=float)
    return np.sqrt(r * r + m_b * m_b)


def dispersion(r, params):
    """(psi, omega) at momentum norm r."""
    return psi(r, params.m_p), omega(r, params.m_b)


def coupling(r, params):
    return params.g / np.sqrt(omega(r, params.m_b))


def beta(r, params):
    p, w = dispersion(r, params)
    return coupling(r, params) / (w + p)


def _int_j0_over_x2_from0(z):
    """A(z) = int_0^z (1 - J0(x))/x^2 dx."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 0.5
    zs = z[small]
    # sum_k (-1)^{k+1} z^{2k-1} / ((2k-1) 4^k k!^2)
    c = zs * zs / 4
    acc = np.zeros_like(zs)
    for k in range(1, 12):
        if k > 1:
            c = c * (-(zs * zs) / (4 * k * k))
        acc += c / (2 * k - 1)
    acc = np.where(zs > 0, acc / np.where(zs > 0, zs, 1), 0.0)
    out[small] = acc
    zl = z[~small]
    out[~small] = -(1 - bessel_j0(zl)) / zl + integral_j0(zl) - j1(zl)
    return out


def small_jump_symbol(r, eps, m_p):
    """psi(r) - psi_eps(r) = int_{|y|<=eps} (1 - cos(k.y)) nu(dy)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = r * _int_j0_over_x2_from0(r * eps)
    if m_p > 0:
        # remaining density q(y) = exp(-m y)(m/y + 1/y^2) - 1/y^2 is bounded on [0, eps]
        def q(y):
            my = m_p * y
            return np.where(my > 1e-4, (np.exp(-my) * (1 + my) - 1) / np.maximum(y, 1e-300) ** 2,
                            m_p**2 * (-0.5 + my / 3 - my * my / 8))

        xg, wg = np.polynomial.legendre.leggauss(16)
        # d/dy (1 - exp(-m y))/y = q(y)
        q_int = -np.expm1(-m_p * eps) / eps - m_p
        q0 = -0.5 * m_p**2
        q_eps = float(q(np.array(eps)))
        for i, ri in enumerate(r):
            z = ri * eps
            if z > 200 and m_p * eps <= 1:
                # int_0^eps J0(r y) q(y) dy by two integrations by parts; error O(z^{-3/2})
                osc = (q0 * integral_j0(z) + (q_eps - q0) * j1(z)) / ri
                out[i] += q_int - osc
                continue
            n_pan = int(np.ceil(max(z, m_p * eps) / 2)) + 1
            edges = np.linspace(0, eps, n_pan + 1)
            h = 0.5 * np.diff(edges)
            y = (h[:, None] * (xg + 1) + edges[:-1, None]).ravel()
            wy = (h[:, None] * wg).ravel()
            out[i] += np.sum(wy * (1 - bessel_j0(ri * y)) * q(y))
    return out


def psi_eps(r, eps, m_p):
    """Symbol of the process with jumps below eps removed."""
    return psi(r, m_p) - small_jump_symbol(r, eps, m_p)


@dataclass(frozen=True, eq=False)
class PolarGrid:
    """Gauss-Legendre panels in |k| times a uniform angular rule."""
    r: np.ndarray
    wr: np.ndarray
    n_theta: int
    r_min: float
    r_max: float
    theta: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n_theta % 2:
            raise ValueError("n_theta must be even so that k and -k are both nodes")
        th = 2 * np.pi * np.arange(self.n_theta) / self.n_theta
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "weights", self.wr[:, None] * (2 * np.pi / self.n_theta)
                           * np.ones((1, self.n_theta)))

    @classmethod
    def build(cls, r_min, r_max, n_panels=8, order=8, n_theta=64, geometric=False):
        if not 0 <= r_min < r_max < np.inf:
            raise ValueError("need 0 <= r_min < r_max < inf")
        if geometric:
            lo = max(r_min, 1e-3 * r_max)
            edges = np.concatenate([[r_min], np.geomspace(lo, r_max, n_panels)]) if r_min < lo \
                else np.geomspace(lo, r_max, n_panels + 1)
        else:
            edges = np.linspace(r_min, r_max, n_panels + 1)
        x, w = np.polynomial.legendre.leggauss(order)
        h = 0.5 * np.diff(edges)
        r = (h[:, None] * (x + 1) + edges[:-1, None]).ravel()
        wr = (h[:, None] * w).ravel() * r
        return cls(r, wr, n_theta, r_min, r_max)

    @property
    def shape(self):
        return (self.r.size, self.n_theta)

    @property
    def kx(self):
        return self.r[:, None] * np.cos(self.theta)[None, :]

    @property
    def ky(self):
        return self.r[:, None] * np.sin(self.theta)[None, :]

    def mirror(self, values):
        """values(-k) on the grid."""
        return np.roll(values, self.n_theta // 2, axis=1)

    def integrate(self, values):
        values = np.asarray(values)
        if values.ndim == 1:
            return np.sum(self.wr * values) * 2 * np.pi
        return np.sum(self.weights * values)


def angular_nodes(r_max, diameter, margin=20):
    """Even angular node count resolving exp(i k.y) for |k| <= r_max, |y| <= diameter."""
    n = int(np.ceil(r_max * diameter + margin))
    return n + n % 2


def grid_for(params, n_panels=8, order=8, n_theta=64, r_max=None):
    hi = params.lam if np.isfinite(params.lam) else (r_max or 50.0)
    return PolarGrid.build(params.sigma, hi, n_panels, order, n_theta)


@dataclass(frozen=True, eq=False)
class FieldFunction:
    grid: PolarGrid
    values: np.ndarray

    @property
    def radial(self):
        return np.ndim(self.values) == 1

    def full(self):
        v = np.asarray(self.values, dtype=complex)
        return np.broadcast_to(v[:, None], self.grid.shape) if v.ndim == 1 else v

    def _same(self, other):
        if other.grid is not self.grid:
            raise ValueError("field functions live on different grids")

    def inner(self, other):
        """<self|other>, conjugate linear in self."""
        self._same(other)
        if self.radial and other.radial:
            return complex(self.grid.integrate(np.conj(self.values) * other.values))
        return complex(self.grid.integrate(np.conj(self.full()) * other.full()))

    def norm(self):
        return math.sqrt(max(self.inner(self).real, 0.0))

    def __add__(self, other):
        self._same(other)
        if self.radial and other.radial:
            return FieldFunction(self.grid, self.values + other.values)
        return FieldFunction(self.grid, self.full() + other.full())

    def __neg__(self):
        return FieldFunction(self.grid, -self.values)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor):
        """Multiply by a scalar or a radial array."""
        f = np.asarray(factor)
        if f.ndim == 1 and not self.radial:
            return FieldFunction(self.grid, self.values * f[:, None])
        return FieldFunction(self.grid, self.values * f)

    def is_real_symmetric(self, tol=1e-12):
        """conj(f)(k) == f(-k) on mirror pairs."""
        v = self.full()
        scale = max(np.max(np.abs(v)), 1e-300)
        return np.max(np.abs(np.conj(v) - self.grid.mirror(v))) <= tol * scale


def field(grid, fn_of_r):
    return FieldFunction(grid, np.asarray(fn_of_r(grid.r), dtype=complex))


def cutoff_mask(grid, params):
    return (grid.r >= params.sigma) & (grid.r <= params.lam)


def plane_waves(grid, points):
    """exp(-i k.x) for each point x; shape (..., n_r, n_theta)."""
    pts = np.asarray(points, dtype=float)
    ph = pts[..., 0, None, None] * grid.kx + pts[..., 1, None, None] * grid.ky
    return np.exp(-1j * ph)


def u_process(sign, x, path, t, params, grid):
    """U^{N,+}_t (sign=+1) or U^{N,-}_t (sign=-1) along x + path on the grid."""
    if t < 0 or t > path.horizon * (1 + 1e-12):
        raise ValueError("t outside the path horizon")
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    w = omega(grid.r, params.m_b)[:, None]
    v = (coupling(grid.r, params) * cutoff_mask(grid, params))[:, None]
    starts, lengths, pos = path.segments(t)
    out = np.zeros(grid.shape, dtype=complex)
    for s0, L, p in zip(starts, lengths, pos):
        if L == 0:
            continue
        phase = plane_waves(grid, x + p).sum(axis=0)
        if sign > 0:
            # int_{s0}^{s0+L} e^{-(t-s) w} ds
            kern = np.exp(-(t - s0 - L) * w) * (-np.expm1(-L * w)) / w
        else:
            kern = np.exp(-s0 * w) * (-np.expm1(-L * w)) / w
        out += kern * phase
    return FieldFunction(grid, out * v)


def t_norm(f, t, params):
    if t <= 0:
        raise ValueError("t must be positive")
    w = omega(f.grid.r, params.m_b)
    weight = 1 + 1 / (t * w)
    a2 = np.abs(f.values) ** 2
    if f.radial:
        return math.sqrt(f.grid.integrate(weight * a2))
    return math.sqrt(f.grid.integrate(weight[:, None] * a2))


def renorm_energy(sigma, lam, params):
    """E^ren_{sigma,lam} = 2 pi g^2 int_sigma^lam r / (omega (omega + psi)) dr."""
    if not np.isfinite(lam):
        raise ValueError("the counter term diverges for lam = inf")
    if sigma > lam:
        raise ValueError("need sigma <= lam")
    if sigma == lam:
        return 0.0

    def f(r):
        p, w = dispersion(r, params)
        return r / (w * (w + p))

    def f_log(s):
        r = math.exp(s)
        return r * f(r)

    split = min(max(sigma, 1.0), lam)
    val = 0.0
    if split > sigma:
        val += integrate.quad(f, sigma, split, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    if lam > split:
        val += integrate.quad(f_log, math.log(split), math.log(lam), epsabs=1e-14, epsrel=1e-13,
                              limit=200)[0]
    return 2 * math.pi * params.g**2 * val
