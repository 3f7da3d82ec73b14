"""Monte Carlo estimators built on the complex action: Kac averages, energies, potentials."""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .action import ActionEngine, renormalized_action
from .config import FSpec, GridSpec, SamplerSpec
from .kspace import PolarGrid
from .levy_paths import RngStream, sample_grid_path, sample_jump_path

DIVERGENCE_GUARD = 1e12


# ---------------------------------------------------------------- potentials

@dataclass(frozen=True)
class PotentialSpec:
    """V(x) = constant + sum_j single(x_j) + sum_{i<j} pair(x_i - x_j).

    single and pair act on arrays with a trailing axis of length 2.
    """
    variant: str = "zero"
    constant: float = 0.0
    single: object = None
    pair: object = None
    guard: float = DIVERGENCE_GUARD

    def __post_init__(self):
        if self.variant not in ("zero", "bounded", "pair"):
            raise ValueError(f"unknown potential variant {self.variant!r}")
        if not self.guard > 0:
            raise ValueError("guard must be positive")

    def shifted(self, c):
        variant = "bounded" if self.variant == "zero" else self.variant
        return PotentialSpec(variant, self.constant + c, self.single, self.pair, self.guard)

    def __call__(self, pos):
        """V at positions of shape (..., N, 2)."""
        pos = np.asarray(pos, dtype=float)
        out = np.full(pos.shape[:-2], float(self.constant))
        if self.variant == "zero":
            return out
        if self.single is not None:
            out = out + np.sum(self.single(pos), axis=-1)
        if self.pair is not None and pos.shape[-2] > 1:
            n = pos.shape[-2]
            for i in range(n):
                for j in range(i + 1, n):
                    out = out + self.pair(pos[..., i, :] - pos[..., j, :])
        return out


def constant_potential(c):
    return PotentialSpec("bounded", constant=float(c))


def potential_integral(spec, x, path, t):
    """(int_0^t V(x + X_s) ds, diverged).  A divergent path integrates to 0 by convention."""
    if spec is None or (spec.variant == "zero" and spec.constant == 0):
        return 0.0, False
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    _, lengths, pos = path.segments(t)
    vals = spec(x[None] + pos)
    if not np.all(np.isfinite(vals)) or np.any(np.abs(vals) > spec.guard):
        return 0.0, True
    return float(np.dot(vals, lengths)), False


# ---------------------------------------------------------------- path ensembles

def _draw_x(f_spec, n, rng):
    if f_spec.kind == "box":
        return rng.uniform(-f_spec.scale / 2, f_spec.scale / 2, (n, 2))
    return f_spec.scale * rng.standard_normal((n, 2))


def _f_value(f_spec, y):
    y = np.asarray(y, dtype=float)
    if f_spec.kind == "box":
        return float(np.all(np.abs(y) <= f_spec.scale / 2))
    return float(np.exp(-np.sum(y * y) / (2 * f_spec.scale**2)))


def _f_mass(f_spec, n):
    if f_spec.kind == "box":
        return f_spec.scale ** (2 * n)
    return (2 * math.pi * f_spec.scale**2) ** n


@lru_cache(maxsize=8)
def _engine(params, grid_spec, eps):
    grid = PolarGrid.build(params.sigma, params.lam, grid_spec.n_panels, grid_spec.order,
                           grid_spec.n_theta)
    return ActionEngine(params, grid, eps=eps)


def action_ladder(params, x, path, times, grid_spec=GridSpec(), route="direct"):
    """u at each time of the ladder along one path."""
    if params.g == 0:
        return np.zeros(len(times))
    if route == "direct":
        eng = _engine(params, grid_spec, path.epsilon)
        return np.array([p.direct_u for p in eng.parts(x, path, times)])
    if route == "renormalized":
        return np.array([renormalized_action(x, path, t, params).u for t in times])
    raise ValueError(f"unknown route {route!r}")


def _sample_path(params, horizon, sampler, rng):
    return sample_jump_path(horizon, params.m_p, sampler.eps, params.N, rng,
                            correction=sampler.correction, correction_dt=sampler.correction_dt)


def _kac_one(args):
    params, V, times, f_spec, sampler, grid_spec, route, seed, i = args
    rng = RngStream(seed, i).generator()
    x = _draw_x(f_spec, params.N, rng)
    path = _sample_path(params, max(times), sampler, rng)
    u = action_ladder(params, x, path, times, grid_spec, route)
    out = np.empty(len(times))
    div = np.zeros(len(times), bool)
    for k, t in enumerate(times):
        vi, d = potential_integral(V, x, path, t)
        div[k] = d
        out[k] = math.exp(u[k] - vi) * _f_value(f_spec, x + path.value(t))
    return out, div


def parallel_map(fn, items, workers=1):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


@dataclass
class KacResult:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_eff: np.ndarray
    n_paths: int
    diverged: np.ndarray
    f_mass: float
    common_random_numbers: bool = True
    antithetic: bool = False
    samples: np.ndarray = field(default=None, repr=False)


def kac_average(params, V, t, f_spec=FSpec(), n_paths=1000, seed=0, sampler=SamplerSpec(),
                grid_spec=GridSpec(), route="direct", workers=1, keep_samples=False):
    """E_{x ~ f/|f|_1} E[exp(u_t(x) - int_0^t V) f(X_t^x)] for one time or a ladder.

    The result is per unit mass of f; multiply by f_mass for int f(x) E[...] dx.
    Path i always uses RngStream(seed, i), so equal seeds give common random numbers
    across potentials and ladders.
    """
    if n_paths < 2:
        raise ValueError("need at least two paths")
    times = tuple(float(s) for s in np.atleast_1d(t))
    if any(s <= 0 for s in times):
        raise ValueError("times must be positive")
    args = [(params, V, times, f_spec, sampler, grid_spec, route, seed, i) for i in range(n_paths)]
    res = parallel_map(_kac_one, args, workers)
    vals = np.array([r[0] for r in res])
    div = np.array([r[1] for r in res])
    ok = ~div
    if not np.any(ok):
        raise FloatingPointError("every path hit the divergence guard")
    w = np.where(ok, vals, 0.0)
    n_ok = ok.sum(axis=0)
    mean = w.sum(axis=0) / n_paths
    var = np.where(n_ok > 1, ((w - mean) ** 2).sum(axis=0) / max(n_paths - 1, 1), 0.0)
    stderr = np.sqrt(var / n_paths)
    s2 = (w * w).sum(axis=0)
    n_eff = np.where(s2 > 0, w.sum(axis=0) ** 2 / np.where(s2 > 0, s2, 1), 0.0)
    return KacResult(np.array(times), mean, stderr, n_eff, n_paths, div.sum(axis=0),
                     _f_mass(f_spec, params.N), samples=vals if keep_samples else None)


# ---------------------------------------------------------------- ground state energy

@dataclass
class EstimateReport:
    params: dict
    times: list
    mean: list
    stderr: list
    n_eff: list
    energy: list
    energy_err: list
    dropped: list
    extrapolated: float | None
    extrapolated_err: float | None
    method: str = "a+b/t"
    diverged: list = field(default_factory=list)

    def rows(self):
        return [dict(t=t, mean=m, stderr=s, n_eff=n, energy=e, energy_err=ee)
                for t, m, s, n, e, ee in zip(self.times, self.mean, self.stderr, self.n_eff,
                                             self.energy, self.energy_err)]

    def to_dict(self):
        return asdict(self)


def fit_a_plus_b_over_t(t, e, err, n_last=3):
    """Weighted least squares for e = a + b/t over the largest n_last entries."""
    t = np.asarray(t, float)[-n_last:]
    e = np.asarray(e, float)[-n_last:]
    err = np.asarray(err, float)[-n_last:]
    if t.size == 0:
        return None, None
    if t.size == 1:
        return float(e[0]), float(err[0])
    A = np.stack([np.ones_like(t), 1 / t], axis=1)
    if np.any(err <= 0):
        # noiseless points: plain least squares, no error bar
        coef = np.linalg.lstsq(A, e, rcond=None)[0]
        return float(coef[0]), 0.0
    w = 1 / err**2
    cov = np.linalg.inv(A.T @ (A * w[:, None]))
    coef = cov @ (A.T @ (w * e))
    return float(coef[0]), float(math.sqrt(cov[0, 0]))


def ground_energy(params, V, t_ladder, n_paths, f_spec=FSpec(), seed=0, sampler=SamplerSpec(),
                  grid_spec=GridSpec(), route="direct", workers=1, n_fit=3):
    """Per-t estimates -(1/t) ln(Kac average) and their a + b/t extrapolation."""
    t_ladder = [float(s) for s in t_ladder]
    if any(b <= a for a, b in zip(t_ladder, t_ladder[1:])):
        raise ValueError("t_ladder must be increasing")
    kac = kac_average(params, V, t_ladder, f_spec, n_paths, seed, sampler, grid_spec, route,
                      workers)
    keep = kac.mean > 0
    dropped = [t for t, k in zip(t_ladder, keep) if not k]
    times = kac.times[keep]
    mean = kac.mean[keep]
    se = kac.stderr[keep]
    energy = -np.log(mean) / times
    energy_err = se / (mean * times)
    a, a_err = fit_a_plus_b_over_t(times, energy, energy_err, n_fit)
    return EstimateReport(asdict(params), times.tolist(), mean.tolist(), se.tolist(),
                          kac.n_eff[keep].tolist(), energy.tolist(), energy_err.tolist(),
                          dropped, a, a_err, diverged=kac.diverged.tolist())


# ---------------------------------------------------------------- exponential moments

def sup_exp_moment(params, p, t, n_paths, seed=0, x=None, sampler=SamplerSpec(),
                   grid_spec=GridSpec(), n_ladder=64):
    """MC estimate of E[sup_{s<=t} exp(p u_s(x))] with the sup over a fine time ladder
    merged with the event times of each path."""
    x = np.zeros((params.N, 2)) if x is None else np.asarray(x, float).reshape(-1, 2)
    vals = np.empty(n_paths)
    for i in range(n_paths):
        rng = RngStream(seed, i).generator()
        path = _sample_path(params, t, sampler, rng)
        ev = path.times[path.times < t]
        ladder = np.union1d(np.linspace(0, t, n_ladder + 1)[1:], ev)
        u = action_ladder(params, x, path, ladder, grid_spec)
        vals[i] = max(1.0, float(np.exp(p * u).max()))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_paths))


# ---------------------------------------------------------------- Kato class probe

def kato_probe(f, t_ladder, x_grid, m_p=1.0, n_paths=2000, seed=0, dt=None):
    """Rows (t, sup_x E[int_0^t f(x + X_s) ds], stderr) and whether the column decreases
    to 0 as t decreases.  f acts on arrays with a trailing axis of length 2."""
    t_ladder = sorted(float(s) for s in t_ladder)
    x_grid = np.asarray(x_grid, float).reshape(-1, 2)
    rows = []
    for k, t in enumerate(t_ladder):
        h = dt or t / 64
        est = np.empty((n_paths, x_grid.shape[0]))
        for i in range(n_paths):
            rng = RngStream(seed, k * 1_000_003 + i).generator()
            path = sample_grid_path(t, h, m_p, 1, rng)
            _, lengths, pos = path.segments(t)
            y = x_grid[:, None, :] + pos[None, :, 0, :]
            est[i] = f(y) @ lengths
        mean = est.mean(axis=0)
        j = int(np.argmax(mean))
        rows.append((t, float(mean[j]), float(est[:, j].std(ddof=1) / math.sqrt(n_paths))))
    vals = [r[1] for r in rows]
    decreasing = all(a <= b + 3 * (sa + sb) for (_, a, sa), (_, b, sb) in zip(rows, rows[1:]))
    if len(vals) > 1:
        decreasing = decreasing and vals[0] < vals[-1]
    return rows, decreasing


# ---------------------------------------------------------------- Carmona-type bound

@dataclass(frozen=True)
class BallPotential:
    """v = height on the closed disc of the given radius, 0 elsewhere."""
    height: float
    radius: float

    def __call__(self, y):
        y = np.asarray(y, float)
        return np.where(np.hypot(y[..., 0], y[..., 1]) <= self.radius, self.height, 0.0)

    def lp_norm(self, p):
        return self.height * (math.pi * self.radius**2) ** (1 / p)


def radial_lp_norm(fn, p, r_max=np.inf):
    val = integrate.quad(lambda r: 2 * math.pi * r * abs(fn(r)) ** p, 0, r_max, limit=200)[0]
    return val ** (1 / p)


def carmona_exponent(v, a, p, t, m_p, d=2):
    """a^{-d/(2p-d)} (m_p^{d/2p} |v|_p + |v|_2p)^{1/(1-d/2p)} t; the bound is c' exp(c * this)."""
    if p <= d / 2:
        raise ValueError("need p > d/2")
    s = m_p ** (d / (2 * p)) * v.lp_norm(p) + v.lp_norm(2 * p)
    return a ** (-d / (2 * p - d)) * s ** (1 / (1 - d / (2 * p))) * t


def carmona_lhs(v, a, t, m_p, x_grid, n_paths, seed=0, dt=None):
    """sup over x_grid of the MC estimate of E[exp int_0^t v(x + Y_s) ds], Y_s = X_{a s}."""
    x_grid = np.asarray(x_grid, float).reshape(-1, 2)
    h = dt or t / 64
    est = np.empty((n_paths, x_grid.shape[0]))
    for i in range(n_paths):
        rng = RngStream(seed, i).generator()
        # Y on [0, t] is X on [0, a t] with time rescaled by 1/a
        path = sample_grid_path(a * t, a * h, m_p, 1, rng)
        _, lengths, pos = path.segments(a * t)
        y = x_grid[:, None, :] + pos[None, :, 0, :]
        est[i] = np.exp(v(y) @ (lengths / a))
    mean = est.mean(axis=0)
    j = int(np.argmax(mean))
    return float(mean[j]), float(est[:, j].std(ddof=1) / math.sqrt(n_paths))


@dataclass
class CarmonaVerdict:
    c: float
    c_prime: float
    rows: list
    respected: bool


def carmona_check(v, settings, p, n_paths, m_p=1.0, x_grid=None, seed=0, c_prime=1.0,
                  safety=1.5):
    """Calibrate c on settings[0] = (a, t) and test the one-sided bound on the rest.

    c is the smallest constant for which c' exp(c E) covers the first estimate plus two
    standard errors, times the safety factor.
    """
    x_grid = np.zeros((1, 2)) if x_grid is None else x_grid
    est = []
    for k, (a, t) in enumerate(settings):
        lhs, se = carmona_lhs(v, a, t, m_p, x_grid, n_paths, seed + k)
        est.append((a, t, lhs, se, carmona_exponent(v, a, p, t, m_p)))
    a0, t0, lhs0, se0, e0 = est[0]
    gap = max(math.log(max(lhs0 + 2 * se0, 1.0) / c_prime), 0.0)
    c = safety * gap / e0 if e0 > 0 else 0.0
    rows = []
    for a, t, lhs, se, e in est:
        rhs = c_prime * math.exp(c * e)
        rows.append(dict(a=a, t=t, lhs=lhs, stderr=se, rhs=rhs, ok=lhs - 2 * se <= rhs))
    return CarmonaVerdict(c, c_prime, rows, all(r["ok"] for r in rows))
