"""Sampling the 2D relativistic Levy process.

Two samplers are provided.  `sample_grid_path` draws exact increments on a time
grid by subordinating a planar Brownian motion.  `sample_jump_path` keeps every
jump larger than a threshold eps explicitly (compound Poisson) and optionally
replaces the small jumps by a Gaussian increment of the same covariance.
"""
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import lambertw


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0

    def generator(self):
        seq = np.random.SeedSequence([int(self.seed), int(self.stream)])
        return np.random.Generator(np.random.Philox(seq))

    def child(self, index):
        return RngStream(self.seed, self.stream * 1_000_003 + int(index) + 1)


@dataclass
class LevyPath:
    """Piecewise constant N-particle path started at the origin.

    positions[0] is the starting point and positions[i] the value after the
    i-th event at times[i-1].  jump_mask[i, j] marks increments of particle j
    that are jumps of the Levy measure (as opposed to Gaussian corrections or
    grid increments).
    """
    times: np.ndarray
    positions: np.ndarray
    jump_mask: np.ndarray
    horizon: float
    epsilon: float | None = None
    corrected: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        self.jump_mask = np.asarray(self.jump_mask, dtype=bool)
        if self.times.size and (np.any(np.diff(self.times) <= 0) or self.times[0] <= 0
                                or self.times[-1] > self.horizon):
            raise ValueError("event times must be strictly increasing in (0, horizon]")
        if self.positions.shape[0] != self.times.size + 1:
            raise ValueError("need one position row per event plus the start")

    @property
    def n_particles(self):
        return self.positions.shape[1]

    @property
    def n_events(self):
        return self.times.size

    def _check_time(self, t):
        if t < 0 or t > self.horizon * (1 + 1e-12):
            raise ValueError(f"time {t} outside [0, {self.horizon}]")

    def index_at(self, t):
        return int(np.searchsorted(self.times, t, side="right"))

    def value(self, t):
        self._check_time(t)
        return self.positions[self.index_at(t)]

    def left_limit(self, t):
        self._check_time(t)
        return self.positions[int(np.searchsorted(self.times, t, side="left"))]

    def jumps(self):
        out = []
        for i, j in zip(*np.nonzero(self.jump_mask)):
            out.append((self.times[i], int(j), self.positions[i + 1, j] - self.positions[i, j]))
        return out

    def segments(self, t, breaks=()):
        """Constant pieces of the path on [0, t].

        Returns (starts, lengths, positions) where positions[i] holds all
        particles on [starts[i], starts[i] + lengths[i]).  Extra break times
        split segments without changing the path.
        """
        self._check_time(t)
        k = self.index_at(t)
        ev = self.times[:k]
        extra = np.asarray([b for b in breaks if 0 < b < t], dtype=float)
        cuts = np.union1d(ev, extra)
        starts = np.concatenate([[0.0], cuts])
        ends = np.concatenate([cuts, [t]])
        idx = np.searchsorted(self.times, starts, side="right")
        return starts, ends - starts, self.positions[idx]

    def to_records(self):
        recs = []
        for j in range(self.n_particles):
            events = [(float(s), [float(d[0]), float(d[1])])
                      for s, jj, d in self.jumps() if jj == j]
            recs.append({"particle": j, "events": events})
        return recs


def constant_path(n_particles, horizon):
    return LevyPath(np.zeros(0), np.zeros((1, n_particles, 2)), np.zeros((0, n_particles), bool),
                    horizon)


def sample_subordinator(dt, m_p, rng, size=None):
    """Increment S of the subordinator with Laplace exponent sqrt(2u + m_p^2) - m_p."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if m_p > 0:
        # numpy's Wald sampler is the Michael-Schucany-Haas construction
        return rng.wald(dt / m_p, dt * dt, size)
    z = rng.standard_normal(size)
    return dt * dt / (z * z)


def sample_increment(dt, m_p, rng, size=None):
    """Increment(s) X_dt with E exp(i xi.X_dt) = exp(-dt psi(xi)); trailing axis 2."""
    s = sample_subordinator(dt, m_p, rng, size)
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    z = rng.standard_normal(shape + (2,))
    return np.sqrt(s)[..., None] * z


def sample_grid_path(horizon, dt, m_p, n_particles, rng):
    n = max(1, int(np.ceil(horizon / dt - 1e-9)))
    times = np.minimum(dt * np.arange(1, n + 1), horizon)
    steps = np.diff(np.concatenate([[0.0], times]))
    inc = np.stack([sample_increment(h, m_p, rng, n_particles) for h in steps])
    pos = np.concatenate([np.zeros((1, n_particles, 2)), np.cumsum(inc, axis=0)])
    return LevyPath(times, pos, np.zeros((n, n_particles), bool), horizon)


def jump_rate(eps, m_p):
    """Mass of the Levy measure outside the disc of radius eps: exp(-m_p eps)/eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return np.exp(-m_p * eps) / eps


def small_jump_variance(eps, m_p):
    """Per-axis variance (1/2) int_{|y|<=eps} |y|^2 dnu of the discarded jumps."""
    if m_p == 0:
        return eps / 2
    x = m_p * eps
    return 0.5 * (-2 * np.expm1(-x) / m_p - eps * np.exp(-x))


def jump_radius_inverse(u, eps, m_p):
    """Radius with tail probability u in (0, 1] among jumps longer than eps."""
    u = np.asarray(u, dtype=float)
    y = u * jump_rate(eps, m_p)
    if m_p == 0:
        return 1 / y
    # exp(-m r)/r = y  <=>  m r exp(m r) = m / y
    return np.real(lambertw(m_p / y)) / m_p


def sample_jump_path(horizon, m_p, eps, n_particles, rng, correction=False, correction_dt=None):
    if eps <= 0:
        raise ValueError("eps must be positive")
    lam = jump_rate(eps, m_p)
    t_list, p_list, d_list = [], [], []
    for j in range(n_particles):
        n = rng.poisson(lam * horizon)
        t_list.append(rng.uniform(0, horizon, n))
        p_list.append(np.full(n, j))
        r = jump_radius_inverse(1 - rng.uniform(0, 1, n), eps, m_p)
        phi = rng.uniform(0, 2 * np.pi, n)
        d_list.append(np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1))
    jt = np.concatenate(t_list)
    jp = np.concatenate(p_list)
    jd = np.concatenate(d_list).reshape(-1, 2)
    times = [jt]
    inc = np.zeros((jt.size, n_particles, 2))
    inc[np.arange(jt.size), jp] = jd
    mask = np.zeros((jt.size, n_particles), bool)
    mask[np.arange(jt.size), jp] = True
    if correction:
        dc = correction_dt or min(0.05, horizon)
        ct = np.minimum(dc * np.arange(1, int(np.ceil(horizon / dc - 1e-9)) + 1), horizon)
        sd = np.sqrt(small_jump_variance(eps, m_p) * np.diff(np.concatenate([[0.0], ct])))
        cinc = sd[:, None, None] * rng.standard_normal((ct.size, n_particles, 2))
        times.append(ct)
        inc = np.concatenate([inc, cinc])
        mask = np.concatenate([mask, np.zeros((ct.size, n_particles), bool)])
    times = np.concatenate(times)
    order = np.argsort(times, kind="stable")
    times, inc, mask = times[order], inc[order], mask[order]
    pos = np.concatenate([np.zeros((1, n_particles, 2)), np.cumsum(inc, axis=0)])
    return LevyPath(times, pos, mask, horizon, epsilon=eps, corrected=correction)


def split_path(path, t):
    """Return (X_t, path of X_{t+s} - X_t on [0, horizon - t])."""
    if t < 0 or t > path.horizon:
        raise ValueError("split time outside the horizon")
    k = path.index_at(t)
    x_t = path.positions[k].copy()
    shifted = LevyPath(path.times[k:] - t, path.positions[k:] - x_t, path.jump_mask[k:],
                       path.horizon - t, epsilon=path.epsilon, corrected=path.corrected)
    return x_t, shifted


def dump_paths(paths, fh):
    """Write paths as JSON lines, one record per path and particle."""
    for i, p in enumerate(paths):
        for rec in p.to_records():
            fh.write(json.dumps({"path": i, **rec}) + "\n")
