import math

import numpy as np
import pytest
from scipy import integrate, special

from nelson2d.action import (ActionEngine, boundary_term, direct_action, direct_action_error,
                             interaction_term, martingale_term, pair_potential_radial,
                             renormalized_action, small_jump_drift)
from nelson2d.kspace import ModelParams, PolarGrid, coupling, omega, psi, renorm_energy
from nelson2d.levy_paths import RngStream, constant_path, sample_jump_path


@pytest.fixture(scope="module")
def setup():
    p = ModelParams(N=2, m_p=1.0, m_b=1.0, g=1.0, lam=5.0)
    grid = PolarGrid.build(0.0, 5.0, 6, 8, 48)
    return p, grid


def test_direct_action_on_a_frozen_path(setup):
    p, grid = setup
    x = np.array([[0.0, 0.0], [0.7, 0.2]])
    t = 0.8
    w = omega(grid.r, 1.0)[:, None]
    v2 = coupling(grid.r, p)[:, None] ** 2
    d = x[0] - x[1]
    c = np.cos(grid.kx * d[0] + grid.ky * d[1])
    ref = grid.integrate(v2 * (2 + 2 * c) * (t / w - (1 - np.exp(-t * w)) / w**2)) \
        - t * 2 * renorm_energy(0.0, 5.0, p)
    assert direct_action(x, constant_path(2, 1.0), t, p, grid) == pytest.approx(ref, abs=1e-12)


def test_action_vanishes_at_time_zero(setup):
    p, grid = setup
    path = constant_path(2, 1.0)
    assert direct_action(np.zeros((2, 2)), path, 0.0, p, grid) == 0.0


def test_action_scales_with_coupling_squared(setup):
    p, grid = setup
    path = sample_jump_path(1.0, 1.0, 0.3, 2, RngStream(11).generator())
    x = np.array([[0.2, 0.1], [-0.3, 0.5]])
    a = direct_action(x, path, 1.0, p.with_(g=0.5), grid)
    b = direct_action(x, path, 1.0, p.with_(g=1.0), grid)
    assert b == pytest.approx(4 * a, rel=1e-12)


def test_decomposition_matches_direct_route_up_to_the_small_jump_drift(setup):
    # direct - (w - c + m) is exactly the drift from the discarded small jumps
    p, grid = setup
    eng = ActionEngine(p, grid, eps=0.3)
    for i in range(5):
        rng = RngStream(12, i).generator()
        path = sample_jump_path(1.0, 1.0, 0.3, 2, rng)
        a = eng.parts(rng.normal(size=(2, 2)), path, [0.5, 1.0])
        for part in a:
            assert abs(part.direct_u - part.u - part.drift) < 1e-5


def test_module_level_terms_agree_with_engine(setup):
    p, grid = setup
    rng = RngStream(13).generator()
    path = sample_jump_path(1.0, 1.0, 0.3, 2, rng)
    x = rng.normal(size=(2, 2))
    a = ActionEngine(p, grid, eps=0.3).parts(x, path, [1.0])[0]
    assert boundary_term(x, path, 1.0, p, grid) == pytest.approx(a.c, rel=1e-12)
    assert martingale_term(x, path, 1.0, p, grid) == pytest.approx(a.m, rel=1e-12)
    assert small_jump_drift(x, path, 1.0, p, grid) == pytest.approx(a.drift, rel=1e-12)
    assert interaction_term(x, path, 1.0, p) == pytest.approx(a.w, rel=1e-6, abs=1e-9)
    assert direct_action(x, path, 1.0, p, grid) == pytest.approx(a.direct_u, rel=1e-12)


def test_quadrature_error_is_small(setup):
    p, grid = setup
    path = sample_jump_path(1.0, 1.0, 0.3, 2, RngStream(14).generator())
    assert direct_action_error(np.zeros((2, 2)), path, 1.0, p, grid) < 1e-5


def test_martingale_term_needs_jump_path(setup):
    p, grid = setup
    with pytest.raises(ValueError):
        martingale_term(np.zeros((2, 2)), constant_path(2, 1.0), 1.0, p, grid)


def pair_by_quadrature(r, p, lam):
    def f(k):
        w = math.sqrt(k * k + p.m_b**2)
        return p.g**2 * 2 * math.pi * k / (w * (w + float(psi(k, p.m_p)))) * special.j0(k * r)
    return integrate.quad(f, p.sigma, lam, limit=5000, epsabs=1e-11)[0]


@pytest.mark.parametrize("r", [0.05, 0.4, 1.0, 3.0])
def test_pair_potential_finite_cutoff(r):
    p = ModelParams(N=2, m_p=1.0, m_b=0.7, g=0.9, lam=6.0)
    assert pair_potential_radial(r, p) == pytest.approx(pair_by_quadrature(r, p, 6.0), abs=1e-9)


def test_pair_potential_at_origin_is_counter_term():
    p = ModelParams(N=2, lam=6.0)
    assert pair_potential_radial(0.0, p) == renorm_energy(0.0, 6.0, p)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_pair_potential_without_cutoff(r):
    p = ModelParams(N=2, m_p=1.0, m_b=1.0, g=1.0)
    K = 4000.0
    # the omitted tail int_{K r}^inf J0(x)/x dx is O((K r)^{-3/2})
    ref = pair_by_quadrature(r, p, K)
    assert pair_potential_radial(r, p) == pytest.approx(ref, abs=2e-4)


@pytest.mark.slow
def test_split_scale_changes_action_by_the_drift_in_between():
    p = ModelParams(N=2, m_p=1.0, m_b=1.0, g=1.0)
    rng = RngStream(15).generator()
    path = sample_jump_path(0.5, 1.0, 0.3, 2, rng)
    x = rng.normal(size=(2, 2))
    k1, k2 = 2.0, 4.0
    u1 = renormalized_action(x, path, 0.5, p, kappa=k1).u
    u2 = renormalized_action(x, path, 0.5, p, kappa=k2).u
    band = p.with_(sigma=k1, lam=k2)
    grid = PolarGrid.build(k1, k2, 4, 8, 48)
    drift = small_jump_drift(x, path, 0.5, band, grid)
    assert u2 - u1 == pytest.approx(drift, abs=1e-4)
