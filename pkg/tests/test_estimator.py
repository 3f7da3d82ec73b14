import math

import numpy as np
import pytest

from nelson2d.config import FSpec, GridSpec, SamplerSpec
from nelson2d.estimator import (BallPotential, PotentialSpec, carmona_check, carmona_exponent,
                                constant_potential, fit_a_plus_b_over_t, ground_energy,
                                kac_average, kato_probe, potential_integral, radial_lp_norm,
                                sup_exp_moment)
from nelson2d.kspace import ModelParams
from nelson2d.levy_paths import RngStream, constant_path, sample_jump_path

P = ModelParams(N=2, m_p=1.0, m_b=1.0, g=0.3, lam=3.0)
GRID = GridSpec(2, 8, 16)
SAMPLER = SamplerSpec(eps=0.3)


def test_constant_potential_integral():
    path = sample_jump_path(2.0, 1.0, 0.3, 2, RngStream(0).generator())
    val, div = potential_integral(constant_potential(0.7), np.zeros((2, 2)), path, 1.5)
    assert val == pytest.approx(1.05) and not div


def test_potential_integral_on_frozen_path():
    spec = PotentialSpec("pair", single=lambda y: np.sum(y * y, axis=-1),
                         pair=lambda d: np.hypot(d[..., 0], d[..., 1]))
    x = np.array([[1.0, 0.0], [0.0, 2.0]])
    val, div = potential_integral(spec, x, constant_path(2, 1.0), 0.5)
    assert val == pytest.approx(0.5 * (1 + 4 + math.sqrt(5)))


def test_potential_guard():
    spec = PotentialSpec("pair", pair=lambda d: 1 / np.hypot(d[..., 0], d[..., 1]))
    val, div = potential_integral(spec, np.zeros((2, 2)), constant_path(2, 1.0), 1.0)
    assert div and val == 0.0


def test_potential_spec_validation():
    with pytest.raises(ValueError):
        PotentialSpec("coulomb")
    assert PotentialSpec().shifted(2.0).constant == 2.0


def test_free_average_is_close_to_one():
    # leakage through the faces of the box is O(|X_t| / side)
    res = kac_average(P.with_(g=0.0), PotentialSpec(), [1.0, 2.0], FSpec("box", 200.0), 200, 1,
                      SAMPLER, GRID)
    assert np.all(res.mean > 0.95) and np.all(res.mean <= 1.0)
    assert res.f_mass == 200.0**4
    res = kac_average(P.with_(g=0.0), PotentialSpec(), 1.0, FSpec("box", 1e6), 200, 1,
                      SAMPLER, GRID)
    assert res.mean[0] > 0.999


def test_constant_shift_tilts_the_average_exactly():
    t = [0.5, 1.0]
    a = kac_average(P, PotentialSpec(), t, n_paths=50, seed=2, sampler=SAMPLER, grid_spec=GRID,
                    keep_samples=True)
    b = kac_average(P, constant_potential(0.4), t, n_paths=50, seed=2, sampler=SAMPLER,
                    grid_spec=GRID, keep_samples=True)
    assert np.allclose(b.samples, a.samples * np.exp(-0.4 * np.array(t)), rtol=1e-12)


def test_energy_of_constant_potential_without_coupling():
    ts = [1.0, 2.0, 4.0]
    rep = ground_energy(P.with_(g=0.0), constant_potential(0.25), ts, 50, FSpec("box", 1e6), 3,
                        SAMPLER, GRID)
    free = kac_average(P.with_(g=0.0), PotentialSpec(), ts, FSpec("box", 1e6), 50, 3, SAMPLER,
                       GRID)
    assert np.allclose(rep.energy, 0.25 - np.log(free.mean) / np.array(ts), atol=1e-12)
    assert rep.extrapolated == pytest.approx(0.25, abs=1e-4)


def test_variance_decays_like_one_over_n():
    ns = np.array([100, 400, 1600])
    se = [kac_average(P, PotentialSpec(), 1.0, n_paths=int(n), seed=4, sampler=SAMPLER,
                      grid_spec=GRID, f_spec=FSpec("gauss", 1.0)).stderr[0] for n in ns]
    slope = np.polyfit(np.log(ns), np.log(np.square(se)), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.25)


def test_worker_count_does_not_change_results():
    a = kac_average(P, PotentialSpec(), 1.0, n_paths=8, seed=5, sampler=SAMPLER, grid_spec=GRID)
    b = kac_average(P, PotentialSpec(), 1.0, n_paths=8, seed=5, sampler=SAMPLER, grid_spec=GRID,
                    workers=2)
    assert np.array_equal(a.mean, b.mean)


def test_kac_average_validation():
    with pytest.raises(ValueError):
        kac_average(P, PotentialSpec(), 1.0, n_paths=1)
    with pytest.raises(ValueError):
        kac_average(P, PotentialSpec(), [0.0], n_paths=4)


def test_fit_recovers_a_plus_b_over_t():
    t = np.array([1.0, 2.0, 5.0, 10.0])
    e = 0.3 + 1.7 / t
    a, err = fit_a_plus_b_over_t(t, e, np.full(4, 0.01), n_last=4)
    assert a == pytest.approx(0.3, abs=1e-12)
    assert err > 0
    a, err = fit_a_plus_b_over_t(t, e, np.zeros(4))
    assert a == pytest.approx(0.3, abs=1e-12) and err == 0.0


def test_ground_energy_needs_increasing_ladder():
    with pytest.raises(ValueError):
        ground_energy(P, PotentialSpec(), [2.0, 1.0], 4)


def test_sup_exp_moment_without_coupling_is_one():
    mc, se = sup_exp_moment(P.with_(g=0.0), 2.0, 1.0, 10, sampler=SAMPLER, grid_spec=GRID)
    assert mc == 1.0 and se == 0.0


def test_sup_exp_moment_is_at_least_one():
    mc, _ = sup_exp_moment(P, 1.0, 0.5, 10, sampler=SAMPLER, grid_spec=GRID)
    assert mc >= 1.0


def test_kato_probe_with_constant_function():
    rows, dec = kato_probe(lambda y: np.ones(y.shape[:-1]), [0.1, 0.2, 0.4], np.zeros((1, 2)),
                           n_paths=5)
    assert [r[1] for r in rows] == pytest.approx([0.1, 0.2, 0.4])
    assert dec


def test_kato_probe_with_inverse_distance():
    f = lambda y: 1 / np.maximum(np.hypot(y[..., 0], y[..., 1]), 1e-12)
    rows, dec = kato_probe(f, [0.01, 0.1], np.zeros((1, 2)), n_paths=400)
    assert dec


def test_ball_potential_norms():
    v = BallPotential(2.0, 0.5)
    fn = lambda r: 2.0 if r <= 0.5 else 0.0
    assert v.lp_norm(3) == pytest.approx(radial_lp_norm(fn, 3, 0.5), rel=1e-10)


def test_carmona_exponent_needs_p_above_one():
    with pytest.raises(ValueError):
        carmona_exponent(BallPotential(1, 1), 1.0, 1.0, 1.0, 1.0)


def test_carmona_check_with_zero_potential():
    verdict = carmona_check(BallPotential(0.0, 1.0), [(1.0, 0.5), (2.0, 1.0)], 2.0, 20)
    assert verdict.c == 0.0 and verdict.respected
    assert all(r["lhs"] == 1.0 for r in verdict.rows)


def test_carmona_check_with_a_ball():
    v = BallPotential(1.0, 0.5)
    verdict = carmona_check(v, [(1.0, 0.5), (0.5, 1.0), (2.0, 1.0)], 2.0, 300, seed=7)
    assert verdict.c > 0
    assert verdict.respected
