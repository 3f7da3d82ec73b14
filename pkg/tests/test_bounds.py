import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nelson2d.bounds import (BoundConstants, asymptotic_table, best_trial_s, exp_moment_bound,
                             lambda_gn, lower_bound, renormalized_upper_bound, trial_integral,
                             trial_upper_bound, trial_upper_bound_renormalized, ubgauss2)
from nelson2d.kspace import ModelParams, PolarGrid, renorm_energy

K = BoundConstants()


def test_constants_validation():
    for kw in (dict(alpha=1.0), dict(theta=1.0), dict(s=0.0), dict(eps_star=1.0),
               dict(c_star=0.5), dict(b=-1.0)):
        with pytest.raises(ValueError):
            BoundConstants(**kw)
    lead = K.leading_only()
    assert lead.c == 0 and lead.b == 1


def test_small_coupling_single_particle():
    p = ModelParams(N=1, g=1.0, m_b=1.0, m_p=1.0)
    assert lower_bound(p, K) == pytest.approx(-math.exp(8 * math.pi))


def test_small_coupling_two_particles():
    p = ModelParams(N=2, g=0.5, m_b=2.0, m_p=1.0)
    g4 = 0.0625
    ref = -g4 * 8 / 2 * math.exp(8 * math.pi * 0.25 * 2 / 2) - g4 * 4 / 2 * 1.5
    assert lower_bound(p, K) == pytest.approx(ref)


def test_large_coupling_single_particle():
    p = ModelParams(N=1, g=math.sqrt(math.e), m_b=1.0, m_p=1.0)
    assert lower_bound(p, K, "large-coupling") == pytest.approx(-math.pi * math.e - math.e)


@pytest.mark.parametrize("m_b", [1e-6, 1e-3, 0.5, 1.0])
def test_massive_variant_for_one_particle_ignores_boson_mass(m_b):
    p = ModelParams(N=1, g=2.0, m_b=m_b, m_p=1.0)
    ref = -(math.pi * 4 * math.log(4) + math.pi * 4) - 4
    assert lower_bound(p, K, "large-coupling-massive") == pytest.approx(ref)


def test_lower_bound_domain_errors():
    with pytest.raises(ValueError):
        lower_bound(ModelParams(N=1, g=0.1), K, "large-coupling")
    with pytest.raises(ValueError):
        lower_bound(ModelParams(N=1, g=2.0, m_p=0.0), K, "large-coupling-massive")
    with pytest.raises(ValueError):
        lower_bound(ModelParams(), K, "medium")


def test_exp_moment_bound_at_time_zero():
    p = ModelParams(N=2, g=0.5, m_b=1.0)
    assert exp_moment_bound(p, K, 1.0, 0.0) == pytest.approx(math.sqrt(2) * math.exp(2 * math.pi))


def test_exp_moment_bound_grows_with_time():
    p = ModelParams(N=2, g=0.2, m_b=1.0)
    assert exp_moment_bound(p, K, 1.0, 2.0) > exp_moment_bound(p, K, 1.0, 1.0)
    q = ModelParams(N=2, g=1.0, m_b=0.5)
    k = BoundConstants(c=1e-20)
    assert exp_moment_bound(q, k, 1.0, 2.0, "u2") > exp_moment_bound(q, k, 1.0, 1.0, "u2")
    assert exp_moment_bound(q, K, 1.0, 2.0, "u2") == math.inf
    with pytest.raises(ValueError):
        exp_moment_bound(p, K, 1.0, 1.0, "u2")


def test_trial_integral_two_routes():
    p = ModelParams(N=2, g=0.7, m_b=0.8, lam=6.0)
    s = 0.3
    grid = PolarGrid.build(0.1, 6.0, 16, 12, 8)
    k2 = grid.r**2
    ref = grid.integrate(np.exp(-k2 / (4 * s * (0.49 * 2) ** 2)) / (k2 + 0.64))
    assert trial_integral(p, s, 0.1, 6.0) == pytest.approx(ref, rel=1e-11)


def test_trial_integral_without_boson_mass_two_routes():
    p = ModelParams(N=1, g=1.0, m_b=0.0, sigma=1e-3, lam=5.0)
    grid = PolarGrid.build(1e-3, 5.0, 8, 16, 8, geometric=True)
    ref = grid.integrate(np.exp(-grid.r**2 / 4) / grid.r**2)
    assert trial_integral(p, 1.0, 1e-3, 5.0) == pytest.approx(ref, rel=1e-8)


def test_counter_term_adds_n_times_renormalization_energy():
    p = ModelParams(N=2, g=0.4, lam=5.0)
    diff = trial_upper_bound_renormalized(p, 0.5) - trial_upper_bound(p, 0.5)
    assert diff == pytest.approx(2 * renorm_energy(0.0, 5.0, p))


def test_best_trial_scale_minimizes_over_grid():
    p = ModelParams(N=1, g=0.3, lam=5.0)
    s, val = best_trial_s(p)
    assert all(val <= trial_upper_bound_renormalized(p, x) + 1e-15 for x in np.geomspace(1e-4, 1e2, 61))


def test_trial_bound_needs_finite_cutoff():
    with pytest.raises(ValueError):
        trial_upper_bound(ModelParams(), 1.0)


def test_massless_slope_in_log_sigma():
    p = ModelParams(N=2, g=1.0, m_p=0.0, m_b=0.0, sigma=1e-6, lam=5.0)
    sig = np.geomspace(1e-6, 1e-3, 7)
    vals = [trial_upper_bound(p.with_(sigma=s), 1.0) for s in sig]
    slope = np.polyfit(np.log(sig), vals, 1)[0]
    assert slope == pytest.approx(2 * math.pi * 4, rel=1e-4)


def test_ubgauss2_and_renormalized_upper():
    p = ModelParams(N=2, g=2.0, m_b=1.0, m_p=1.0)
    assert lambda_gn(p) == pytest.approx(math.sqrt(63))
    assert math.isfinite(ubgauss2(p, 1.0, K))
    assert math.isfinite(renormalized_upper_bound(p, 0.9, K))
    with pytest.raises(ValueError):
        renormalized_upper_bound(ModelParams(N=1, g=0.5), 0.9, K)
    with pytest.raises(ValueError):
        ubgauss2(ModelParams(N=1, g=0.5), 1.0, K)


@pytest.mark.parametrize("regime,grid,base", [
    ("N", [1e4, 1e5, 1e6], dict(N=1, g=1.0, m_p=1.0, m_b=1.0)),
    ("g", [1e4, 1e5, 1e6], dict(N=1, g=1.0, m_p=1.0, m_b=1.0)),
    ("m_b(massive)", [1e-4, 1e-8], dict(N=2, g=1.0, m_p=1.0, m_b=1.0)),
    ("m_b(massless)", [1e-4, 1e-8], dict(N=2, g=1.0, m_p=0.0, m_b=1.0)),
])
def test_asymptotic_ratios_approach_targets(regime, grid, base):
    rows = asymptotic_table(regime, grid, ModelParams(**base))
    last = rows[-1]
    assert abs(last["upper_ratio"] / last["target"] - 1) < 0.2
    assert abs(last["lower_ratio"] / last["target"] - 1) < 0.2


def test_asymptotic_table_rejects_wrong_mass():
    with pytest.raises(ValueError):
        asymptotic_table("m_b(massless)", [1e-3], ModelParams(N=2, m_p=1.0))
    with pytest.raises(ValueError):
        asymptotic_table("x", [1], ModelParams())


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.floats(0.0, 5.0), st.floats(0.0, 3.0), st.floats(1e-3, 3.0),
       st.floats(0.1, 3.0), st.floats(0.0, 3.0))
def test_bounds_are_total(N, g, m_p, m_b, p_exp, t):
    prm = ModelParams(N=N, g=g, m_p=m_p, m_b=m_b, lam=5.0)
    for fn in (lambda: lower_bound(prm, K, "small-coupling"),
               lambda: lower_bound(prm, K, "large-coupling"),
               lambda: lower_bound(prm, K, "large-coupling-massive"),
               lambda: exp_moment_bound(prm, K, p_exp, t, "u1"),
               lambda: exp_moment_bound(prm, K, p_exp, t, "u2"),
               lambda: trial_upper_bound_renormalized(prm, 1.0),
               lambda: ubgauss2(prm, 1.0, K),
               lambda: renormalized_upper_bound(prm, 0.9, K)):
        try:
            val = fn()
        except (ValueError, OverflowError):
            continue
        assert not math.isnan(val)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.floats(0.01, 0.3), st.floats(0.5, 2.0), st.floats(0.5, 2.0))
def test_sandwich_lower_below_trial_upper(N, g, m_p, m_b):
    assume(8 * math.pi * g * g * N / m_b < 50)
    prm = ModelParams(N=N, g=g, m_p=m_p, m_b=m_b, lam=5.0)
    lo = lower_bound(prm, K, "small-coupling")
    _, up = best_trial_s(prm)
    assert lo <= up
