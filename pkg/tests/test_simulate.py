import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import two_state
from regime_ruin import rng as rngmod
from regime_ruin.errors import BadHorizon, BadStep, DegenerateTail, NotPowerTail, NotRuinCertain
from regime_ruin.rng import RngStream, as_generator
from regime_ruin.simulate import (
    Z99,
    SimConfig,
    estimate_ruin_finite_horizon,
    estimate_tail,
    proportion_ci,
    quadrature_ladder,
    sample_cycle,
    sample_cycle_pairs,
    sample_cycle_refined,
    sample_excursion,
    sample_wiener_extremum,
    sample_Y_inf,
    sample_Y_inf_many,
    simulate_ruin_certain_recursion,
)


def test_simconfig_defaults_and_step(asym):
    cfg = SimConfig()
    assert (cfg.n_paths, cfg.max_cycles, cfg.product_cutoff, cfg.seed, cfg.workers) == (
        10_000, 10_000, 1e-6, 0, 1)
    assert cfg.step(asym) == pytest.approx(0.01)
    assert SimConfig(quad_step=0.2).step(asym) == 0.2


@pytest.mark.parametrize("kw, err", [
    ({"quad_step": 0.0}, BadStep), ({"horizon": -1.0}, BadHorizon),
    ({"n_paths": 0}, ValueError), ({"product_cutoff": 0.0}, ValueError),
    ({"product_cutoff": 1.5}, ValueError), ({"seed": -1}, ValueError),
])
def test_simconfig_rejects(kw, err):
    with pytest.raises(err):
        SimConfig(**kw)


def test_rng_streams_distinct_and_replayable():
    a = RngStream(1, 0).generator().random(4)
    assert np.array_equal(a, RngStream(1, 0).generator().random(4))
    assert not np.array_equal(a, RngStream(1, 1).generator().random(4))
    assert not np.array_equal(a, RngStream(1, 0, (3,)).generator().random(4))
    with pytest.raises(TypeError):
        as_generator(42)
    with pytest.raises(ValueError):
        RngStream(-1, 0)


def test_proportion_ci():
    assert proportion_ci(500, 1000) == pytest.approx(Z99 * math.sqrt(0.25 / 1000))
    assert proportion_ci(0, 1000) > 0.0  # Wilson keeps a width at p = 0
    assert proportion_ci(1000, 1000) > 0.0
    assert math.isnan(proportion_ci(0, 0))


def test_excursion_and_cycle(asym):
    exc = sample_excursion(asym, 0, RngStream(3, 0))
    assert exc.states == [0, 1]
    cyc = sample_cycle(asym, exc, RngStream(3, 1), 0.01)
    assert cyc.M > 0.0 and cyc.quadrature_step == 0.01
    with pytest.raises(BadStep):
        sample_cycle(asym, exc, RngStream(3, 1), 0.0)


def test_refined_levels_coupled(asym):
    exc = sample_excursion(asym, 0, RngStream(3, 0))
    M, Qs = sample_cycle_refined(asym, exc, RngStream(3, 1), 0.1, 3)
    assert len(Qs) == 4
    # all levels integrate the same path, so they agree closely
    assert max(Qs) - min(Qs) < 0.05 * (1.0 + abs(Qs[-1]))


def test_no_claims_gives_premium_only():
    spec = two_state(c=-1.0, alpha1=0.0, F1=None)
    M, Q = sample_cycle_pairs(spec, 0, SimConfig(seed=2), n=200, h=0.05)
    assert np.all(Q > 0.0)  # negative premium rate c pays out: Q = -c * integral


def test_pairs_same_seed_same_draws(asym):
    cfg = SimConfig(seed=4)
    a = sample_cycle_pairs(asym, 0, cfg, n=300)
    b = sample_cycle_pairs(asym, 0, cfg, n=300)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_worker_count_invariance(asym):
    y1, _ = sample_Y_inf_many(asym, 0, SimConfig(seed=5, workers=1), n=200)
    y2, _ = sample_Y_inf_many(asym, 0, SimConfig(seed=5, workers=2), n=200)
    assert np.array_equal(y1, y2)


def test_y_inf_single_and_regime_guard(asym, ruin_certain):
    s = sample_Y_inf(asym, 0, RngStream(1, 0), SimConfig())
    assert s.n_cycles >= 1 and not s.cap_hit
    assert float(s) == s.value
    with pytest.raises(NotPowerTail):
        sample_Y_inf(ruin_certain, 0, RngStream(1, 0), SimConfig())


def test_product_cutoff_one_means_single_cycle(asym):
    s = sample_Y_inf(asym, 0, RngStream(1, 0), SimConfig(product_cutoff=1.0))
    assert s.n_cycles == 1


def test_cap_hits_reported(asym):
    y, caps = sample_Y_inf_many(asym, 0, SimConfig(max_cycles=1, product_cutoff=1e-300), n=20)
    assert caps == 20


def test_estimate_tail_envelope(asym):
    u = np.array([0.5, 1.0, 2.0, 4.0])
    rep = estimate_tail(asym, 0, u, SimConfig(n_paths=2000, seed=8))
    assert np.all(rep.psi_lower <= rep.psi_upper)
    assert np.all(np.diff(rep.gbar_hat) <= 0.0)
    assert np.all((rep.gbar0_by_state > 0.0) & (rep.gbar0_by_state <= 1.0))
    with pytest.raises(DegenerateTail):
        estimate_tail(asym, 0, [1e12], SimConfig(n_paths=100))
    with pytest.raises(ValueError):
        estimate_tail(asym, 0, [2.0, 1.0], SimConfig(n_paths=100))


def test_ruin_horizon_monotone_in_T(asym):
    cfg = SimConfig(n_paths=400, seed=3)
    est = [estimate_ruin_finite_horizon(asym, 0, 1.0, cfg, T).psi_hat for T in (1.0, 5.0, 25.0)]
    assert est == sorted(est)
    with pytest.raises(BadHorizon):
        estimate_ruin_finite_horizon(asym, 0, 1.0, cfg, 0.0)


def test_recursion_requires_regime(asym, ruin_certain):
    with pytest.raises(NotRuinCertain):
        simulate_ruin_certain_recursion(asym, 0, 1.0, SimConfig(n_paths=10))
    res = simulate_ruin_certain_recursion(ruin_certain, 0, 1.0, SimConfig(n_paths=200, max_cycles=500))
    assert res.fraction > 0.9
    assert res.fraction_within(500) == res.fraction
    assert res.fraction_within(1) <= res.fraction


def test_quadrature_ladder_shape(asym):
    M, Q = quadrature_ladder(asym, 0, SimConfig(seed=1), 0.2, 2, n=50)
    assert M.shape == (50,) and Q.shape == (50, 3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.3, 2.0), st.floats(-2.0, 2.0))
def test_wiener_extremum_sign(lam, sigma, beta):
    gen = RngStream(0, 0, (rngmod.WIENER,)).generator()
    lo = sample_wiener_extremum(lam, sigma, beta, "inf", 200, gen)
    hi = sample_wiener_extremum(lam, sigma, beta, "sup", 200, gen)
    assert np.all(lo <= 0.0) and np.all(hi >= 0.0)


def test_wiener_extremum_mean_matches_closed_form():
    # E[-inf X] with X = W + beta s/2 (sigma = 1) over Exp(lam): 1/r
    lam, beta = 1.0, 1.0
    r = beta / 2 + math.sqrt(beta**2 / 4 + 2 * lam)
    x = -sample_wiener_extremum(lam, 1.0, beta, "inf", 100_000, RngStream(2, 0).generator(), n_steps=3)
    assert abs(x.mean() - 1.0 / r) < Z99 * x.std() / math.sqrt(len(x))
