import math

import numpy as np
import pytest

from multicurve_hw.curves import swap_rate
from multicurve_hw.mhw import MhwParams, Side, intrinsic, make_swaption, price_swaption
from multicurve_hw.oracle import McConfig, mc_martingale_check, mc_price_exact, mc_price_path

from conftest import FITTED, SPOT

P = MhwParams(*FITTED)
P_SPREAD = MhwParams(0.1331, 0.0127, 0.3)


def atm(disc, pseudo, expiry, tenor, shift=0.0, side=Side.RECEIVER):
    spec = make_swaption(SPOT, expiry, tenor, 0.0, side)
    return spec.with_strike(swap_rate(disc, pseudo, spec.fixed, spec.floating) + shift)


def test_config_validation():
    for kw in ({"draws": 0}, {"steps": 0}, {"batch_size": 1}):
        with pytest.raises(ValueError):
            McConfig(**kw)


def test_zero_sigma_is_deterministic(disc, pseudo):
    spec = atm(disc, pseudo, "2y", "8y", -0.002)
    est = mc_price_exact(MhwParams(0.1, 0.0, 0.4), disc, pseudo, spec, McConfig(draws=1000))
    assert est.se == pytest.approx(0.0, abs=1e-18)
    assert est.price == pytest.approx(max(intrinsic(disc, pseudo, spec), 0.0), rel=1e-13, abs=1e-17)


def test_seed_is_recorded_and_reproducible(disc, pseudo):
    spec = atm(disc, pseudo, "1y", "9y")
    cfg = McConfig(draws=30_000, seed=7, batch_size=10_000)
    a = mc_price_exact(P, disc, pseudo, spec, cfg)
    b = mc_price_exact(P, disc, pseudo, spec, cfg)
    assert a == b and a.seed == 7 and a.draws == 30_000
    assert a.to_dict() == {"price": a.price, "se": a.se, "draws": 30_000, "seed": 7}


def test_single_draw_is_trivially_within():
    from multicurve_hw.oracle import McEstimate

    est = McEstimate(0.01, math.inf, 1, 0)
    assert est.within(5.0)


def test_single_draw_run(disc, pseudo):
    est = mc_price_exact(P, disc, pseudo, atm(disc, pseudo, "1y", "9y"), McConfig(draws=1))
    assert est.se == math.inf and est.within(price_swaption(P, disc, pseudo, atm(disc, pseudo, "1y", "9y")))


@pytest.mark.parametrize("mode", ["exact", "path"])
def test_martingales(disc, pseudo, mode):
    spec = atm(disc, pseudo, "3y", "5y")
    cfg = McConfig(draws=100_000, seed=11, steps=1 if mode == "exact" else 10)
    checks = mc_martingale_check(P_SPREAD, disc, pseudo, spec, cfg, mode)
    assert len(checks["discount"]) == len(checks["spread"]) == 10
    for family in checks.values():
        for expected, est in family:
            assert est.within(expected, 3.0), (expected, est)


def test_one_step_path_equals_exact(disc, pseudo):
    spec = atm(disc, pseudo, "2y", "6y", 0.003)
    cfg = McConfig(draws=50_000, seed=3, steps=1)
    exact = mc_price_exact(P_SPREAD, disc, pseudo, spec, cfg)
    path = mc_price_path(P_SPREAD, disc, pseudo, spec, cfg)
    assert path.price == pytest.approx(exact.price, rel=1e-12)
    assert path.se == pytest.approx(exact.se, rel=1e-9)


def test_step_refinement(disc, pseudo):
    spec = atm(disc, pseudo, "5y", "5y")
    coarse = mc_price_path(P_SPREAD, disc, pseudo, spec, McConfig(draws=20_000, seed=5, steps=50))
    fine = mc_price_path(P_SPREAD, disc, pseudo, spec, McConfig(draws=20_000, seed=6, steps=200))
    assert abs(coarse.price - fine.price) <= 3.0 * math.hypot(coarse.se, fine.se)


@pytest.mark.parametrize("side", [Side.RECEIVER, Side.PAYER])
@pytest.mark.parametrize("gamma", [0.0, 0.3, 0.95])
def test_exact_sampler_matches_closed_form(disc, pseudo, side, gamma):
    p = MhwParams(0.1331, 0.0127, gamma)
    spec = atm(disc, pseudo, "3y", "7y", 0.0025, side)
    est = mc_price_exact(p, disc, pseudo, spec, McConfig(draws=200_000, seed=17))
    assert est.within(price_swaption(p, disc, pseudo, spec), 3.0)


def test_path_sampler_matches_closed_form(disc, pseudo):
    spec = atm(disc, pseudo, "4y", "6y", -0.002)
    est = mc_price_path(P_SPREAD, disc, pseudo, spec, McConfig(draws=50_000, seed=21, steps=20))
    assert est.within(price_swaption(P_SPREAD, disc, pseudo, spec), 3.0)


def test_coverage_over_independent_seeds(disc, pseudo):
    spec = atm(disc, pseudo, "1y", "9y")
    closed = price_swaption(P, disc, pseudo, spec)
    hits = sum(mc_price_exact(P, disc, pseudo, spec, McConfig(draws=20_000, seed=s)).within(closed, 3.0)
               for s in range(20))
    assert hits >= 19


def test_antithetic_reduces_variance(disc, pseudo):
    spec = atm(disc, pseudo, "2y", "8y", 0.005)  # deep receiver, nearly linear payoff
    anti = mc_price_exact(P, disc, pseudo, spec, McConfig(draws=40_000, seed=2, antithetic=True))
    plain = mc_price_exact(P, disc, pseudo, spec, McConfig(draws=40_000, seed=2, antithetic=False))
    assert anti.se <= plain.se
