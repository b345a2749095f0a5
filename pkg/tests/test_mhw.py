import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multicurve_hw.curves import as_pseudo, bpv, flat_curve, floating_leg_value, swap_rate
from multicurve_hw.errors import DomainError, RootError
from multicurve_hw.mhw import (
    MhwParams,
    PayoffTerms,
    Side,
    eval_f,
    extended_vols,
    find_xi_star,
    intrinsic,
    make_swaption,
    payoff_terms,
    price_gradient,
    price_swaption,
    vol_v,
    zeta,
)

from conftest import FITTED, SPOT
from oracles import bisect_root, jamshidian_receiver, payoff_function, random_swaption

P = MhwParams(*FITTED)


def atm(disc, pseudo, expiry, tenor, side=Side.RECEIVER):
    spec = make_swaption(SPOT, expiry, tenor, 0.0, side)
    return spec.with_strike(swap_rate(disc, pseudo, spec.fixed, spec.floating))


# -- volatility building blocks --------------------------------------------

def test_vol_v_examples():
    assert vol_v(P, 3.0, 3.0) == 0.0
    assert vol_v(MhwParams(0.0, 0.01, 0.0), 1.0, 3.0) == pytest.approx(0.02, abs=1e-16)
    # 0.0127 (1 - exp(-1.1979)) / 0.1331
    assert vol_v(MhwParams(0.1331, 0.0127, 0.0), 0.0, 9.0) == pytest.approx(0.0666175223041621, rel=1e-14)


def test_vol_v_continuous_at_zero_mean_reversion():
    assert vol_v(MhwParams(1e-12, 0.01, 0.0), 0.0, 5.0) == pytest.approx(0.05, rel=1e-10)
    with pytest.raises(DomainError):
        vol_v(P, 2.0, 1.0)


def test_zeta_examples():
    assert zeta(MhwParams(0.0, 0.01, 0.0), 0.0, 1.0) ** 2 == pytest.approx(1.0)
    assert zeta(P, 2.0, 2.0) == 0.0
    # (1 - exp(-0.2662)) / 0.2662
    assert zeta(MhwParams(0.1331, 0.0127, 0.0), 0.0, 1.0) ** 2 == pytest.approx(0.8779644815804672, rel=1e-14)
    assert zeta(MhwParams(1e-12, 0.01, 0.0), 0.0, 3.0) ** 2 == pytest.approx(3.0, rel=1e-10)


def test_extended_vols_gamma_one(disc):
    spec = make_swaption(SPOT, "2y", "3y", 0.01)
    ev = extended_vols(MhwParams(0.1, 0.01, 1.0), spec, disc)
    assert np.all(ev.fixed == 0.0) and np.all(ev.floating == 0.0)
    assert np.all(ev.nu < 0.0)


def test_extended_vols_gamma_zero(disc):
    spec = make_swaption(SPOT, "2y", "3y", 0.01)
    ev = extended_vols(MhwParams(0.1, 0.01, 0.0), spec, disc)
    assert ev.nu[0] == 0.0
    assert np.all(ev.nu[1:] > 0.0)
    np.testing.assert_allclose(ev.nu, ev.floating[:-1], rtol=0, atol=0)


def test_extended_vols_sign_flip_follows_gamma_tilde(disc):
    spec = make_swaption(SPOT, "1y", "9y", 0.01)
    p = MhwParams(0.1331, 0.0127, 0.30)
    ev = extended_vols(p, spec, disc)
    # gamma_tilde_i = v_i / v_{i+1}, computed here from the semiannual times directly
    t_a = disc.time(spec.expiry)
    ts = np.array([t_a] + [disc.time(d) for d in spec.floating.dates]) - t_a
    v = 0.0127 * (1 - np.exp(-0.1331 * ts)) / 0.1331
    gt = v[:-1] / v[1:]
    np.testing.assert_allclose(ev.gamma_tilde, gt, rtol=1e-14)
    np.testing.assert_array_equal(np.sign(ev.nu), np.sign(gt - 0.30))
    flips = np.count_nonzero(np.diff(np.sign(ev.nu)))
    assert flips == 1


# -- payoff terms and root ----------------------------------------------------

def test_single_period_term_counts(disc, pseudo):
    spec = make_swaption(SPOT, "1y", "1y", 0.01)
    terms = payoff_terms(P, disc, pseudo, spec)
    assert terms.fixed_weights.size == 1
    b = disc.discount(spec.fixed.end) / disc.discount(spec.expiry)
    assert terms.fixed_weights[0] == pytest.approx((1 + spec.fixed.fractions[0] * 0.01) * b, rel=1e-15)
    assert terms.float_weights.size == 1 and terms.spread_weights.size == 2


def test_zero_expiry_gives_intrinsic(disc, pseudo):
    spec = make_swaption(SPOT, "0d", "5y", 0.004)
    terms = payoff_terms(P, disc, pseudo, spec)
    assert terms.zeta == 0.0
    expected = spec.strike * bpv(disc, spec.fixed) - floating_leg_value(disc, pseudo, spec.floating)
    assert eval_f(terms, 0.0) == pytest.approx(expected, abs=1e-15)
    assert price_swaption(P, disc, pseudo, spec) == pytest.approx(max(expected, 0.0), abs=1e-15)


@pytest.mark.parametrize("gamma", [0.0, 0.3, 0.9])
def test_payoff_terms_match_term_by_term_oracle(disc, pseudo, gamma):
    spec = atm(disc, pseudo, "1y", "9y")
    terms = payoff_terms(MhwParams(0.1331, 0.0127, gamma), disc, pseudo, spec)
    f, z, scale = payoff_function(0.1331, 0.0127, gamma, disc, pseudo, spec)
    assert terms.zeta == pytest.approx(z, rel=1e-14)
    assert terms.scale == pytest.approx(scale, rel=1e-13)
    for xi in (-2 * z, 0.0, 0.7 * z, 2 * z):
        assert eval_f(terms, xi) == pytest.approx(float(f(xi)), abs=1e-14 * scale)


def test_single_curve_f_is_coupon_bond_minus_one(disc):
    spec = make_swaption(SPOT, "2y", "5y", 0.01)
    terms = payoff_terms(MhwParams(0.05, 0.01, 0.0), disc, as_pseudo(disc), spec)
    z = terms.zeta
    for xi in (-0.5, 0.0, 0.4):
        bond = np.sum(terms.fixed_weights * np.exp(-terms.fixed_vols * xi - 0.5 * terms.fixed_vols**2 * z**2))
        assert eval_f(terms, xi) == pytest.approx(bond - 1.0, abs=1e-14)


def test_bracket_at_two_zeta_1y9y(disc, pseudo):
    terms = payoff_terms(P, disc, pseudo, atm(disc, pseudo, "1y", "9y"))
    z = terms.zeta
    assert eval_f(terms, -2 * z) > 0 > eval_f(terms, 2 * z)
    grid = np.linspace(-2 * z, 2 * z, 4001)
    vals = np.array([eval_f(terms, x) for x in grid])
    assert np.count_nonzero(np.diff(np.sign(vals))) == 1


def test_two_term_closed_form_root():
    c_b, beta_b, v, nu, z = 1.02, 0.97, 0.05, 0.01, 0.9
    terms = PayoffTerms(np.array([c_b]), np.array([v]), np.array([]), np.array([]),
                        np.array([beta_b]), np.array([nu]), z)
    expected = (math.log(c_b / beta_b) + 0.5 * (nu**2 - v**2) * z**2) / (v - nu)
    assert find_xi_star(terms) == pytest.approx(expected, rel=1e-13)


def test_root_matches_bisection_5y5y(disc, pseudo):
    spec = atm(disc, pseudo, "5y", "5y")
    terms = payoff_terms(P, disc, pseudo, spec)
    ref = bisect_root(lambda x: eval_f(terms, x), -10.0, 10.0)
    assert find_xi_star(terms) == pytest.approx(ref, abs=1e-12)


def test_deep_itm_receiver_root_far_right(disc, pseudo):
    spec = atm(disc, pseudo, "2y", "8y")
    near = find_xi_star(payoff_terms(P, disc, pseudo, spec))
    deep = find_xi_star(payoff_terms(P, disc, pseudo, spec.with_strike(spec.strike + 0.05)))
    terms = payoff_terms(P, disc, pseudo, spec.with_strike(spec.strike + 0.05))
    assert deep > near
    assert deep > 3 * terms.zeta


def test_root_error_on_zero_vol(disc, pseudo):
    terms = payoff_terms(MhwParams(0.1, 0.0, 0.0), disc, pseudo, atm(disc, pseudo, "1y", "9y"))
    with pytest.raises(RootError):
        find_xi_star(terms)


def test_root_error_when_no_sign_change():
    # all-positive coefficients: f never crosses zero
    terms = PayoffTerms(np.array([1.0, 1.0]), np.array([0.01, 0.02]), np.array([]), np.array([]),
                        np.array([-0.5]), np.array([0.03]), 1.0)
    with pytest.raises(RootError):
        find_xi_star(terms)


# -- prices -------------------------------------------------------------------

def test_zero_sigma_gives_discounted_intrinsic(disc, pseudo):
    spec = atm(disc, pseudo, "3y", "7y")
    for k in (-0.01, 0.0, 0.01):
        s = spec.with_strike(spec.strike + k)
        expected = max(intrinsic(disc, pseudo, s), 0.0)
        assert price_swaption(MhwParams(0.1, 0.0, 0.2), disc, pseudo, s) == pytest.approx(expected, abs=1e-15)


def test_atm_receiver_equals_payer(disc, pseudo):
    for e, t in (("1y", "9y"), ("5y", "5y"), ("9y", "1y")):
        r = atm(disc, pseudo, e, t)
        assert price_swaption(P, disc, pseudo, r) == pytest.approx(
            price_swaption(P, disc, pseudo, r.with_side(Side.PAYER)), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_single_curve_equals_jamshidian(disc, seed):
    rng = np.random.default_rng(seed)
    pseudo = as_pseudo(disc)
    spec = random_swaption(rng, SPOT, disc, pseudo, spread_bp=150).with_side(Side.RECEIVER)
    a, sigma = rng.uniform(0.01, 0.3), rng.uniform(0.003, 0.02)
    got = price_swaption(MhwParams(a, sigma, 0.0), disc, pseudo, spec)
    assert got == pytest.approx(jamshidian_receiver(a, sigma, disc, spec), rel=1e-10)


def test_jamshidian_flat_curve_zero_mean_reversion():
    c = flat_curve(SPOT, 0.02)
    spec = make_swaption(SPOT, "2y", "5y", 0.02)
    got = price_swaption(MhwParams(0.0, 0.01, 0.0), c, as_pseudo(c), spec)
    assert got == pytest.approx(jamshidian_receiver(0.0, 0.01, c, spec), rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_price_bounds(disc, pseudo, seed):
    rng = np.random.default_rng(seed)
    spec = random_swaption(rng, SPOT, disc, pseudo)
    p = MhwParams(rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.03), rng.uniform(0.0, 1.0))
    price = price_swaption(p, disc, pseudo, spec)
    sign = 1.0 if spec.side is Side.RECEIVER else -1.0
    fwd = sign * intrinsic(disc, pseudo, spec)
    assert price >= max(fwd, 0.0) - 1e-15
    # receiver below discounted fixed leg, payer below discounted floating leg
    b = disc.discount(spec.expiry)
    cap = b * (spec.strike * bpv(disc, spec.fixed) + 1.0) if sign > 0 else b * (
        floating_leg_value(disc, pseudo, spec.floating) + 1.0)
    assert price <= cap


def test_price_increases_with_sigma(disc, pseudo):
    spec = atm(disc, pseudo, "4y", "6y")
    prices = [price_swaption(MhwParams(0.1331, s, 0.0006), disc, pseudo, spec) for s in (0.005, 0.01, 0.015, 0.02)]
    assert all(x < y for x, y in zip(prices, prices[1:]))


@pytest.mark.parametrize("side", [Side.RECEIVER, Side.PAYER])
@pytest.mark.parametrize("params", [(0.1331, 0.0127, 0.0006), (0.08, 0.011, 0.35), (0.0005, 0.009, 0.8)])
def test_gradient_matches_finite_differences(disc, pseudo, side, params):
    spec = atm(disc, pseudo, "3y", "7y", side).with_strike(0.004)
    p = MhwParams(*params)
    grad = price_gradient(p, disc, pseudo, spec)
    for i in range(3):
        h = 1e-4 * max(params[i], 0.01)
        up = list(params); up[i] += h
        dn = list(params); dn[i] -= h
        fd = (price_swaption(MhwParams(*up), disc, pseudo, spec)
              - price_swaption(MhwParams(*dn), disc, pseudo, spec)) / (2 * h)
        assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_params_validation():
    for bad in ((-0.1, 0.01, 0.0), (0.1, -0.01, 0.0), (0.1, 0.01, 1.5), (math.nan, 0.01, 0.0)):
        with pytest.raises(ValueError):
            MhwParams(*bad)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31))
def test_root_unique_for_far_strikes(disc, pseudo, seed):
    """Strikes up to 300 bp from the forward can push the root past 12 zeta;
    the grid then widens to cover it and uniqueness must still hold."""
    rng = np.random.default_rng(seed)
    spec = random_swaption(rng, SPOT, disc, pseudo)
    a, sigma, gamma = rng.uniform(0.0, 0.5), rng.uniform(0.001, 0.03), rng.uniform(0.0, 1.0)
    f, z, scale = payoff_function(a, sigma, gamma, disc, pseudo, spec)
    xi = find_xi_star(payoff_terms(MhwParams(a, sigma, gamma), disc, pseudo, spec))
    lo, hi = min(-12 * z, xi - 2 * z), max(12 * z, xi + 2 * z)
    grid = np.linspace(lo, hi, 8001)
    vals = f(grid)
    changes = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    assert len(changes) == 1 and vals[0] > 0
    assert grid[changes[0]] <= xi <= grid[changes[0] + 1]
    assert abs(float(f(xi))) <= 1e-14 * scale
