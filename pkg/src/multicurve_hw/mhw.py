"""Multicurve Hull-White model: volatilities, exercise-boundary function and
closed-form European swaption prices.

The model has three parameters. ``a`` is the mean reversion and ``sigma`` the
volatility level, so the pseudo-discount volatility is

    v(t, T) = sigma * (1 - exp(-a (T - t))) / a        (sigma * (T - t) at a = 0)

``gamma`` in [0, 1] splits it between discount curve, (1 - gamma) v, and
spread, gamma v. At expiry every forward discount and every spread-weighted
forward discount is a lognormal function of one Gaussian variable xi with
variance zeta**2. The receiver payoff is therefore [f(xi)]^+ with f a finite
sum of exponentials that has exactly one root xi*. Integrating each term
below xi* gives the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .curves import Curve, PseudoCurve, bpv, floating_leg_value, spreads
from .errors import DomainError, RootError
from .temporal import LegSchedule

EXP_CLAMP = 700.0


class Side(Enum):
    RECEIVER = "receiver"
    PAYER = "payer"


@dataclass(frozen=True)
class MhwParams:
    a: float
    sigma: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.a >= 0.0 and math.isfinite(self.a)):
            raise ValueError(f"mean reversion a must be >= 0, got {self.a}")
        if not (self.sigma >= 0.0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class SwaptionSpec:
    """European physically settled swaption; expiry is the swap start date."""

    fixed: LegSchedule
    floating: LegSchedule
    strike: float
    side: Side = Side.RECEIVER

    def __post_init__(self) -> None:
        if self.fixed.start != self.floating.start:
            raise ValueError("fixed and floating legs must start together")
        if self.fixed.end != self.floating.end:
            raise ValueError("fixed and floating legs must end together")

    @property
    def expiry(self):
        return self.fixed.start

    def with_strike(self, strike: float) -> "SwaptionSpec":
        return SwaptionSpec(self.fixed, self.floating, strike, self.side)

    def with_side(self, side: Side) -> "SwaptionSpec":
        return SwaptionSpec(self.fixed, self.floating, self.strike, side)


def _decay(a: float, tau):
    """(1 - exp(-a tau)) / a with the a -> 0 limit."""
    tau = np.asarray(tau, dtype=float)
    if a == 0.0:
        return tau
    return -np.expm1(-a * tau) / a


def vol_v(p: MhwParams, t: float, T):
    """Pseudo-discount volatility v(t, T); vectorised over ``T``."""
    T_arr = np.asarray(T, dtype=float)
    if np.any(T_arr < t):
        raise DomainError("vol_v needs t <= T")
    out = p.sigma * _decay(p.a, T_arr - t)
    return float(out) if out.ndim == 0 else out


def zeta(p: MhwParams, t0: float, t_alpha: float) -> float:
    """Standard deviation of xi at expiry ``t_alpha``."""
    if t_alpha < t0:
        raise DomainError("zeta needs t0 <= t_alpha")
    return math.sqrt(float(_decay(2.0 * p.a, t_alpha - t0)))


@dataclass(frozen=True)
class ExtendedVols:
    """Exponent loadings of every payoff term.

    ``fixed[j]``  -- (1-gamma) v(t_alpha, t_j), fixed payment dates
    ``floating[i]`` -- (1-gamma) v(t_alpha, t'_i), i = alpha'..omega'
    ``nu[i]``     -- v(t_alpha, t'_i) - gamma v(t_alpha, t'_{i+1}), i = alpha'..omega'-1
    ``gamma_tilde[i]`` -- v(t_alpha, t'_i) / v(t_alpha, t'_{i+1})
    """

    fixed: np.ndarray
    floating: np.ndarray
    nu: np.ndarray
    gamma_tilde: np.ndarray


def _leg_times(curve: Curve, leg: LegSchedule) -> tuple[float, np.ndarray]:
    t_alpha = curve.time(leg.start)
    return t_alpha, np.array([curve.time(d) for d in leg.dates])


@lru_cache(maxsize=4096)
def _static(disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec):
    """Parameter-free ingredients of a swaption: times and t0-curve quantities."""
    if disc.ref_date != pseudo.ref_date:
        raise DomainError("discount and pseudo curves have different reference dates")
    fixed, floating = spec.fixed, spec.floating
    t_alpha, fixed_t = _leg_times(disc, fixed)
    _, float_t = _leg_times(disc, floating)
    b_alpha = disc.discount(spec.expiry)
    fwd_fixed = disc.discounts_at(fixed.dates) / b_alpha
    coupons = spec.strike * np.asarray(fixed.fractions)
    coupons[-1] += 1.0
    fwd_float = disc.discounts_at([floating.start, *floating.dates[:-1]]) / b_alpha
    beta = spreads(disc, pseudo, floating)
    out = (fixed_t, float_t, coupons * fwd_fixed, fwd_float, beta)
    for arr in out:
        arr.setflags(write=False)
    return (t_alpha, out[0], out[1], b_alpha) + out[2:]


def extended_vols(p: MhwParams, spec: SwaptionSpec, curve: Curve) -> ExtendedVols:
    t_alpha, fixed_t = _leg_times(curve, spec.fixed)
    _, float_t = _leg_times(curve, spec.floating)
    v_fixed = vol_v(p, t_alpha, fixed_t)
    v_float = np.concatenate([[0.0], np.atleast_1d(vol_v(p, t_alpha, float_t))])
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma_tilde = np.where(v_float[1:] > 0.0, v_float[:-1] / v_float[1:], np.nan)
    return ExtendedVols(
        fixed=(1.0 - p.gamma) * np.atleast_1d(v_fixed),
        floating=(1.0 - p.gamma) * v_float,
        nu=v_float[:-1] - p.gamma * v_float[1:],
        gamma_tilde=gamma_tilde,
    )


@dataclass(frozen=True)
class PayoffTerms:
    """f(xi) = sum_k weight_k exp(-vol_k xi - vol_k**2 zeta**2 / 2).

    Three groups: fixed-leg flows c_j B(t0; t_alpha, t_j); floating-leg
    discounts B(t0; t_alpha, t'_i) for interior dates; and the negative
    spread-weighted discounts -beta_i B(t0; t_alpha, t'_i) for i = alpha'..omega'-1.
    """

    fixed_weights: np.ndarray
    fixed_vols: np.ndarray
    float_weights: np.ndarray
    float_vols: np.ndarray
    spread_weights: np.ndarray
    spread_vols: np.ndarray
    zeta: float
    weights: np.ndarray = field(init=False, repr=False, compare=False)
    vols: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        w = np.concatenate([self.fixed_weights, self.float_weights, -self.spread_weights])
        s = np.concatenate([self.fixed_vols, self.float_vols, self.spread_vols])
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "vols", s)

    @property
    def scale(self) -> float:
        return float(np.sum(np.abs(self.weights)))


def payoff_terms(p: MhwParams, disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec) -> PayoffTerms:
    t_alpha, fixed_t, float_t, _, fixed_w, fwd_float, beta = _static(disc, pseudo, spec)
    v_fixed = np.atleast_1d(vol_v(p, t_alpha, fixed_t))
    v_float = np.concatenate([[0.0], np.atleast_1d(vol_v(p, t_alpha, float_t))])
    return PayoffTerms(
        fixed_weights=fixed_w,
        fixed_vols=(1.0 - p.gamma) * v_fixed,
        float_weights=fwd_float[1:],
        float_vols=(1.0 - p.gamma) * v_float[1:-1],
        spread_weights=beta * fwd_float,
        spread_vols=v_float[:-1] - p.gamma * v_float[1:],
        zeta=zeta(p, 0.0, t_alpha),
    )


def _exponents(terms: PayoffTerms, xi: float) -> np.ndarray:
    s = terms.vols
    return -s * xi - 0.5 * s * s * terms.zeta**2


def eval_f(terms: PayoffTerms, xi: float) -> float:
    x = np.clip(_exponents(terms, xi), -EXP_CLAMP, EXP_CLAMP)
    return float(np.dot(terms.weights, np.exp(x)))


def _eval_checked(terms: PayoffTerms, xi: float) -> float:
    if np.max(np.abs(_exponents(terms, xi))) > EXP_CLAMP:
        raise RootError(f"exponent clamp reached at xi={xi:g} before bracketing the root")
    return eval_f(terms, xi)


def find_xi_star(terms: PayoffTerms) -> float:
    """Unique root of f; f is positive to its left and negative to its right.

    The bracket starts at +-4 zeta and doubles outward until the sign pattern
    (+, -) appears, then an Illinois false-position iteration with bisection
    safeguard shrinks it to adjacent floating-point numbers.
    """
    if not np.any(terms.vols * terms.zeta):
        raise RootError("f is constant in xi (zero volatility); no root to bracket")
    z = terms.zeta
    lo, hi = -4.0 * z, 4.0 * z
    f_lo, f_hi = _eval_checked(terms, lo), _eval_checked(terms, hi)
    while f_lo <= 0.0:
        if f_lo == 0.0:
            return lo
        hi, f_hi = lo, f_lo
        lo *= 2.0
        f_lo = _eval_checked(terms, lo)
    while f_hi >= 0.0:
        if f_hi == 0.0:
            return hi
        lo, f_lo = hi, f_hi
        hi *= 2.0
        f_hi = _eval_checked(terms, hi)

    tol = 1e-16 * terms.scale
    side = 0
    stalls = 0
    for _ in range(400):
        width = hi - lo
        x = hi - f_hi * (hi - lo) / (f_hi - f_lo)
        if stalls >= 2 or not lo < x < hi:
            x = 0.5 * (lo + hi)
            stalls = 0
        fx = eval_f(terms, x)
        if abs(fx) <= tol:
            return x
        if fx > 0.0:
            lo, f_lo = x, fx
            if side == 1:
                f_hi *= 0.5
            side = 1
        else:
            hi, f_hi = x, fx
            if side == -1:
                f_lo *= 0.5
            side = -1
        stalls = stalls + 1 if hi - lo > 0.5 * width else 0
        if np.nextafter(lo, hi) >= hi:
            break
    f_lo, f_hi = eval_f(terms, lo), eval_f(terms, hi)
    return lo if abs(f_lo) <= abs(f_hi) else hi


def intrinsic(disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec) -> float:
    """B(t0, t_alpha) (K BPV - N), the forward value of the receiver payoff."""
    b_alpha = disc.discount(spec.expiry)
    return b_alpha * (spec.strike * bpv(disc, spec.fixed) - floating_leg_value(disc, pseudo, spec.floating))


def price_swaption(p: MhwParams, disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec) -> float:
    """Closed-form price per unit notional.

    Receiver: B(t0, t_alpha) sum_k w_k N(xi*/zeta + zeta s_k). Payer uses the
    mirrored integral over xi > xi*, so payer - receiver equals the forward
    swap value exactly.
    """
    terms = payoff_terms(p, disc, pseudo, spec)
    b_alpha = _static(disc, pseudo, spec)[3]
    if terms.zeta == 0.0 or p.sigma == 0.0:
        value = b_alpha * math.fsum(terms.weights)
        if spec.side is Side.PAYER:
            value = -value
        return max(value, 0.0)
    xi_star = find_xi_star(terms)
    arg = xi_star / terms.zeta + terms.zeta * terms.vols
    if spec.side is Side.RECEIVER:
        value = math.fsum(terms.weights * ndtr(arg))
    else:
        value = -math.fsum(terms.weights * ndtr(-arg))
    return max(b_alpha * value, 0.0)


def price_gradient(p: MhwParams, disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec) -> np.ndarray:
    """d price / d(a, sigma, gamma) for a receiver or payer.

    Because f(xi*) = 0, the derivative of the closed form with respect to the
    root location vanishes; only the explicit dependence through zeta and the
    term loadings remains.
    """
    terms = payoff_terms(p, disc, pseudo, spec)
    if terms.zeta == 0.0 or p.sigma == 0.0:
        raise DomainError("price gradient undefined at zero volatility")
    t_alpha, fixed_t, float_t, b_alpha = _static(disc, pseudo, spec)[:4]
    fixed_tau = fixed_t - t_alpha
    float_tau = np.concatenate([[0.0], float_t - t_alpha])

    a, sig, g = p.a, p.sigma, p.gamma
    g_fixed, dg_fixed = _decay(a, fixed_tau), _ddecay_da(a, fixed_tau)
    g_float, dg_float = _decay(a, float_tau), _ddecay_da(a, float_tau)

    # loadings s and their partials, group by group, in the order of terms.vols
    s_parts = [
        ((1 - g) * sig * g_fixed, (1 - g) * sig * dg_fixed, (1 - g) * g_fixed, -sig * g_fixed),
        ((1 - g) * sig * g_float[1:-1], (1 - g) * sig * dg_float[1:-1], (1 - g) * g_float[1:-1], -sig * g_float[1:-1]),
        (
            sig * (g_float[:-1] - g * g_float[1:]),
            sig * (dg_float[:-1] - g * dg_float[1:]),
            g_float[:-1] - g * g_float[1:],
            -sig * g_float[1:],
        ),
    ]
    s = np.concatenate([x[0] for x in s_parts])
    ds = np.stack([np.concatenate([x[i] for x in s_parts]) for i in (1, 2, 3)])

    z = terms.zeta
    dz2_da = float(_ddecay_da(2.0 * a, np.asarray(t_alpha))) * 2.0
    dz = np.array([dz2_da / (2.0 * z), 0.0, 0.0])

    xi_star = find_xi_star(terms)
    arg = xi_star / z + z * s
    dens = np.exp(-0.5 * arg * arg) / math.sqrt(2.0 * math.pi)
    w = terms.weights
    d_arg = dz[:, None] * s[None, :] + z * ds
    # payer and receiver differ by a parameter-free forward, so share a gradient
    return b_alpha * (d_arg * (w * dens)[None, :]).sum(axis=1)


def _ddecay_da(a: float, tau):
    """d/da of (1 - exp(-a tau)) / a."""
    tau = np.asarray(tau, dtype=float)
    x = a * tau
    series = -tau**2 / 2 + a * tau**3 / 3 - a**2 * tau**4 / 8 + a**3 * tau**5 / 30
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (x * np.exp(-x) + np.expm1(-x)) / (a * a) if a > 0 else series
    return np.where(np.abs(x) < 1e-3, series, exact)


def make_swaption(
    spot,
    expiry: str,
    tenor: str,
    strike: float,
    side: Side = Side.RECEIVER,
    conventions=None,
) -> SwaptionSpec:
    """Swaption on a spot-date-anchored grid, e.g. ``make_swaption(spot, "1y", "9y", K)``.

    Expiry is ``spot + expiry`` rolled; the underlying runs to ``spot + expiry + tenor``.
    """
    from .curves import Conventions
    from .temporal import build_schedule, parse_tenor

    conv = conventions or Conventions()
    start = spot + parse_tenor(expiry)
    end = start + parse_tenor(tenor)
    fixed = build_schedule(start, end, conv.fixed_frequency, conv.fixed_day_count, conv.roll)
    floating = build_schedule(start, end, conv.float_frequency, conv.float_day_count, conv.roll)
    return SwaptionSpec(fixed, floating, strike, side)
