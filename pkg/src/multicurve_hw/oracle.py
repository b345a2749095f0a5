"""Monte Carlo validators for the closed-form swaption price.

Two samplers produce the expiry-date state (forward discounts and spreads) in
the expiry-forward measure:

* ``exact``: one Gaussian draw per scenario, mapped to every curve quantity
  through its lognormal representation.
* ``path``: log-Euler integration of the discount and spread dynamics on a
  time grid. Volatilities are deterministic and share one exponential time
  profile, so integrating each step exactly makes the scheme bias-free at any
  step count.

Both price the receiver payoff K BPV(t_alpha) - N(t_alpha) computed from the
sampled curves, not from the closed form's term decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import Curve, PseudoCurve, spreads
from .mhw import MhwParams, Side, SwaptionSpec


@dataclass(frozen=True)
class McConfig:
    draws: int = 1_000_000
    seed: int = 20150910
    antithetic: bool = True
    steps: int = 1
    batch_size: int = 100_000

    def __post_init__(self) -> None:
        if self.draws < 1:
            raise ValueError("draws must be >= 1")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")


@dataclass(frozen=True)
class McEstimate:
    """Estimate and standard error.

    With antithetics the sample is the set of pair averages, so ``se`` is
    their standard deviation over sqrt(number of pairs).
    """

    price: float
    se: float
    draws: int
    seed: int

    def within(self, value: float, n_se: float = 3.0) -> bool:
        return abs(self.price - value) <= n_se * self.se

    def to_dict(self) -> dict:
        return {"price": self.price, "se": self.se, "draws": self.draws, "seed": self.seed}


@dataclass(frozen=True)
class ExpiryState:
    """Sampled curves at expiry, one row per scenario.

    fixed:    B(t_alpha, t_j) on fixed payment dates
    floating: B(t_alpha, t'_i), i = alpha'..omega'   (first column is 1)
    beta:     beta(t_alpha; t'_i, t'_{i+1}), i = alpha'..omega'-1
    """

    fixed: np.ndarray
    floating: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class _Setup:
    t_alpha: float
    fixed_t: np.ndarray
    float_t: np.ndarray  # includes t_alpha as first entry
    fixed_fwd: np.ndarray
    float_fwd: np.ndarray
    beta0: np.ndarray
    b_alpha: float
    fixed_fractions: np.ndarray


def _setup(disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec) -> _Setup:
    b_alpha = disc.discount(spec.expiry)
    float_dates = [spec.floating.start, *spec.floating.dates]
    return _Setup(
        t_alpha=disc.time(spec.expiry),
        fixed_t=np.array([disc.time(d) for d in spec.fixed.dates]),
        float_t=np.array([disc.time(d) for d in float_dates]),
        fixed_fwd=disc.discounts_at(spec.fixed.dates) / b_alpha,
        float_fwd=disc.discounts_at(float_dates) / b_alpha,
        beta0=spreads(disc, pseudo, spec.floating),
        b_alpha=b_alpha,
        fixed_fractions=np.asarray(spec.fixed.fractions),
    )


def _hw(p: MhwParams, t, T):
    """sigma (1 - exp(-a (T - t))) / a, elementwise, T >= t."""
    tau = np.asarray(T, dtype=float) - np.asarray(t, dtype=float)
    if p.a == 0.0:
        return p.sigma * tau
    return p.sigma * (-np.expm1(-p.a * tau)) / p.a


def _discount_vol(p: MhwParams, t, T):
    return (1.0 - p.gamma) * _hw(p, t, T)


def _spread_vol_fn(p: MhwParams, t, T):
    return p.gamma * _hw(p, t, T)


def _kernel_var(a: float, t1: float, t2: float) -> float:
    """Variance of int_{t1}^{t2} exp(-a (t2 - u)) dW_u."""
    dt = t2 - t1
    if a == 0.0:
        return dt
    return -math.expm1(-2.0 * a * dt) / (2.0 * a)


def _normals(rng: np.random.Generator, n: int, k: int, antithetic: bool) -> np.ndarray:
    if antithetic:
        half = rng.standard_normal((n // 2, k))
        return np.concatenate([half, -half])
    return rng.standard_normal((n, k))


def sample_exact(p: MhwParams, s: _Setup, z: np.ndarray) -> ExpiryState:
    """Map standard normals ``z`` (shape (n,)) to the expiry state."""
    var = _kernel_var(p.a, 0.0, s.t_alpha)
    xi = math.sqrt(var) * z[:, None]
    sv_fixed = _discount_vol(p, s.t_alpha, s.fixed_t) - _discount_vol(p, s.t_alpha, s.t_alpha)
    sv_float = _discount_vol(p, s.t_alpha, s.float_t) - _discount_vol(p, s.t_alpha, s.t_alpha)
    fixed = s.fixed_fwd * np.exp(-sv_fixed * xi - 0.5 * sv_fixed**2 * var)
    floating = s.float_fwd * np.exp(-sv_float * xi - 0.5 * sv_float**2 * var)
    # spread-weighted discount: discount vol minus the spread vol increment
    eta = _spread_vol_fn(p, s.t_alpha, s.float_t)
    load = sv_float[:-1] - (eta[1:] - eta[:-1])
    weighted = s.beta0 * s.float_fwd[:-1] * np.exp(-load * xi - 0.5 * load**2 * var)
    return ExpiryState(fixed, floating, weighted / floating[:, :-1])


def sample_path(p: MhwParams, s: _Setup, z: np.ndarray) -> ExpiryState:
    """Integrate the dynamics with ``z.shape[1]`` steps on a uniform grid.

    Under the t_alpha-forward measure, with W the t_alpha-forward Brownian motion:
      d ln B(t; t_alpha, T) = -Sd dW - Sd^2/2 dt,  Sd = sigma(t,T) - sigma(t,t_alpha)
      d ln beta(t; T1, T2)  = H (dW + Sd1 dt) - H^2/2 dt,  H = eta(t,T2) - eta(t,T1)
    where Sd1 is Sd evaluated at T = T1 (drift from the change of measure).
    """
    n, steps = z.shape
    grid = np.linspace(0.0, s.t_alpha, steps + 1)
    log_fixed = np.broadcast_to(np.log(s.fixed_fwd), (n, s.fixed_t.size)).copy()
    log_float = np.broadcast_to(np.log(s.float_fwd), (n, s.float_t.size)).copy()
    log_beta = np.broadcast_to(np.log(s.beta0), (n, s.beta0.size)).copy()
    for k in range(steps):
        t1, t2 = grid[k], grid[k + 1]
        # every vol is c(T) * exp(-a (t2 - u)) on [t1, t2]; evaluate at step end
        var = _kernel_var(p.a, t1, t2)
        dw = math.sqrt(var) * z[:, k : k + 1]
        sd_fixed = _discount_vol(p, t2, s.fixed_t) - _discount_vol(p, t2, s.t_alpha)
        sd_float = _discount_vol(p, t2, s.float_t) - _discount_vol(p, t2, s.t_alpha)
        eta = _spread_vol_fn(p, t2, s.float_t)
        h = eta[1:] - eta[:-1]
        log_fixed += -sd_fixed * dw - 0.5 * sd_fixed**2 * var
        log_float += -sd_float * dw - 0.5 * sd_float**2 * var
        log_beta += h * dw + h * sd_float[:-1] * var - 0.5 * h**2 * var
    return ExpiryState(np.exp(log_fixed), np.exp(log_float), np.exp(log_beta))


def receiver_payoff(state: ExpiryState, strike: float, fixed_fractions: np.ndarray) -> np.ndarray:
    """K BPV(t_alpha) - N(t_alpha) per scenario (the un-floored payoff)."""
    bpv = state.fixed @ fixed_fractions
    starts = state.floating[:, :-1]
    n = 1.0 - state.floating[:, -1] + np.sum(starts * (state.beta - 1.0), axis=1)
    return strike * bpv - n


def _batches(cfg: McConfig) -> list[tuple[np.random.Generator, int]]:
    n_batches = max(1, math.ceil(cfg.draws / cfg.batch_size))
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_batches)
    sizes = [cfg.batch_size] * (n_batches - 1) + [cfg.draws - cfg.batch_size * (n_batches - 1)]
    return [(np.random.default_rng(sq), size) for sq, size in zip(seeds, sizes)]


def _estimate(samples: list[np.ndarray], cfg: McConfig) -> McEstimate:
    x = np.concatenate(samples)
    if x.size == 1:
        return McEstimate(float(x[0]), math.inf, cfg.draws, cfg.seed)
    return McEstimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), cfg.draws, cfg.seed)


def _run(p, disc, pseudo, spec, cfg, sampler, statistic) -> list[np.ndarray]:
    """Per-batch samples of ``statistic(state)``, antithetic pairs averaged."""
    s = _setup(disc, pseudo, spec)
    out = []
    for rng, size in _batches(cfg):
        anti = cfg.antithetic and size >= 2
        m = size - (size % 2) if anti else size
        z = _normals(rng, m, cfg.steps if sampler is sample_path else 1, anti)
        state = sampler(p, s, z if sampler is sample_path else z[:, 0])
        vals = statistic(state, s)
        if anti:
            half = m // 2
            vals = 0.5 * (vals[:half] + vals[half:])
        out.append(vals)
    return out


def _price_stat(spec: SwaptionSpec):
    sign = 1.0 if spec.side is Side.RECEIVER else -1.0

    def stat(state: ExpiryState, s: _Setup) -> np.ndarray:
        f = receiver_payoff(state, spec.strike, s.fixed_fractions)
        return s.b_alpha * np.maximum(sign * f, 0.0)

    return stat


def mc_price_exact(p: MhwParams, disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec, cfg: McConfig = McConfig()) -> McEstimate:
    return _estimate(_run(p, disc, pseudo, spec, cfg, sample_exact, _price_stat(spec)), cfg)


def mc_price_path(p: MhwParams, disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec, cfg: McConfig = McConfig(steps=50)) -> McEstimate:
    return _estimate(_run(p, disc, pseudo, spec, cfg, sample_path, _price_stat(spec)), cfg)


def mc_martingale_check(
    p: MhwParams, disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec,
    cfg: McConfig = McConfig(), mode: str = "exact",
) -> dict[str, list[tuple[float, McEstimate]]]:
    """Sample means of quantities whose expectation is known at t0.

    Returns, per family, (t0 value, estimate) pairs:
      ``discount``  -- B(t_alpha; t_alpha, T) on floating dates, mean B(t0; t_alpha, T)
      ``spread``    -- beta_i(t_alpha) B(t_alpha, t'_i) / B(t0; t_alpha, t'_i), mean beta_i(t0)
    """
    sampler = {"exact": sample_exact, "path": sample_path}[mode]
    s = _setup(disc, pseudo, spec)
    n_float = s.float_t.size
    out: dict[str, list[tuple[float, McEstimate]]] = {"discount": [], "spread": []}

    def stat(state, s):
        weighted = state.beta * state.floating[:, :-1] / s.float_fwd[:-1]
        return np.concatenate([state.floating[:, 1:], weighted], axis=1)

    samples = _run(p, disc, pseudo, spec, cfg, sampler, stat)
    x = np.concatenate(samples)
    mean = x.mean(axis=0)
    se = x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])
    for i in range(n_float - 1):
        out["discount"].append((float(s.float_fwd[i + 1]), McEstimate(float(mean[i]), float(se[i]), cfg.draws, cfg.seed)))
    for i in range(n_float - 1):
        j = n_float - 1 + i
        out["spread"].append((float(s.beta0[i]), McEstimate(float(mean[j]), float(se[j]), cfg.draws, cfg.seed)))
    return out
