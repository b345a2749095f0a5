"""Volatility-parameter calibration to European swaption prices.

The objective is the price-space squared distance

    Err^2(a, sigma, gamma) = sum_i (model_i - market_i)^2

minimised over (a, sigma / a, gamma) with a bounded Nelder-Mead simplex from
several starts. Each start is then polished by a bounded trust-region
least-squares step that uses the analytic price gradient.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .curves import Curve, PseudoCurve, swap_rate
from .errors import CalibrationError, MhwError
from .market import NormalQuote, normal_receiver
from .mhw import MhwParams, SwaptionSpec, make_swaption, price_gradient, price_swaption

log = logging.getLogger(__name__)

A_MIN = 1e-8


@dataclass(frozen=True)
class Bounds:
    """Box in (a, sigma_tilde = sigma / a, gamma) coordinates."""

    a: tuple[float, float] = (A_MIN, 2.0)
    sigma_tilde: tuple[float, float] = (1e-8, 1.0)
    gamma: tuple[float, float] = (0.0, 1.0)

    def as_list(self) -> list[tuple[float, float]]:
        return [self.a, self.sigma_tilde, self.gamma]


@dataclass(frozen=True)
class OptimizerSettings:
    n_starts: int = 5
    seed: int = 12345
    max_iter: int = 2000
    xatol: float = 1e-8
    fatol: float = 1e-14
    polish: bool = True


@dataclass(frozen=True)
class CalibrationProblem:
    disc: Curve
    pseudo: PseudoCurve
    instruments: tuple[tuple[SwaptionSpec, float], ...]
    bounds: Bounds = field(default_factory=Bounds)
    settings: OptimizerSettings = field(default_factory=OptimizerSettings)
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.instruments:
            raise CalibrationError("calibration needs at least one instrument")
        for spec, price in self.instruments:
            if not price > 0.0:
                raise CalibrationError(f"market price must be positive, got {price}")

    @property
    def market_prices(self) -> np.ndarray:
        return np.array([price for _, price in self.instruments])


@dataclass(frozen=True)
class CalibrationResult:
    params: MhwParams
    err2: float
    model_prices: np.ndarray
    market_prices: np.ndarray
    n_evaluations: int
    starts: tuple[MhwParams, ...]
    start_err2: tuple[float, ...]
    converged: bool

    @property
    def err(self) -> float:
        return float(np.sqrt(self.err2))


def to_internal(p: MhwParams) -> np.ndarray:
    return np.array([p.a, p.sigma / p.a, p.gamma])


def from_internal(x) -> MhwParams:
    a, sigma_tilde, gamma = (float(v) for v in x)
    return MhwParams(a, a * sigma_tilde, min(max(gamma, 0.0), 1.0))


def model_prices(p: MhwParams, prob: CalibrationProblem) -> np.ndarray:
    out = np.empty(len(prob.instruments))
    for i, (spec, _) in enumerate(prob.instruments):
        try:
            out[i] = price_swaption(p, prob.disc, prob.pseudo, spec)
        except MhwError as exc:
            label = prob.labels[i] if prob.labels else str(i)
            raise type(exc)(f"instrument {label}: {exc}") from exc
    return out


def objective(p: MhwParams, prob: CalibrationProblem) -> float:
    diff = model_prices(p, prob) - prob.market_prices
    return float(np.dot(diff, diff))


def objective_gradient(p: MhwParams, prob: CalibrationProblem) -> np.ndarray:
    """Analytic d Err^2 / d(a, sigma, gamma)."""
    diff = model_prices(p, prob) - prob.market_prices
    jac = np.array([price_gradient(p, prob.disc, prob.pseudo, s) for s, _ in prob.instruments])
    return 2.0 * diff @ jac


def _internal_jacobian(p: MhwParams, prob: CalibrationProblem) -> np.ndarray:
    """d price_i / d(a, sigma_tilde, gamma)."""
    jac = np.array([price_gradient(p, prob.disc, prob.pseudo, s) for s, _ in prob.instruments])
    sigma_tilde = p.sigma / p.a
    out = np.empty_like(jac)
    out[:, 0] = jac[:, 0] + sigma_tilde * jac[:, 1]
    out[:, 1] = p.a * jac[:, 1]
    out[:, 2] = jac[:, 2]
    return out


def _random_starts(prob: CalibrationProblem, n: int, seed: int) -> list[MhwParams]:
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in prob.bounds.as_list()])
    hi = np.array([b[1] for b in prob.bounds.as_list()])
    # keep random starts in a region where prices are of market size
    hi = np.minimum(hi, [0.5, 0.3, 1.0])
    lo = np.maximum(lo, [0.01, 0.01, 0.0])
    return [from_internal(lo + (hi - lo) * rng.random(3)) for _ in range(n)]


def calibrate(prob: CalibrationProblem, start: MhwParams | list[MhwParams] | None = None) -> CalibrationResult:
    """Multi-start bounded fit; returns the best start.

    ``start`` may be one parameter set, a list, or None for
    ``settings.n_starts`` seeded random starts.
    """
    st = prob.settings
    if start is None:
        starts = _random_starts(prob, st.n_starts, st.seed)
    elif isinstance(start, MhwParams):
        starts = [start]
    else:
        starts = list(start)
    if not starts:
        raise CalibrationError("no starting points")

    market = prob.market_prices
    scale = float(np.dot(market, market))
    bounds = prob.bounds.as_list()
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    n_eval = 0

    def fun(x):
        nonlocal n_eval
        n_eval += 1
        return objective(from_internal(np.clip(x, lo, hi)), prob) / scale

    def residuals(x):
        nonlocal n_eval
        n_eval += 1
        return (model_prices(from_internal(x), prob) - market) / np.sqrt(scale)

    def jac(x):
        return _internal_jacobian(from_internal(x), prob) / np.sqrt(scale)

    best = None
    results = []
    any_converged = False
    trace = []
    for p0 in starts:
        x0 = np.clip(to_internal(p0), lo, hi)
        res = minimize(
            fun, x0, method="Nelder-Mead", bounds=bounds,
            options={"maxiter": st.max_iter, "maxfev": 4 * st.max_iter,
                     "xatol": st.xatol, "fatol": st.fatol, "adaptive": False},
        )
        x, ok = np.clip(res.x, lo, hi), bool(res.success)
        if st.polish:
            ls = least_squares(residuals, x, jac=jac, bounds=(lo, hi), method="trf",
                               xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
            if ls.cost * 2.0 <= fun(x):
                x = ls.x
            ok = ok or ls.status > 0
        p = from_internal(x)
        e2 = objective(p, prob)
        trace.append(f"start {p0} -> {p} err2={e2:.6e} nm_status={res.status}")
        log.debug(trace[-1])
        any_converged |= ok
        results.append(e2)
        if best is None or e2 < best[1]:
            best = (p, e2)
    if not any_converged:
        raise CalibrationError("no start converged:\n" + "\n".join(trace))
    p, e2 = best
    return CalibrationResult(
        params=p,
        err2=e2,
        model_prices=model_prices(p, prob),
        market_prices=market.copy(),
        n_evaluations=n_eval,
        starts=tuple(starts),
        start_err2=tuple(results),
        converged=any_converged,
    )


def diagonal_problem(
    disc: Curve,
    pseudo: PseudoCurve,
    quotes: list[NormalQuote],
    bounds: Bounds | None = None,
    settings: OptimizerSettings | None = None,
    conventions=None,
) -> CalibrationProblem:
    """ATM receiver swaptions priced with the normal market formula."""
    instruments = []
    labels = []
    for q in quotes:
        spec = make_swaption(disc.ref_date, q.expiry, q.tenor, 0.0, conventions=conventions)
        spec = spec.with_strike(swap_rate(disc, pseudo, spec.fixed, spec.floating))
        instruments.append((spec, normal_receiver(disc, pseudo, spec, q)))
        labels.append(f"{q.expiry}{q.tenor}")
    return CalibrationProblem(
        disc, pseudo, tuple(instruments),
        bounds=bounds or Bounds(), settings=settings or OptimizerSettings(), labels=tuple(labels),
    )


def synthetic_problem(
    disc: Curve, pseudo: PseudoCurve, template: CalibrationProblem, true_params: MhwParams
) -> CalibrationProblem:
    """Same instruments as ``template`` with market prices generated by the model."""
    instruments = tuple(
        (spec, price_swaption(true_params, disc, pseudo, spec)) for spec, _ in template.instruments
    )
    return CalibrationProblem(disc, pseudo, instruments, template.bounds, template.settings, template.labels)
