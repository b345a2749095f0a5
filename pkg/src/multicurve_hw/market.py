"""Normal (Bachelier) swaption formulas and implied normal volatility."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from scipy.special import ndtr

from .curves import Curve, PseudoCurve, bpv, swap_rate
from .errors import InputError, InversionError
from .mhw import Side, SwaptionSpec

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class NormalQuote:
    expiry_years: int
    tenor_years: int
    vol: float

    def __post_init__(self) -> None:
        if not self.vol >= 0.0:
            raise ValueError(f"normal vol must be >= 0, got {self.vol}")

    @property
    def expiry(self) -> str:
        return f"{self.expiry_years}y"

    @property
    def tenor(self) -> str:
        return f"{self.tenor_years}y"


def load_vols(path: str | Path) -> list[NormalQuote]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"missing input file {path}")
    out = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = tuple(h.strip() for h in reader.fieldnames or ())
        if header != ("expiry_years", "tenor_years", "vol_bps"):
            raise InputError(f"{path}:1: expected header expiry_years,tenor_years,vol_bps")
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(
                    NormalQuote(
                        int(row["expiry_years"]), int(row["tenor_years"]), float(row["vol_bps"]) * 1e-4
                    )
                )
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    return out


def _density(d: float) -> float:
    return math.exp(-0.5 * d * d) / SQRT_2PI if abs(d) < 40.0 else 0.0


def bachelier(annuity: float, forward: float, strike: float, vol: float, tau: float, side: Side = Side.RECEIVER) -> float:
    """Undiscounted-by-convention Bachelier value: ``annuity`` carries all discounting."""
    if tau < 0.0:
        raise ValueError("negative time to expiry")
    sign = 1.0 if side is Side.RECEIVER else -1.0
    std = vol * math.sqrt(tau)
    if std == 0.0:
        return annuity * max(sign * (strike - forward), 0.0)
    d = (forward - strike) / std
    return annuity * (sign * (strike - forward) * ndtr(-sign * d) + std * _density(d))


def bachelier_atm(annuity: float, vol: float, tau: float) -> float:
    return annuity * vol * math.sqrt(tau / (2.0 * math.pi))


def _inputs(disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec) -> tuple[float, float, float]:
    annuity = disc.discount(spec.expiry) * bpv(disc, spec.fixed)
    forward = swap_rate(disc, pseudo, spec.fixed, spec.floating)
    tau = disc.time(spec.expiry)
    return annuity, forward, tau


def _vol(vol: float | NormalQuote) -> float:
    return vol.vol if isinstance(vol, NormalQuote) else float(vol)


def normal_receiver(disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec, vol: float | NormalQuote) -> float:
    annuity, forward, tau = _inputs(disc, pseudo, spec)
    return bachelier(annuity, forward, spec.strike, _vol(vol), tau, Side.RECEIVER)


def normal_price(disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec, vol: float | NormalQuote) -> float:
    """Receiver or payer according to ``spec.side``."""
    annuity, forward, tau = _inputs(disc, pseudo, spec)
    return bachelier(annuity, forward, spec.strike, _vol(vol), tau, spec.side)


def implied_vol_bachelier(
    price: float, annuity: float, forward: float, strike: float, tau: float, side: Side = Side.RECEIVER
) -> float:
    """Invert the Bachelier formula by safeguarded Newton on the vol."""
    sign = 1.0 if side is Side.RECEIVER else -1.0
    intrinsic = annuity * max(sign * (strike - forward), 0.0)
    if not math.isfinite(price) or price < intrinsic * (1 - 1e-15) - 1e-300:
        raise InversionError(f"price {price!r} below intrinsic {intrinsic!r}")
    if price <= intrinsic or tau == 0.0:
        if price > intrinsic:
            raise InversionError("positive time value at zero time to expiry")
        return 0.0
    sqrt_t = math.sqrt(tau)

    def excess(v: float) -> float:
        return bachelier(annuity, forward, strike, v, tau, side) - price

    # time value ~ annuity * std * phi(d); start from the ATM inversion of it,
    # then double until the price is bracketed
    lo, hi = 0.0, (price - intrinsic) * SQRT_2PI / (annuity * sqrt_t)
    while excess(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if not math.isfinite(hi):
            raise InversionError(f"cannot bracket implied vol for price {price!r}")
    vol = hi
    slow = 0
    for _ in range(300):
        width = hi - lo
        diff = excess(vol)
        if abs(diff) <= 1e-15 * price:
            return vol
        if diff > 0.0:
            hi = vol
        else:
            lo = vol
        if hi - lo <= 4.0 * math.ulp(hi):
            return vol
        vega = annuity * sqrt_t * _density((forward - strike) / (vol * sqrt_t))
        new = vol - diff / vega if vega > 0.0 else math.nan
        slow = slow + 1 if hi - lo > 0.5 * width else 0
        if slow >= 3 or not lo < new < hi:
            slow = 0
            new = math.sqrt(lo * hi) if lo > 0.0 and hi > 4.0 * lo else 0.5 * (lo + hi)
        vol = new
    raise InversionError(f"implied vol did not converge for price {price!r}")


def implied_normal_vol(disc: Curve, pseudo: PseudoCurve, spec: SwaptionSpec, price: float) -> float:
    annuity, forward, tau = _inputs(disc, pseudo, spec)
    return implied_vol_bachelier(price, annuity, forward, spec.strike, tau, spec.side)
