"""Discount and pseudo-discount curves, swap algebra and the dual-curve bootstrap.

Curves are log-linear in discount factor on ACT/365 time measured from the
curve reference date (the spot date). Beyond the last pillar the last
instantaneous forward is extended flat.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import BootstrapError, DomainError, InputError
from .temporal import (
    DayCount,
    LegSchedule,
    Roll,
    add_business_days,
    add_tenor,
    build_schedule,
    parse_tenor,
    tenor_in_years,
    year_fraction,
)


@dataclass(frozen=True)
class Curve:
    """Term structure of discount factors B(t0, T)."""

    ref_date: date
    dates: tuple[date, ...]
    discounts: tuple[float, ...]
    interpolation: str = "log_linear"
    _times: np.ndarray = field(init=False, repr=False, compare=False)
    _logs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.dates) != len(self.discounts):
            raise ValueError("dates and discounts differ in length")
        if self.interpolation != "log_linear":
            raise ValueError(f"unsupported interpolation {self.interpolation!r}")
        prev = self.ref_date
        for d in self.dates:
            if d <= prev:
                raise ValueError("pillar dates must be strictly increasing after ref_date")
            prev = d
        if any(not (b > 0.0) or not math.isfinite(b) for b in self.discounts):
            raise ValueError("discount factors must be finite and positive")
        times = np.array([0.0] + [self.time(d) for d in self.dates])
        logs = np.array([0.0] + [math.log(b) for b in self.discounts])
        object.__setattr__(self, "_times", times)
        object.__setattr__(self, "_logs", logs)

    def time(self, d: date) -> float:
        """ACT/365 year fraction from the reference date (negative before it)."""
        return (d - self.ref_date).days / 365.0

    def discount_t(self, t):
        """Discount factor at time(s) ``t`` in years from the reference date."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0):
            raise DomainError("time before curve reference date")
        times, logs = self._times, self._logs
        out = np.interp(t_arr, times, logs)
        if len(times) > 1:
            slope = (logs[-1] - logs[-2]) / (times[-1] - times[-2])
            out = np.where(t_arr > times[-1], logs[-1] + slope * (t_arr - times[-1]), out)
        res = np.exp(out)
        return float(res) if res.ndim == 0 else res

    def discount(self, d: date) -> float:
        return self.discount_t(self.time(d))

    def discounts_at(self, dates) -> np.ndarray:
        return np.atleast_1d(self.discount_t(np.array([self.time(d) for d in dates])))

    def with_pillar(self, d: date, df: float) -> "Curve":
        return Curve(self.ref_date, self.dates + (d,), self.discounts + (df,))


@dataclass(frozen=True)
class PseudoCurve(Curve):
    """Pseudo-discount curve B^(t0, T) for one Libor tenor."""

    tenor_months: int = 6

    def with_pillar(self, d: date, df: float) -> "PseudoCurve":
        return PseudoCurve(
            self.ref_date, self.dates + (d,), self.discounts + (df,),
            tenor_months=self.tenor_months,
        )


def flat_curve(ref_date: date, rate: float = 0.0, horizon_years: int = 40) -> Curve:
    """Continuously compounded flat curve; handy for tests and toy setups."""
    d = add_tenor(ref_date, f"{horizon_years}y", Roll.UNADJUSTED)
    t = (d - ref_date).days / 365.0
    return Curve(ref_date, (d,), (math.exp(-rate * t),))


def as_pseudo(c: Curve, tenor_months: int = 6) -> PseudoCurve:
    return PseudoCurve(c.ref_date, c.dates, c.discounts, tenor_months=tenor_months)


# --------------------------------------------------------------------------
# swap algebra
# --------------------------------------------------------------------------


def forward_discount(c: Curve, t1: date, t2: date) -> float:
    if t1 < c.ref_date:
        raise DomainError(f"{t1} precedes curve reference date {c.ref_date}")
    if t2 < t1:
        raise DomainError(f"forward_discount needs t1 <= t2, got {t1} > {t2}")
    if t1 == t2:
        return 1.0
    return c.discount(t2) / c.discount(t1)


def spread(disc: Curve, pseudo: PseudoCurve, t1: date, t2: date | None = None) -> float:
    """Multiplicative spread beta(t0; t1, t2) = B(t0; t1, t2) / B^(t0; t1, t2).

    ``t2`` defaults to ``t1`` plus the pseudo-curve tenor, rolled.
    """
    if t2 is None:
        t2 = add_tenor(t1, f"{pseudo.tenor_months}m")
    return forward_discount(disc, t1, t2) / forward_discount(pseudo, t1, t2)


def spreads(disc: Curve, pseudo: PseudoCurve, floating: LegSchedule) -> np.ndarray:
    starts = [floating.start, *floating.dates]
    bd = disc.discounts_at(starts)
    bp = pseudo.discounts_at(starts)
    return (bd[1:] / bd[:-1]) / (bp[1:] / bp[:-1])


def bpv(disc: Curve, fixed: LegSchedule) -> float:
    """Forward basis-point value sum_j delta_j B(t0; t_alpha, t_j)."""
    b0 = disc.discount(fixed.start)
    pay = disc.discounts_at(fixed.dates) / b0
    return float(np.dot(np.asarray(fixed.fractions), pay))


def floating_leg_value(disc: Curve, pseudo: PseudoCurve, floating: LegSchedule) -> float:
    """Forward value at t_alpha of the floating leg, unit notional.

    1 - B(t_alpha, t_omega) + sum_i B(t_alpha, t'_i) (beta_i - 1), all forward
    quantities seen from the reference date.
    """
    b0 = disc.discount(floating.start)
    starts = [floating.start, *floating.dates[:-1]]
    fwd_starts = disc.discounts_at(starts) / b0
    b_end = disc.discount(floating.end) / b0
    beta = spreads(disc, pseudo, floating)
    return float(1.0 - b_end + np.dot(fwd_starts, beta - 1.0))


def swap_rate(disc: Curve, pseudo: PseudoCurve, fixed: LegSchedule, floating: LegSchedule) -> float:
    return floating_leg_value(disc, pseudo, floating) / bpv(disc, fixed)


def forward_libor(pseudo: PseudoCurve, t1: date, t2: date, dc: DayCount = DayCount.ACT_360) -> float:
    return (1.0 / forward_discount(pseudo, t1, t2) - 1.0) / year_fraction(t1, t2, dc)


# --------------------------------------------------------------------------
# quotes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Conventions:
    spot_lag: int = 2
    roll: Roll = Roll.MODIFIED_FOLLOWING
    ois_day_count: DayCount = DayCount.ACT_360
    ois_frequency: int = 12
    depo_day_count: DayCount = DayCount.ACT_360
    fra_day_count: DayCount = DayCount.ACT_360
    fixed_day_count: DayCount = DayCount.THIRTY_360
    fixed_frequency: int = 12
    float_day_count: DayCount = DayCount.ACT_360
    float_frequency: int = 6

    def spot(self, value_date: date) -> date:
        return add_business_days(value_date, self.spot_lag)


@dataclass(frozen=True)
class QuoteSet:
    """Linear-instrument market quotes, all rates as decimals."""

    ois: dict[str, float]
    depo: dict[str, float]
    fra: dict[tuple[int, int], float]
    swap6m: dict[str, float]

    def __post_init__(self) -> None:
        for name in ("ois", "depo", "fra", "swap6m"):
            for k, r in getattr(self, name).items():
                if not math.isfinite(r):
                    raise InputError(f"{name} quote {k} is not finite")


def _read_csv(path: Path, columns: tuple[str, ...]) -> list[dict[str, str]]:
    if not path.exists():
        raise InputError(f"missing input file {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(h.strip() for h in reader.fieldnames) != columns:
            raise InputError(f"{path}:1: expected header {','.join(columns)}, got {reader.fieldnames}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            row = {k.strip(): (v or "").strip() for k, v in row.items() if k is not None}
            if any(not row.get(c) for c in columns):
                raise InputError(f"{path}:{lineno}: missing field")
            row["_line"] = str(lineno)
            rows.append(row)
    return rows


def _float(path: Path, row: dict[str, str], col: str) -> float:
    try:
        return float(row[col])
    except ValueError:
        raise InputError(f"{path}:{row['_line']}: {col}={row[col]!r} is not a number") from None


def _tenor_table(path: Path) -> dict[str, float]:
    out: dict[str, float] = {}
    for row in _read_csv(path, ("tenor", "rate")):
        tenor = row["tenor"].lower()
        try:
            parse_tenor(tenor)
        except ValueError:
            raise InputError(f"{path}:{row['_line']}: bad tenor {tenor!r}") from None
        if tenor in out:
            raise InputError(f"{path}:{row['_line']}: duplicate tenor {tenor}")
        out[tenor] = _float(path, row, "rate")
    return out


def load_quotes(data_dir: str | Path) -> QuoteSet:
    data_dir = Path(data_dir)
    fra: dict[tuple[int, int], float] = {}
    fra_path = data_dir / "fra.csv"
    for row in _read_csv(fra_path, ("start_months", "end_months", "rate")):
        try:
            key = (int(row["start_months"]), int(row["end_months"]))
        except ValueError:
            raise InputError(f"{fra_path}:{row['_line']}: month fields must be integers") from None
        if key in fra:
            raise InputError(f"{fra_path}:{row['_line']}: duplicate FRA {key}")
        fra[key] = _float(fra_path, row, "rate")
    return QuoteSet(
        ois=_tenor_table(data_dir / "ois.csv"),
        depo=_tenor_table(data_dir / "depo.csv"),
        fra=fra,
        swap6m=_tenor_table(data_dir / "swap6m.csv"),
    )


# --------------------------------------------------------------------------
# bootstrap
# --------------------------------------------------------------------------


def _fill_annual_gaps(quotes: dict[str, float]) -> dict[str, float]:
    """Insert linearly interpolated par rates for missing whole-year tenors >= 2y."""
    years = {tenor_in_years(k): r for k, r in quotes.items()}
    annual = sorted(y for y in years if y >= 1.0 and float(y).is_integer())
    out = dict(quotes)
    for lo, hi in zip(annual[:-1], annual[1:]):
        for y in range(int(lo) + 1, int(hi)):
            w = (y - lo) / (hi - lo)
            out[f"{y}y"] = (1 - w) * years[lo] + w * years[hi]
    return out


def _solve_pillar(curve: Curve, d: date, npv, label: str) -> Curve:
    """Append a pillar at ``d`` so that ``npv(curve)`` vanishes."""

    def g(x: float) -> float:
        return npv(curve.with_pillar(d, math.exp(x)))

    t = curve.time(d)
    lo, hi = -0.5 - 0.5 * t, 0.5 + 0.5 * t
    try:
        glo, ghi = g(lo), g(hi)
        if glo * ghi > 0:
            raise BootstrapError(f"cannot bracket pillar for {label}")
        x = brentq(g, lo, hi, xtol=1e-16, rtol=8.9e-16, maxiter=200)
    except ValueError as exc:
        raise BootstrapError(f"bootstrap failed for {label}: {exc}") from exc
    return curve.with_pillar(d, math.exp(x))


def _ois_instruments(q: QuoteSet, spot: date, conv: Conventions):
    out = []
    for tenor, rate in _fill_annual_gaps(q.ois).items():
        end = add_tenor(spot, tenor, conv.roll)
        if tenor_in_years(tenor) <= 1.0:
            leg = LegSchedule(spot, (end,), (year_fraction(spot, end, conv.ois_day_count),), conv.ois_day_count)
        else:
            leg = build_schedule(spot, spot + parse_tenor(tenor), conv.ois_frequency, conv.ois_day_count, conv.roll)
        out.append((tenor, rate, leg))
    out.sort(key=lambda x: x[2].end)
    return out


def ois_npv(disc: Curve, rate: float, leg: LegSchedule) -> float:
    """Receiver-fixed NPV per unit notional, seen from the leg start."""
    b0 = disc.discount(leg.start)
    pay = disc.discounts_at(leg.dates) / b0
    return float(rate * np.dot(np.asarray(leg.fractions), pay) - (1.0 - pay[-1]))


def bootstrap_discount(
    q: QuoteSet, value_date: date, conventions: Conventions | None = None
) -> Curve:
    """OIS discount curve with reference date at spot."""
    conv = conventions or Conventions()
    spot = conv.spot(value_date)
    if not q.ois:
        raise BootstrapError("no OIS quotes")
    curve = Curve(spot, (), ())
    for tenor, rate, leg in _ois_instruments(q, spot, conv):
        curve = _solve_pillar(curve, leg.end, lambda c, r=rate, l=leg: ois_npv(c, r, l), f"OIS {tenor}")
    return curve


def _swap_legs(spot: date, tenor: str, conv: Conventions) -> tuple[LegSchedule, LegSchedule]:
    end = spot + parse_tenor(tenor)
    fixed = build_schedule(spot, end, conv.fixed_frequency, conv.fixed_day_count, conv.roll)
    floating = build_schedule(spot, end, conv.float_frequency, conv.float_day_count, conv.roll)
    return fixed, floating


def swap_npv(disc: Curve, pseudo: PseudoCurve, rate: float, fixed: LegSchedule, floating: LegSchedule) -> float:
    """Receiver-fixed NPV of a swap vs the pseudo-curve index, forward to its start."""
    return rate * bpv(disc, fixed) - floating_leg_value(disc, pseudo, floating)


def _pseudo_instruments(q: QuoteSet, spot: date, conv: Conventions):
    """(label, end date, npv-function-of(pseudo, disc)) sorted by end date."""
    out = []
    for tenor, rate in q.depo.items():
        end = add_tenor(spot, tenor, conv.roll)
        delta = year_fraction(spot, end, conv.depo_day_count)

        def npv(p, d, r=rate, e=end, dl=delta):
            return 1.0 / forward_discount(p, spot, e) - (1.0 + dl * r)

        out.append((f"depo {tenor}", end, npv))
    for (m1, m2), rate in q.fra.items():
        s = add_tenor(spot, f"{m1}m", conv.roll)
        e = add_tenor(spot, f"{m2}m", conv.roll)
        delta = year_fraction(s, e, conv.fra_day_count)

        def npv(p, d, r=rate, s=s, e=e, dl=delta):
            return 1.0 / forward_discount(p, s, e) - (1.0 + dl * r)

        out.append((f"FRA {m1}x{m2}", e, npv))
    for tenor, rate in _fill_annual_gaps(q.swap6m).items():
        fixed, floating = _swap_legs(spot, tenor, conv)

        def npv(p, d, r=rate, fx=fixed, fl=floating):
            return swap_npv(d, p, r, fx, fl)

        out.append((f"swap {tenor}", fixed.end, npv))
    out.sort(key=lambda x: x[1])
    return out


def bootstrap_pseudo(
    q: QuoteSet, disc: Curve, value_date: date, conventions: Conventions | None = None
) -> PseudoCurve:
    """Euribor-6m pseudo-discount curve; FRAs carry no convexity adjustment."""
    conv = conventions or Conventions()
    spot = conv.spot(value_date)
    if spot != disc.ref_date:
        raise BootstrapError("discount curve reference date differs from spot")
    if not q.depo and not q.fra and not q.swap6m:
        raise BootstrapError("no pseudo-curve instruments")
    curve = PseudoCurve(spot, (), (), tenor_months=conv.float_frequency)
    seen: set[date] = set()
    for label, end, npv in _pseudo_instruments(q, spot, conv):
        if end in seen:
            raise BootstrapError(f"{label} shares its maturity {end} with another instrument")
        seen.add(end)
        curve = _solve_pillar(curve, end, lambda c, f=npv: f(c, disc), label)
    return curve


def repricing_residuals(
    q: QuoteSet, disc: Curve, pseudo: PseudoCurve, value_date: date,
    conventions: Conventions | None = None,
) -> dict[str, float]:
    """NPV per unit notional of every bootstrap instrument (quoted and gap-filled)."""
    conv = conventions or Conventions()
    spot = conv.spot(value_date)
    out = {f"OIS {t}": ois_npv(disc, r, leg) for t, r, leg in _ois_instruments(q, spot, conv)}
    for label, _, npv in _pseudo_instruments(q, spot, conv):
        out[label] = npv(pseudo, disc)
    return out
