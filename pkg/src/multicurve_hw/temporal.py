"""Calendar arithmetic, day counts and swap-leg schedules.

Only the TARGET calendar is supported. Weekends are never business days.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, timedelta
from enum import Enum
from functools import lru_cache

from dateutil.easter import easter
from dateutil.relativedelta import relativedelta

from .errors import DomainError, ScheduleError


class DayCount(Enum):
    ACT_360 = "ACT/360"
    ACT_365 = "ACT/365"
    THIRTY_360 = "30E/360"


class Roll(Enum):
    UNADJUSTED = "unadjusted"
    FOLLOWING = "following"
    MODIFIED_FOLLOWING = "modified_following"


def parse_date(text: str) -> date:
    return date.fromisoformat(text.strip())


@lru_cache(maxsize=None)
def _target_holidays(year: int) -> frozenset[date]:
    good_friday = easter(year) - timedelta(days=2)
    easter_monday = easter(year) + timedelta(days=1)
    return frozenset(
        {
            date(year, 1, 1),
            good_friday,
            easter_monday,
            date(year, 5, 1),
            date(year, 12, 25),
            date(year, 12, 26),
        }
    )


def is_business_day(d: date) -> bool:
    return d.weekday() < 5 and d not in _target_holidays(d.year)


def adjust(d: date, roll: Roll = Roll.MODIFIED_FOLLOWING) -> date:
    if roll is Roll.UNADJUSTED:
        return d
    out = d
    while not is_business_day(out):
        out += timedelta(days=1)
    if roll is Roll.MODIFIED_FOLLOWING and out.month != d.month:
        out = d
        while not is_business_day(out):
            out -= timedelta(days=1)
    return out


def add_business_days(d: date, n: int) -> date:
    out = d
    step = timedelta(days=1 if n >= 0 else -1)
    remaining = abs(n)
    while remaining:
        out += step
        if is_business_day(out):
            remaining -= 1
    return out


_TENOR = re.compile(r"^\s*(\d+)\s*([dwmyDWMY])\s*$")


def parse_tenor(tenor: str) -> relativedelta:
    """'1w', '6m', '10y' -> relativedelta."""
    m = _TENOR.match(tenor)
    if m is None:
        raise ValueError(f"bad tenor {tenor!r}")
    n, unit = int(m.group(1)), m.group(2).lower()
    return {
        "d": relativedelta(days=n),
        "w": relativedelta(weeks=n),
        "m": relativedelta(months=n),
        "y": relativedelta(years=n),
    }[unit]


def tenor_in_years(tenor: str) -> float:
    m = _TENOR.match(tenor)
    if m is None:
        raise ValueError(f"bad tenor {tenor!r}")
    n, unit = int(m.group(1)), m.group(2).lower()
    return n * {"d": 1 / 365, "w": 7 / 365, "m": 1 / 12, "y": 1.0}[unit]


def add_tenor(d: date, tenor: str, roll: Roll = Roll.MODIFIED_FOLLOWING) -> date:
    return adjust(d + parse_tenor(tenor), roll)


def year_fraction(d1: date, d2: date, dc: DayCount) -> float:
    if d1 > d2:
        raise DomainError(f"year_fraction needs d1 <= d2, got {d1} > {d2}")
    if dc is DayCount.ACT_360:
        return (d2 - d1).days / 360.0
    if dc is DayCount.ACT_365:
        return (d2 - d1).days / 365.0
    # Eurobond basis: day 31 becomes 30 on both ends
    day1, day2 = min(d1.day, 30), min(d2.day, 30)
    days = 360 * (d2.year - d1.year) + 30 * (d2.month - d1.month) + (day2 - day1)
    return days / 360.0


@dataclass(frozen=True)
class LegSchedule:
    """Accrual start plus rolled payment dates of one swap leg.

    ``fractions[i]`` is the year fraction of the period ending at ``dates[i]``.
    """

    start: date
    dates: tuple[date, ...]
    fractions: tuple[float, ...]
    day_count: DayCount

    def __post_init__(self) -> None:
        if not self.dates:
            raise ScheduleError("empty schedule")
        if len(self.dates) != len(self.fractions):
            raise ScheduleError("dates and fractions differ in length")
        prev = self.start
        for d in self.dates:
            if d <= prev:
                raise ScheduleError("schedule dates must be strictly increasing")
            prev = d
        if any(f <= 0.0 for f in self.fractions):
            raise ScheduleError("year fractions must be positive")

    @property
    def end(self) -> date:
        return self.dates[-1]

    @property
    def accrual_starts(self) -> tuple[date, ...]:
        return (self.start,) + self.dates[:-1]

    def __len__(self) -> int:
        return len(self.dates)


def build_schedule(
    start: date,
    end: date,
    frequency: int,
    dc: DayCount,
    roll: Roll = Roll.MODIFIED_FOLLOWING,
) -> LegSchedule:
    """Generate a schedule backward from ``end`` in steps of ``frequency`` months.

    ``start`` and ``end`` are unadjusted; every generated date, including the
    accrual start, is rolled with ``roll``.
    """
    if start >= end:
        raise ScheduleError(f"schedule start {start} not before end {end}")
    if frequency <= 0:
        raise ScheduleError("frequency must be a positive number of months")
    months = (end.year - start.year) * 12 + (end.month - start.month)
    n, rem = divmod(months, frequency)
    if rem or n == 0 or end - relativedelta(months=n * frequency) != start:
        raise ScheduleError(
            f"{start}..{end} is not a whole number of {frequency}m periods"
        )
    unadjusted = [end - relativedelta(months=k * frequency) for k in range(n, -1, -1)]
    rolled = [adjust(d, roll) for d in unadjusted]
    fractions = tuple(year_fraction(a, b, dc) for a, b in zip(rolled[:-1], rolled[1:]))
    return LegSchedule(rolled[0], tuple(rolled[1:]), fractions, dc)
