from datetime import date

import pytest

from multicurve_hw.cli import DEFAULT_DATA
from multicurve_hw.curves import bootstrap_discount, bootstrap_pseudo, load_quotes

VALUE_DATE = date(2015, 9, 10)
SPOT = date(2015, 9, 14)
FITTED = (0.1331, 0.0127, 0.0006)


@pytest.fixture(scope="session")
def quotes():
    return load_quotes(DEFAULT_DATA)


@pytest.fixture(scope="session")
def disc(quotes):
    return bootstrap_discount(quotes, VALUE_DATE)


@pytest.fixture(scope="session")
def pseudo(quotes, disc):
    return bootstrap_pseudo(quotes, disc, VALUE_DATE)


@pytest.fixture(scope="session")
def vol_quotes():
    from multicurve_hw.market import load_vols

    return load_vols(DEFAULT_DATA / "swaption_vols.csv")


@pytest.fixture(scope="session")
def market_problem(disc, pseudo, vol_quotes):
    from multicurve_hw.calib import diagonal_problem

    return diagonal_problem(disc, pseudo, vol_quotes)


@pytest.fixture(scope="session")
def market_fit(market_problem):
    from multicurve_hw.calib import calibrate

    return calibrate(market_problem)
