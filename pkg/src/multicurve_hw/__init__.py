"""Multicurve Hull-White model: dual-curve bootstrap, closed-form European
swaptions, normal market formulas, calibration and Monte Carlo validation."""

from .curves import (
    Conventions,
    Curve,
    PseudoCurve,
    QuoteSet,
    bootstrap_discount,
    bootstrap_pseudo,
    bpv,
    floating_leg_value,
    forward_discount,
    load_quotes,
    spread,
    swap_rate,
)
from .mhw import MhwParams, Side, SwaptionSpec, make_swaption, price_swaption

__all__ = [
    "Conventions",
    "Curve",
    "MhwParams",
    "PseudoCurve",
    "QuoteSet",
    "Side",
    "SwaptionSpec",
    "bootstrap_discount",
    "bootstrap_pseudo",
    "bpv",
    "floating_leg_value",
    "forward_discount",
    "load_quotes",
    "make_swaption",
    "price_swaption",
    "spread",
    "swap_rate",
]
