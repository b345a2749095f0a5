"""Batch command line: bootstrap, calibrate, price, validate.

Every command reads market data from CSV files, does its arithmetic through
the library API and prints a human table. ``--out`` writes a JSON report
(keys sorted, no timestamps, so reruns are byte-identical).
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Any

import click
import tomli

from .calib import Bounds, OptimizerSettings, calibrate, diagonal_problem
from .curves import (
    Conventions,
    Curve,
    PseudoCurve,
    bootstrap_discount,
    bootstrap_pseudo,
    load_quotes,
    repricing_residuals,
    swap_rate,
)
from .errors import ConfigError, MhwError
from .market import implied_normal_vol, load_vols
from .mhw import MhwParams, Side, make_swaption, price_swaption
from .oracle import McConfig, mc_price_exact
from .temporal import DayCount, parse_date

DEFAULT_DATA = Path(__file__).parent / "data"
DEFAULT_VALUE_DATE = date(2015, 9, 10)
# default model parameters for price and validate
REFERENCE_PARAMS = MhwParams(0.1331, 0.0127, 0.0006)
VALUE_DATE_NOTE = (
    "quotes are dated 2015-09-10; a 2010 value date is rejected because "
    "negative OIS rates are consistent with 2015 only"
)


@dataclass(frozen=True)
class RunConfig:
    value_date: date = DEFAULT_VALUE_DATE
    data_dir: Path = DEFAULT_DATA
    conventions: Conventions = field(default_factory=Conventions)
    bounds: Bounds = field(default_factory=Bounds)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    starts: tuple[MhwParams, ...] = ()
    params: MhwParams = REFERENCE_PARAMS
    mc: McConfig = field(default_factory=McConfig)
    out: Path | None = None

    def __post_init__(self) -> None:
        if not Path(self.data_dir).is_dir():
            raise ConfigError(f"data directory {self.data_dir} does not exist")


def _day_count(name: str) -> DayCount:
    for dc in DayCount:
        if name.upper() in (dc.value, dc.name):
            return dc
    raise ConfigError(f"unknown day count {name!r}")


def load_config(path: str | Path | None) -> RunConfig:
    """Read a TOML run configuration; missing keys keep their defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        raw = tomli.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    kw: dict[str, Any] = {}
    try:
        if "value_date" in raw:
            vd = raw["value_date"]
            kw["value_date"] = vd if isinstance(vd, date) else parse_date(str(vd))
        if "data_dir" in raw:
            d = Path(raw["data_dir"])
            kw["data_dir"] = d if d.is_absolute() else path.parent / d
        conv = raw.get("conventions", {})
        if conv:
            if conv.get("calendar", "TARGET").upper() != "TARGET":
                raise ConfigError("only the TARGET calendar is supported")
            c = {k: v for k, v in conv.items() if k != "calendar"}
            for k in list(c):
                if k.endswith("day_count"):
                    c[k] = _day_count(c[k])
            kw["conventions"] = Conventions(**c)
        cal = raw.get("calibration", {})
        if cal:
            kw["bounds"] = Bounds(
                a=tuple(cal.get("a_bounds", Bounds.a)),
                sigma_tilde=tuple(cal.get("sigma_tilde_bounds", Bounds.sigma_tilde)),
                gamma=tuple(cal.get("gamma_bounds", Bounds.gamma)),
            )
            opt = {k: cal[k] for k in ("n_starts", "seed", "max_iter", "xatol", "fatol", "polish") if k in cal}
            kw["optimizer"] = OptimizerSettings(**opt)
            kw["starts"] = tuple(MhwParams(*s) for s in cal.get("starts", ()))
        if "params" in raw:
            kw["params"] = MhwParams(**raw["params"])
        if "validate" in raw:
            kw["mc"] = McConfig(**raw["validate"])
        if "output" in raw and "json" in raw["output"]:
            kw["out"] = Path(raw["output"]["json"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return RunConfig(**kw)


def _curves(cfg: RunConfig) -> tuple[Curve, PseudoCurve]:
    quotes = load_quotes(cfg.data_dir)
    disc = bootstrap_discount(quotes, cfg.value_date, cfg.conventions)
    return disc, bootstrap_pseudo(quotes, disc, cfg.value_date, cfg.conventions)


def _params_dict(p: MhwParams) -> dict[str, float]:
    return {"a": p.a, "sigma": p.sigma, "gamma": p.gamma}


def _header(cfg: RunConfig) -> dict[str, Any]:
    return {
        "value_date": cfg.value_date.isoformat(),
        "spot_date": cfg.conventions.spot(cfg.value_date).isoformat(),
        "note": VALUE_DATE_NOTE,
    }


def cmd_bootstrap(cfg: RunConfig) -> dict[str, Any]:
    quotes = load_quotes(cfg.data_dir)
    disc = bootstrap_discount(quotes, cfg.value_date, cfg.conventions)
    pseudo = bootstrap_pseudo(quotes, disc, cfg.value_date, cfg.conventions)
    residuals = repricing_residuals(quotes, disc, pseudo, cfg.value_date, cfg.conventions)
    return {
        **_header(cfg),
        "discount": [{"date": d.isoformat(), "df": b} for d, b in zip(disc.dates, disc.discounts)],
        "pseudo": [{"date": d.isoformat(), "df": b} for d, b in zip(pseudo.dates, pseudo.discounts)],
        "residuals": residuals,
        "max_abs_residual": max(abs(r) for r in residuals.values()),
    }


def cmd_calibrate(cfg: RunConfig) -> dict[str, Any]:
    disc, pseudo = _curves(cfg)
    quotes = load_vols(Path(cfg.data_dir) / "swaption_vols.csv")
    if not quotes:
        raise ConfigError("swaption_vols.csv lists no instruments")
    prob = diagonal_problem(disc, pseudo, quotes, cfg.bounds, cfg.optimizer, cfg.conventions)
    res = calibrate(prob, list(cfg.starts) or None)
    rows = []
    for (spec, mkt), model, label, q in zip(prob.instruments, res.model_prices, prob.labels, quotes):
        rows.append({
            "instrument": label,
            "strike": spec.strike,
            "market_price": mkt,
            "model_price": float(model),
            "market_vol_bps": q.vol * 1e4,
            "model_vol_bps": implied_normal_vol(disc, pseudo, spec, float(model)) * 1e4,
        })
    return {
        **_header(cfg),
        "params": _params_dict(res.params),
        "err2": res.err2,
        "err": res.err,
        "n_evaluations": res.n_evaluations,
        "starts": [{**_params_dict(s), "err2": e} for s, e in zip(res.starts, res.start_err2)],
        "instruments": rows,
    }


def cmd_price(
    cfg: RunConfig, expiry: str, tenor: str, strike: float | None, side: Side, params: MhwParams
) -> dict[str, Any]:
    disc, pseudo = _curves(cfg)
    spec = make_swaption(disc.ref_date, expiry, tenor, 0.0, side, cfg.conventions)
    atm = swap_rate(disc, pseudo, spec.fixed, spec.floating)
    spec = spec.with_strike(atm if strike is None else strike)
    price = price_swaption(params, disc, pseudo, spec)
    return {
        **_header(cfg),
        "instrument": f"{expiry}{tenor}",
        "side": side.value,
        "strike": spec.strike,
        "atm_strike": atm,
        "params": _params_dict(params),
        "price": price,
        "implied_vol_bps": implied_normal_vol(disc, pseudo, spec, price) * 1e4,
    }


def cmd_validate(cfg: RunConfig, params: MhwParams) -> dict[str, Any]:
    disc, pseudo = _curves(cfg)
    quotes = load_vols(Path(cfg.data_dir) / "swaption_vols.csv")
    rows = []
    for q in quotes:
        spec = make_swaption(disc.ref_date, q.expiry, q.tenor, 0.0, conventions=cfg.conventions)
        spec = spec.with_strike(swap_rate(disc, pseudo, spec.fixed, spec.floating))
        closed = price_swaption(params, disc, pseudo, spec)
        est = mc_price_exact(params, disc, pseudo, spec, cfg.mc)
        z = (est.price - closed) / est.se if est.se > 0 else 0.0
        rows.append({
            "instrument": f"{q.expiry}{q.tenor}",
            "closed_form": closed,
            "mc": est.to_dict(),
            "z": z,
            "pass": bool(est.within(closed, 3.0)),
        })
    return {
        **_header(cfg),
        "params": _params_dict(params),
        "rows": rows,
        "passed": sum(r["pass"] for r in rows),
        "total": len(rows),
    }


def _dump(report: dict[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"


def _write(report: dict[str, Any], out: Path | None) -> None:
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(_dump(report))


def _params_from(params_file: str | None, a, sigma, gamma, cfg: RunConfig) -> MhwParams:
    p = cfg.params
    if params_file:
        try:
            data = json.loads(Path(params_file).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read params file {params_file}: {exc}") from None
        p = MhwParams(**data.get("params", data))
    return MhwParams(
        p.a if a is None else a, p.sigma if sigma is None else sigma, p.gamma if gamma is None else gamma
    )


def _common(f):
    f = click.option("--out", type=click.Path(dir_okay=False), help="JSON report path.")(f)
    f = click.option("--data", type=click.Path(file_okay=False), help="Directory with the CSV inputs.")(f)
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False), help="TOML run configuration.")(f)
    return f


def _resolve(config_path, data, out) -> RunConfig:
    cfg = load_config(config_path)
    if data is not None:
        cfg = replace(cfg, data_dir=Path(data))
    if out is not None:
        cfg = replace(cfg, out=Path(out))
    return cfg


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except MhwError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)


@click.group(cls=_Group)
def main() -> None:
    """Multicurve Hull-White swaption toolkit."""


@main.command()
@_common
def bootstrap(config_path, data, out):
    """Bootstrap OIS discount and Euribor-6m pseudo-discount curves."""
    cfg = _resolve(config_path, data, out)
    rep = cmd_bootstrap(cfg)
    click.echo(f"spot {rep['spot_date']}")
    click.echo(f"{'date':<12}{'discount':>14}")
    for row in rep["discount"]:
        click.echo(f"{row['date']:<12}{row['df']:>14.10f}")
    click.echo(f"{'date':<12}{'pseudo':>14}")
    for row in rep["pseudo"]:
        click.echo(f"{row['date']:<12}{row['df']:>14.10f}")
    click.echo(f"max |repricing residual| = {rep['max_abs_residual']:.3e}")
    _write(rep, cfg.out)


@main.command("calibrate")
@_common
@click.option("--seed", type=int, help="Seed for random starting points.")
def calibrate_cmd(config_path, data, out, seed):
    """Fit (a, sigma, gamma) to the ATM diagonal swaptions."""
    cfg = _resolve(config_path, data, out)
    if seed is not None:
        cfg = replace(cfg, optimizer=replace(cfg.optimizer, seed=seed))
    rep = cmd_calibrate(cfg)
    p = rep["params"]
    click.echo(f"a = {p['a']:.4%}  sigma = {p['sigma']:.4%}  gamma = {p['gamma']:.4%}  Err = {rep['err']:.4e}")
    click.echo(f"{'swaption':<10}{'market %':>12}{'model %':>12}{'mkt bps':>10}{'mdl bps':>10}")
    for r in rep["instruments"]:
        click.echo(
            f"{r['instrument']:<10}{100 * r['market_price']:>12.5f}{100 * r['model_price']:>12.5f}"
            f"{r['market_vol_bps']:>10.2f}{r['model_vol_bps']:>10.2f}"
        )
    _write(rep, cfg.out)
    if cfg.out is not None:
        fig = cfg.out.with_name(cfg.out.stem + "_prices.csv")
        with fig.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["instrument", "market_price", "model_price"])
            for r in rep["instruments"]:
                w.writerow([r["instrument"], repr(r["market_price"]), repr(r["model_price"])])


@main.command()
@_common
@click.option("--expiry", default="1y", show_default=True)
@click.option("--tenor", default="9y", show_default=True)
@click.option("--strike", type=float, help="Decimal strike; ATM when omitted.")
@click.option("--side", type=click.Choice(["receiver", "payer"]), default="receiver", show_default=True)
@click.option("--params", "params_file", type=click.Path(dir_okay=False), help="JSON with a, sigma, gamma (e.g. a calibrate report).")
@click.option("--a", type=float)
@click.option("--sigma", type=float)
@click.option("--gamma", type=float)
def price(config_path, data, out, expiry, tenor, strike, side, params_file, a, sigma, gamma):
    """Closed-form price and normal implied vol of one swaption."""
    cfg = _resolve(config_path, data, out)
    params = _params_from(params_file, a, sigma, gamma, cfg)
    rep = cmd_price(cfg, expiry, tenor, strike, Side(side), params)
    click.echo(
        f"{rep['instrument']} {rep['side']} K={rep['strike']:.6%}  price={rep['price']:.10f}  "
        f"implied vol={rep['implied_vol_bps']:.4f} bps"
    )
    _write(rep, cfg.out)


@main.command()
@_common
@click.option("--seed", type=int, help="Monte Carlo seed.")
@click.option("--draws", type=int, help="Monte Carlo draws per swaption.")
@click.option("--params", "params_file", type=click.Path(dir_okay=False))
def validate(config_path, data, out, seed, draws, params_file):
    """Compare closed-form prices against the Monte Carlo oracle."""
    cfg = _resolve(config_path, data, out)
    mc = cfg.mc
    if seed is not None:
        mc = replace(mc, seed=seed)
    if draws is not None:
        mc = replace(mc, draws=draws)
    cfg = replace(cfg, mc=mc)
    params = _params_from(params_file, None, None, None, cfg)
    rep = cmd_validate(cfg, params)
    click.echo(f"{'swaption':<10}{'closed form':>14}{'MC':>14}{'SE':>12}{'z':>8}  ok")
    for r in rep["rows"]:
        click.echo(
            f"{r['instrument']:<10}{r['closed_form']:>14.8f}{r['mc']['price']:>14.8f}"
            f"{r['mc']['se']:>12.3e}{r['z']:>8.2f}  {'PASS' if r['pass'] else 'FAIL'}"
        )
    click.echo(f"{rep['passed']}/{rep['total']} within 3 SE")
    _write(rep, cfg.out)


if __name__ == "__main__":
    main()
