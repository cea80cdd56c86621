"""Command-line front end.

Configuration is a flat ``key = value`` text file (``#`` starts a comment)
plus ``--set key=value`` overrides. Subcommands:

    price    price one contract
    smile    implied-volatility smile over a strike grid (optionally swept
             over one model parameter, one CSV per value)
    compare  path-integral vs sequential vs Euler vs Black-Scholes
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import payoff, pricer, reference
from .model import (
    Contract,
    GridSpec,
    MarketState,
    McConfig,
    ModelParams,
    PayoffKind,
    ValidationError,
    check,
)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SMILE_COLUMNS = ["strike", "price", "std_error", "implied_vol", "flag"]
COMPARE_KINDS = [k.value for k in payoff.CALL_KINDS]
SWEEPABLE = ("mu", "k", "rho", "xi", "r")


class ConfigError(Exception):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def load_config(path: str | None, overrides: list[str]) -> dict[str, str]:
    cfg = {}
    if path:
        try:
            cfg.update(parse_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        cfg[key] = value
    return cfg


def _float(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"{key}: not a number: {cfg[key]!r}") from None


def _int(cfg, key, default=None):
    value = _float(cfg, key, default)
    if value != int(value):
        raise ConfigError(f"{key}: expected an integer")
    return int(value)


def _bool(cfg, key, default=False):
    if key not in cfg:
        return default
    v = cfg[key].lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean")


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers") from None


def build_params(cfg) -> ModelParams:
    lam = cfg.get("lambda", cfg.get("lam", "0"))
    return ModelParams(
        r=_float(cfg, "r", 0.0),
        mu=_float(cfg, "mu", 0.0),
        xi=_float(cfg, "xi"),
        rho=_float(cfg, "rho", 0.0),
        lam=_float({"lam": lam}, "lam"),
        k=_float(cfg, "k", 0.0),
        alpha=_float(cfg, "alpha", 1.0),
    )


def build_state(cfg) -> MarketState:
    if "spot_log_price" in cfg:
        x = _float(cfg, "spot_log_price")
    elif "spot" in cfg:
        spot = _float(cfg, "spot")
        if spot <= 0:
            raise ConfigError("spot must be positive")
        x = math.log(spot)
    else:
        raise ConfigError("missing required key 'spot' (or 'spot_log_price')")
    if "spot_log_variance" in cfg:
        y = _float(cfg, "spot_log_variance")
    else:
        v0 = _float(cfg, "v0")
        if v0 <= 0:
            raise ConfigError("v0 must be positive")
        y = math.log(v0)
    return MarketState(x, y)


def build_contract(cfg, kind: str | None = None, strike: float | None = None) -> Contract:
    kind = kind or cfg.get("kind", "european_call")
    strike = _float(cfg, "strike") if strike is None else strike
    maturity = _float(cfg, "maturity", 1.0)
    if kind == "const1":
        return payoff.custom(payoff.constant(1.0), strike, maturity)
    if kind == "forward":
        return payoff.custom(payoff.forward(strike), strike, maturity)
    try:
        pk = PayoffKind(kind)
    except ValueError:
        raise ConfigError(f"unknown payoff kind {kind!r}") from None
    if pk is PayoffKind.CUSTOM:
        raise ConfigError("custom payoffs are library-only; use const1 or forward")
    barrier = _float(cfg, "barrier") if pk is PayoffKind.UP_AND_OUT_CALL else None
    return Contract(pk, strike, maturity, barrier)


def build_grid(cfg) -> GridSpec:
    return GridSpec(
        n=_int(cfg, "n", 32),
        y0_nodes=_int(cfg, "y0_nodes", 101),
        y0_halfwidth_sigmas=_float(cfg, "y0_halfwidth_sigmas", 6.0),
        rule=cfg.get("rule", "trapezoid"),
    )


def build_mc(cfg) -> McConfig:
    if "seed" not in cfg:
        raise ConfigError("missing required key 'seed'")
    return McConfig(
        variance_paths=_int(cfg, "variance_paths", 1000),
        price_paths=_int(cfg, "price_paths", 10),
        seed=_int(cfg, "seed"),
        antithetic=_bool(cfg, "antithetic"),
    )


def _setup(cfg):
    params = check(build_params(cfg))
    return params, build_state(cfg), build_grid(cfg), build_mc(cfg)


def fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{value:.12g}"


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_price(cfg, out=None, fmt_name="csv", threads=1) -> int:
    params, state, grid, mc = _setup(cfg)
    contract = build_contract(cfg)
    t0 = time.perf_counter()
    res = pricer.price(contract, state, params, grid, mc, threads=threads)
    wall = time.perf_counter() - t0
    record = {
        "kind": cfg.get("kind", "european_call"),
        "price": res.price,
        "std_error": res.std_error,
        "n": grid.n,
        "y0_nodes": grid.y0_nodes,
        "variance_paths": mc.variance_paths,
        "price_paths": mc.price_paths,
        "n_evaluations": res.n_evaluations,
        "wall_seconds": wall,
    }
    for key, value in record.items():
        print(f"{key:15s} {value if isinstance(value, str) else fmt(value)}")
    if out or fmt_name == "json":
        text = json.dumps(record, indent=2) + "\n"
        if out:
            Path(out).write_text(text)
        else:
            sys.stdout.write(text)
    return 0


def smile_rows(cfg, threads=1) -> list[dict]:
    """Price a strike grid on common paths and invert each price."""
    params, state, grid, mc = _setup(cfg)
    strikes = strike_grid(cfg)
    kind = cfg.get("kind", "european_call")
    if kind not in ("european_call", "european_put"):
        raise ConfigError("smile needs kind european_call or european_put")
    contracts = [build_contract(cfg, kind, K) for K in strikes]
    strip = pricer.price_strip(contracts, state, params, grid, mc, threads=threads)
    rows = []
    for K, res in zip(strikes, strip.results):
        try:
            iv = reference.implied_vol(res.price, state.spot, K, params.r, contracts[0].maturity,
                                       kind == "european_call")
            flag = "ok"
        except reference.ImpliedVolError:
            iv, flag = float("nan"), "no_iv"
        rows.append({"strike": K, "price": res.price, "std_error": res.std_error,
                     "implied_vol": iv, "flag": flag})
    return rows


def strike_grid(cfg) -> list[float]:
    if "strikes" in cfg:
        strikes = _floats(cfg["strikes"], "strikes")
    else:
        lo, hi = _float(cfg, "strike_min", 0.8), _float(cfg, "strike_max", 1.2)
        count = _int(cfg, "strike_count", 9)
        strikes = list(np.linspace(lo, hi, count))
    if not strikes or min(strikes) <= 0:
        raise ConfigError("strikes must be positive")
    return strikes


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row[c] if isinstance(row[c], str) else fmt(row[c]) for c in columns])
    return buf.getvalue()


def rows_to_json(rows) -> str:
    clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()} for r in rows]
    return json.dumps(clean, indent=2) + "\n"


def _render(rows, columns, fmt_name):
    return rows_to_json(rows) if fmt_name == "json" else rows_to_csv(rows, columns)


def cmd_smile(cfg, out=None, fmt_name="csv", threads=1) -> int:
    if "sweep_key" in cfg:
        key = cfg["sweep_key"]
        if key not in SWEEPABLE:
            raise ConfigError(f"sweep_key must be one of {SWEEPABLE}")
        if not out:
            raise ConfigError("a sweep writes one file per value and needs --out")
        values = _floats(cfg.get("sweep_values", ""), "sweep_values")
        if not values:
            raise ConfigError("sweep_values is empty")
        base = Path(out)
        status = 0
        for value in values:
            sub = {k: v for k, v in cfg.items() if k not in ("sweep_key", "sweep_values")}
            sub[key] = repr(value)
            target = base.with_name(f"{base.stem}_{key}_{fmt(value)}{base.suffix}")
            status = max(status, cmd_smile(sub, str(target), fmt_name, threads))
        return status
    rows = smile_rows(cfg, threads)
    _emit(_render(rows, SMILE_COLUMNS, fmt_name), out)
    if all(r["flag"] != "ok" for r in rows):
        print("error: implied volatility could not be inverted at any strike", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


def _agree(a, sa, b, sb) -> bool:
    return abs(a - b) <= 3.0 * math.hypot(sa, sb) + 1e-12


COMPARE_COLUMNS = [
    "payoff", "pathint", "pathint_se", "sequential", "sequential_se", "euler", "euler_se",
    "bs", "agree_sequential", "agree_euler", "agree_bs",
]


def compare_rows(cfg, threads=1) -> list[dict]:
    params, state, grid, mc = _setup(cfg)
    kinds = [s.strip() for s in cfg.get("payoffs", ",".join(COMPARE_KINDS)).split(",") if s.strip()]
    contracts = [build_contract(cfg, kind) for kind in kinds]
    path = pricer.price_strip(contracts, state, params, grid, mc, threads=threads)
    seq = pricer.price_sequential_strip(contracts, state, params, grid, mc, threads=threads)
    euler = reference.euler_strip(
        contracts, state, params, _int(cfg, "euler_steps", 250), _int(cfg, "euler_paths", 100_000),
        mc.seed, monitor=grid.n + 1, threads=threads,
    )
    rows = []
    for kind, c, p, s, e in zip(kinds, contracts, path.results, seq.results, euler.results):
        bs = None
        if kind in ("european_call", "european_put"):
            bs = reference.bs_price(state.spot, c.strike, params.r, math.sqrt(state.variance), c.maturity,
                                    kind == "european_call")
        rows.append({
            "payoff": kind,
            "pathint": p.price, "pathint_se": p.std_error,
            "sequential": s.price, "sequential_se": s.std_error,
            "euler": e.price, "euler_se": e.std_error,
            "bs": "N/A" if bs is None else bs,
            "agree_sequential": "pass" if _agree(p.price, p.std_error, s.price, s.std_error) else "FAIL",
            "agree_euler": "pass" if _agree(p.price, p.std_error, e.price, e.std_error) else "FAIL",
            "agree_bs": "N/A" if bs is None else ("pass" if _agree(p.price, p.std_error, bs, 0.0) else "FAIL"),
        })
    return rows


def cmd_compare(cfg, out=None, fmt_name="csv", threads=1) -> int:
    rows = compare_rows(cfg, threads)
    _emit(_render(rows, COMPARE_COLUMNS, fmt_name), out)
    return 0


COMMANDS = {"price": cmd_price, "smile": cmd_smile, "compare": cmd_compare}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svpath", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        return COMMANDS[args.command](cfg, args.out, args.format, max(1, args.threads))
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
