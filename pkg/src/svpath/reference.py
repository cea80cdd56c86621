"""Independent oracles: Black-Scholes, implied volatility, and an
Euler-Maruyama simulator of the original SDE pair."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtr

from . import payoff
from .model import Contract, MarketState, ModelParams, PriceResult, check
from .pricer import StripResult
from .streams import EULER, stream


class ImpliedVolError(ValueError):
    """Price lies outside the band where Black-Scholes can be inverted."""


def bs_price(spot, strike, r, sigma, maturity, is_call=True):
    if np.any(np.asarray(spot) <= 0) or np.any(np.asarray(strike) <= 0):
        raise ValueError("spot and strike must be positive")
    if np.any(np.asarray(sigma) <= 0) or np.any(np.asarray(maturity) <= 0):
        raise ValueError("sigma and maturity must be positive")
    sd = sigma * np.sqrt(maturity)
    df = np.exp(-r * maturity)
    d1 = (np.log(spot / strike) + r * maturity) / sd + 0.5 * sd
    d2 = d1 - sd
    if is_call:
        out = spot * ndtr(d1) - strike * df * ndtr(d2)
    else:
        out = strike * df * ndtr(-d2) - spot * ndtr(-d1)
    return out if np.ndim(out) else float(out)


def bs_vega(spot, strike, r, sigma, maturity):
    sd = sigma * np.sqrt(maturity)
    d1 = (np.log(spot / strike) + r * maturity) / sd + 0.5 * sd
    return spot * np.sqrt(maturity) * np.exp(-0.5 * d1 * d1) / math.sqrt(2 * math.pi)


def no_arbitrage_band(spot, strike, r, maturity, is_call=True) -> tuple[float, float]:
    fwd_strike = strike * math.exp(-r * maturity)
    if is_call:
        return max(spot - fwd_strike, 0.0), spot
    return max(fwd_strike - spot, 0.0), fwd_strike


def implied_vol(price, spot, strike, r, maturity, is_call=True, *, tol=1e-8) -> float:
    """Black-Scholes implied volatility by bracketed root finding.

    The bracket ``[lo, hi]`` is widened geometrically until it contains the
    root; raises :class:`ImpliedVolError` for prices outside the open
    no-arbitrage band.
    """
    lower, upper = no_arbitrage_band(spot, strike, r, maturity, is_call)
    if not (lower < price < upper) or not math.isfinite(price):
        raise ImpliedVolError(f"price {price!r} outside no-arbitrage band ({lower}, {upper})")

    def f(s):
        return bs_price(spot, strike, r, s, maturity, is_call) - price

    lo, hi = 1e-3, 1.0
    while f(lo) > 0:
        lo *= 0.5
        if lo < 1e-12:
            raise ImpliedVolError("implied vol below 1e-12")
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e3:
            raise ImpliedVolError("implied vol above 1e3")
    sigma = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(sigma)) > tol:
        raise ImpliedVolError(f"root finder stalled at sigma={sigma}")
    return sigma


def _euler_chunk(contracts, state, params, maturity, substeps, monitor, size, rng):
    dt = maturity / (substeps * monitor)
    sq = math.sqrt(dt)
    rho, xi, a = params.rho, params.xi, params.alpha
    rho_c = math.sqrt(1.0 - rho * rho)
    x = np.full(size, state.spot_log_price)
    log_var = a == 1.0
    if log_var:
        v_state = np.full(size, state.spot_log_variance)
    else:
        v_state = np.full(size, state.variance)
    # monitored samples, later flipped to index order (maturity first)
    sampled = np.empty((size, monitor + 1))
    sampled[:, 0] = x
    for m in range(monitor):
        for _ in range(substeps):
            z2 = rng.standard_normal(size)
            z1 = rho * z2 + rho_c * rng.standard_normal(size)
            if log_var:
                v = np.exp(v_state)
                v_state = v_state + (params.lam / v + params.mu - 0.5 * xi * xi) * dt + xi * sq * z2
            else:
                v = np.maximum(v_state, 0.0)
                v_state = v_state + (params.lam + params.mu * v) * dt + xi * v**a * sq * z2
            x = x + (params.r - 0.5 * v) * dt + np.sqrt(v) * sq * z1
        sampled[:, m + 1] = x
    paths = sampled[:, ::-1]
    return np.stack([payoff.evaluate(c, paths) for c in contracts], axis=-1)


def euler_strip(contracts: Sequence[Contract], state: MarketState, params: ModelParams, steps: int,
                paths: int, seed: int, *, monitor: int | None = None, chunk: int = 10_000,
                threads: int = 1) -> StripResult:
    """Discounted Euler-Maruyama prices of several contracts on shared paths.

    ``monitor`` is the number of monitoring intervals seen by the payoff
    (default ``steps``). When given, the step count is rounded up to a
    multiple of it so monitoring dates fall on the simulation grid.
    """
    check(params)
    if steps < 1 or paths < 1:
        raise ValueError("steps and paths must be >= 1")
    maturities = {c.maturity for c in contracts}
    if len(maturities) != 1:
        raise ValueError("contracts priced together must share a maturity")
    maturity = maturities.pop()
    monitor = monitor or steps
    substeps = -(-steps // monitor)
    sizes = [min(chunk, paths - s) for s in range(0, paths, chunk)]

    def run(k):
        rng = stream(seed, EULER, k)
        return _euler_chunk(contracts, state, params, maturity, substeps, monitor, sizes[k], rng)

    units = range(len(sizes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, units))
    else:
        parts = [run(k) for k in units]
    h = np.concatenate(parts, axis=0)
    disc = math.exp(-params.r * maturity)
    mean = disc * h.mean(axis=0)
    if paths > 1:
        cov = disc**2 * np.atleast_2d(np.cov(h, rowvar=False, ddof=1)) / paths
    else:
        cov = np.zeros((len(contracts), len(contracts)))
    diagnostics = {"method": "euler", "steps": substeps * monitor, "monitor": monitor}
    results = [
        PriceResult(float(p), float(math.sqrt(cov[j, j])), paths, diagnostics) for j, p in enumerate(mean)
    ]
    return StripResult(results, cov)


def euler_oracle(contract: Contract, state: MarketState, params: ModelParams, steps: int, paths: int,
                 seed: int, *, monitor: int | None = None, threads: int = 1) -> PriceResult:
    return euler_strip([contract], state, params, steps, paths, seed, monitor=monitor,
                       threads=threads).results[0]
