"""Implied-volatility smiles from a priced strike strip.

Level and slope come from a least-squares line through (strike, implied vol).
Their standard errors are propagated from the price covariance of the strip
to first order: ``d iv = d price / vega`` at each strike.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import pricer, reference
from .model import Contract, GridSpec, MarketState, McConfig, ModelParams, PayoffKind


@dataclass(frozen=True)
class SmileFit:
    strikes: np.ndarray
    implied_vols: np.ndarray
    iv_std_errors: np.ndarray
    level: float
    level_se: float
    slope: float
    slope_se: float


def fit_smile(strikes, strip: pricer.StripResult, spot: float, r: float, maturity: float) -> SmileFit:
    strikes = np.asarray(strikes, dtype=float)
    ivs = np.array([reference.implied_vol(p, spot, K, r, maturity) for p, K in zip(strip.prices, strikes)])
    vega = reference.bs_vega(spot, strikes, r, ivs, maturity)
    jac = np.diag(1.0 / vega)
    iv_cov = jac @ strip.covariance @ jac
    centred = strikes - strikes.mean()
    slope_w = centred / np.sum(centred**2)
    level_w = np.full(len(strikes), 1.0 / len(strikes))
    return SmileFit(
        strikes=strikes,
        implied_vols=ivs,
        iv_std_errors=np.sqrt(np.diag(iv_cov)),
        level=float(level_w @ ivs),
        level_se=float(np.sqrt(level_w @ iv_cov @ level_w)),
        slope=float(slope_w @ ivs),
        slope_se=float(np.sqrt(slope_w @ iv_cov @ slope_w)),
    )


def smile(strikes, state: MarketState, params: ModelParams, grid: GridSpec, mc: McConfig,
          maturity: float = 1.0, *, threads: int = 1) -> SmileFit:
    """Price European calls at ``strikes`` on common paths and fit the smile."""
    contracts = [Contract(PayoffKind.EUROPEAN_CALL, K, maturity) for K in strikes]
    strip = pricer.price_strip(contracts, state, params, grid, mc, threads=threads)
    return fit_smile(strikes, strip, state.spot, params.r, maturity)
