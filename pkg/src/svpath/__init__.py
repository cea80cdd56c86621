"""Path-integral pricing of path-dependent European options under
lognormal stochastic volatility."""

from .bridge import build_spectral, bridge_coefficients, sample_variance_path
from .model import (
    Contract,
    GridSpec,
    MarketState,
    McConfig,
    ModelParams,
    PayoffKind,
    PriceResult,
    Trajectory,
    ValidationError,
    validate,
)
from .pricer import chi, price, price_sequential, price_sequential_strip, price_strip
from .reference import bs_price, euler_oracle, implied_vol

__all__ = [
    "Contract",
    "GridSpec",
    "MarketState",
    "McConfig",
    "ModelParams",
    "PayoffKind",
    "PriceResult",
    "Trajectory",
    "ValidationError",
    "bridge_coefficients",
    "bs_price",
    "build_spectral",
    "chi",
    "euler_oracle",
    "implied_vol",
    "price",
    "price_sequential",
    "price_sequential_strip",
    "price_strip",
    "sample_variance_path",
    "validate",
]
