"""Domain types and the time/index conventions shared by the engine.

Paths are stored as arrays indexed by step number: ``path[..., i]`` holds the
sample with index ``i``, where index ``n + 1`` is the valuation date and index
``0`` is maturity. Calendar time therefore *increases* as the index decreases.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class ValidationError(ValueError):
    """Raised when inputs violate one or more invariants.

    ``errors`` holds one short message per violated invariant.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ModelParams:
    """Stochastic-volatility parameter set.

    The variance follows ``dV = (lam + mu V) dt + xi V**alpha dZ2`` under the
    pricing measure, correlated with the log-price driver ``Z1`` through
    ``rho``. ``k`` is the physical-measure reversion rate of the variance
    SDE; it is carried for completeness and does not enter pricing.
    """

    r: float = 0.0
    mu: float = 0.0
    xi: float = 0.5
    rho: float = 0.0
    lam: float = 0.0
    k: float = 0.0
    alpha: float = 1.0

    @property
    def log_variance_drift(self) -> float:
        """Drift of ``y = ln V`` when ``alpha = 1`` and ``lam = 0``."""
        return self.mu - 0.5 * self.xi * self.xi

    @property
    def is_lognormal_variance(self) -> bool:
        return self.alpha == 1.0 and self.lam == 0.0

    def replace(self, **changes) -> "ModelParams":
        fields = {**self.__dict__, **changes}
        return ModelParams(**fields)


def validate(params: ModelParams) -> list[str]:
    """Return every violated parameter invariant (empty list means valid)."""
    errors = []
    values = dict(params.__dict__)
    for name, value in values.items():
        if not math.isfinite(value):
            errors.append(f"{name} must be finite")
    if not params.xi > 0:
        errors.append("xi>0")
    if not -1.0 < params.rho < 1.0:
        errors.append("|rho|<1")
    if not params.alpha > 0:
        errors.append("alpha>0")
    # lam < 0 lets the drift push V through zero
    if params.lam < 0:
        errors.append("lam>=0 (variance positivity)")
    return errors


def check(params: ModelParams) -> ModelParams:
    errors = validate(params)
    if errors:
        raise ValidationError(errors)
    return params


@dataclass(frozen=True)
class MarketState:
    spot_log_price: float
    spot_log_variance: float

    def __post_init__(self):
        if not (math.isfinite(self.spot_log_price) and math.isfinite(self.spot_log_variance)):
            raise ValidationError(["market state must be finite"])

    @classmethod
    def from_levels(cls, spot: float, variance: float) -> "MarketState":
        if spot <= 0 or variance <= 0:
            raise ValidationError(["spot>0 and variance>0"])
        return cls(math.log(spot), math.log(variance))

    @property
    def spot(self) -> float:
        return math.exp(self.spot_log_price)

    @property
    def variance(self) -> float:
        return math.exp(self.spot_log_variance)


class PayoffKind(str, enum.Enum):
    EUROPEAN_CALL = "european_call"
    EUROPEAN_PUT = "european_put"
    ASIAN_ARITHMETIC_CALL = "asian_arithmetic_call"
    ASIAN_GEOMETRIC_CALL = "asian_geometric_call"
    LOOKBACK_FIXED_CALL = "lookback_fixed_call"
    UP_AND_OUT_CALL = "up_and_out_call"
    CUSTOM = "custom"


# vectorised trajectory functional: log prices (..., n+2) -> payoffs (...)
PayoffFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Contract:
    """A European, possibly path-dependent, contract.

    For ``CUSTOM`` the strike is informational only and ``custom_payoff``
    receives log-price arrays of shape ``(..., n + 2)`` in index order.
    """

    kind: PayoffKind
    strike: float
    maturity: float
    barrier: float | None = None
    custom_payoff: PayoffFunction | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", PayoffKind(self.kind))
        errors = []
        if not self.strike > 0:
            errors.append("strike>0")
        if not self.maturity > 0:
            errors.append("maturity>0")
        if self.kind is PayoffKind.UP_AND_OUT_CALL:
            if self.barrier is None:
                errors.append("barrier required for up_and_out_call")
            elif not self.barrier > 0:
                errors.append("barrier>0")
        if self.kind is PayoffKind.CUSTOM and self.custom_payoff is None:
            errors.append("custom_payoff required for custom kind")
        if errors:
            raise ValidationError(errors)

    def with_strike(self, strike: float) -> "Contract":
        return Contract(self.kind, strike, self.maturity, self.barrier, self.custom_payoff)


@dataclass(frozen=True)
class GridSpec:
    n: int = 32
    y0_nodes: int = 101
    y0_halfwidth_sigmas: float = 6.0
    rule: str = "trapezoid"

    def __post_init__(self):
        errors = []
        if self.n < 1:
            errors.append("n>=1")
        if self.y0_nodes < 3 or self.y0_nodes % 2 == 0:
            errors.append("y0_nodes>=3 and odd")
        if not self.y0_halfwidth_sigmas > 0:
            errors.append("y0_halfwidth_sigmas>0")
        if self.rule not in ("trapezoid", "simpson"):
            errors.append("rule in {trapezoid, simpson}")
        if errors:
            raise ValidationError(errors)


@dataclass(frozen=True)
class McConfig:
    variance_paths: int = 1000
    price_paths: int = 10
    seed: int = 0
    antithetic: bool = False

    def __post_init__(self):
        errors = []
        if self.variance_paths < 1 or self.price_paths < 1:
            errors.append("path counts >= 1")
        if self.antithetic and (self.variance_paths % 2 or self.price_paths % 2):
            errors.append("antithetic sampling needs even path counts")
        if not 0 <= self.seed < 2**64:
            errors.append("seed must fit in 64 bits")
        if errors:
            raise ValidationError(errors)


@dataclass
class Trajectory:
    """A joint (log-variance, log-price) path; arrays indexed by step number."""

    log_variance: np.ndarray
    log_price: np.ndarray

    def __post_init__(self):
        self.log_variance = np.asarray(self.log_variance, dtype=float)
        self.log_price = np.asarray(self.log_price, dtype=float)
        if self.log_variance.shape[-1] != self.log_price.shape[-1]:
            raise ValidationError(["log_variance and log_price lengths differ"])

    @property
    def n(self) -> int:
        return self.log_price.shape[-1] - 2

    @property
    def at_maturity(self) -> np.ndarray:
        return self.log_price[..., 0]

    def calendar_order(self) -> tuple[np.ndarray, np.ndarray]:
        """Both paths reordered so that calendar time increases."""
        return self.log_variance[..., ::-1], self.log_price[..., ::-1]


@dataclass
class PriceResult:
    price: float
    std_error: float
    n_evaluations: int
    diagnostics: dict = field(default_factory=dict)


def step_size(maturity: float, n: int) -> float:
    return maturity / (n + 1)


def time_grid(maturity: float, n: int) -> np.ndarray:
    """Calendar time of each index, computed directly (no accumulation)."""
    idx = np.arange(n + 2)
    t = maturity * (n + 1 - idx) / (n + 1)
    t[0] = maturity
    t[-1] = 0.0
    return t
