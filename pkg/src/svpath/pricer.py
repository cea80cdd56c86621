"""Path-integral pricer: quadrature over the terminal log-variance, Monte
Carlo over variance bridges and conditional log-price paths.

The price is

    e^{-r tau} * integral dy0  w(y0) chi(y0)

where ``w`` is the bridge endpoint weight (the density of the maturity
log-variance) and ``chi(y0)`` is the expected payoff over paths whose
log-variance is pinned to ``y0`` at maturity. ``price_sequential`` estimates
the same quantity by plain forward simulation and serves as a cross-check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernel, payoff
from .bridge import SpectralBridge, bridge_coefficients, build_spectral, sample_variance_path
from .model import (
    Contract,
    GridSpec,
    MarketState,
    McConfig,
    ModelParams,
    PriceResult,
    ValidationError,
    check,
    step_size,
)
from .streams import PATH_INTEGRAL, SEQUENTIAL, stream


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray


@dataclass
class StripResult:
    """Prices of several contracts estimated on shared paths.

    ``covariance`` is the estimated covariance matrix of the price
    estimators; its diagonal holds the squared standard errors.
    """

    results: list[PriceResult]
    covariance: np.ndarray

    @property
    def prices(self) -> np.ndarray:
        return np.array([r.price for r in self.results])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([r.std_error for r in self.results])


def quadrature_rule(lo: float, hi: float, count: int, rule: str = "trapezoid") -> QuadratureRule:
    if count < 3 or count % 2 == 0:
        raise ValueError("node count must be odd and >= 3")
    nodes = np.linspace(lo, hi, count)
    h = (hi - lo) / (count - 1)
    if rule == "trapezoid":
        w = np.full(count, h)
        w[0] = w[-1] = 0.5 * h
    elif rule == "simpson":
        w = np.ones(count)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= h / 3.0
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return QuadratureRule(nodes, w)


def terminal_rule(state: MarketState, params: ModelParams, grid: GridSpec, maturity: float) -> QuadratureRule:
    """Nodes for the maturity log-variance, centred on its unconditional law."""
    centre = state.spot_log_variance + params.log_variance_drift * maturity
    half = grid.y0_halfwidth_sigmas * params.xi * math.sqrt(maturity)
    return quadrature_rule(centre - half, centre + half, grid.y0_nodes, grid.rule)


def _require_pricable(params: ModelParams):
    check(params)
    if not params.is_lognormal_variance:
        raise ValidationError(["path-integral pricer requires alpha=1 and lam=0"])


def _maturity(contracts: Sequence[Contract]) -> float:
    maturities = {c.maturity for c in contracts}
    if len(maturities) != 1:
        raise ValueError("contracts priced together must share a maturity")
    return maturities.pop()


def _normals(rng, shape, antithetic: bool, axis: int) -> np.ndarray:
    """Standard normals; with ``antithetic`` the second half along ``axis``
    mirrors the first."""
    if not antithetic:
        return rng.standard_normal(shape)
    half = list(shape)
    half[axis] //= 2
    z = rng.standard_normal(tuple(half))
    return np.concatenate([z, -z], axis=axis)


def simulate_log_prices(log_var, x_today: float, eps: float, params: ModelParams, price_paths: int,
                        rng, antithetic: bool = False) -> np.ndarray:
    """Log-price paths conditional on given log-variance paths.

    ``log_var`` has shape ``(P, n + 2)``; returns ``(P, price_paths, n + 2)``
    in index order with ``x[..., n + 1] = x_today``.
    """
    y_next = log_var[:, 1:]
    dy = log_var[:, :-1] - y_next
    law = kernel.conditional_price_step(0.0, y_next, dy, eps, params)
    P, steps = y_next.shape
    w = _normals(rng, (P, price_paths, steps), antithetic, axis=1)
    incr = law.mean[:, None, :] + law.std[:, None, :] * w
    x = np.empty((P, price_paths, steps + 1))
    x[..., steps] = x_today
    x[..., :steps] = x_today + np.cumsum(incr[..., ::-1], axis=-1)[..., ::-1]
    return x


def _path_averages(contracts: Sequence[Contract], x: np.ndarray) -> np.ndarray:
    """Payoff averaged over the price paths of each variance path: (P, k)."""
    return np.stack([np.mean(payoff.evaluate(c, x), axis=-1) for c in contracts], axis=-1)


def _mean_and_cov(h: np.ndarray, antithetic: bool) -> tuple[np.ndarray, np.ndarray]:
    if antithetic:
        half = h.shape[0] // 2
        h = 0.5 * (h[:half] + h[half:])
    k = h.shape[1]
    mean = h.mean(axis=0)
    if h.shape[0] < 2:
        # not estimable from a single sample
        return mean, np.zeros((k, k))
    cov = np.atleast_2d(np.cov(h, rowvar=False, ddof=1)) / h.shape[0]
    return mean, cov


def _chi_many(y0, contracts, state, params, grid, mc, spectral, rng):
    maturity = _maturity(contracts)
    n = grid.n
    eps = step_size(maturity, n)
    y_today = state.spot_log_variance
    coeffs = bridge_coefficients(y_today, y0, grid, params, spectral, maturity)
    zeta = _normals(rng, (mc.variance_paths, n), mc.antithetic, axis=0)
    y = sample_variance_path(zeta, coeffs, spectral, grid, params, y_today, y0, maturity)
    x = simulate_log_prices(y, state.spot_log_price, eps, params, mc.price_paths, rng, mc.antithetic)
    mean, cov = _mean_and_cov(_path_averages(contracts, x), mc.antithetic)
    return mean, cov, coeffs.endpoint_weight_log


def chi(y0: float, state: MarketState, params: ModelParams, contract: Contract, grid: GridSpec,
        mc: McConfig, spectral: SpectralBridge | None = None, *, node: int = 0, rng=None):
    """Monte-Carlo estimate of the conditional expected payoff at ``y0``.

    Returns ``(mean, variance_of_mean)``. ``rng`` may be any object with a
    numpy-style ``standard_normal(shape)``; by default the counter-based
    stream for ``(mc.seed, node)`` is used. The variance is reported as 0
    when only one variance path is drawn.
    """
    _require_pricable(params)
    spectral = spectral or build_spectral(grid.n)
    if rng is None:
        rng = stream(mc.seed, PATH_INTEGRAL, node)
    mean, cov, _ = _chi_many(y0, [contract], state, params, grid, mc, spectral, rng)
    return float(mean[0]), float(cov[0, 0])


def _run(fn, units, threads: int):
    if threads <= 1:
        return [fn(u) for u in units]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, units))


def _strip(prices, cov, n_eval, diagnostics) -> StripResult:
    results = [
        PriceResult(price=float(p), std_error=float(math.sqrt(max(cov[j, j], 0.0))),
                    n_evaluations=n_eval, diagnostics=diagnostics)
        for j, p in enumerate(prices)
    ]
    return StripResult(results, cov)


def price_strip(contracts: Sequence[Contract], state: MarketState, params: ModelParams, grid: GridSpec,
                mc: McConfig, *, threads: int = 1) -> StripResult:
    """Price several same-maturity contracts on common paths."""
    _require_pricable(params)
    maturity = _maturity(contracts)
    spectral = build_spectral(grid.n)
    rule = terminal_rule(state, params, grid, maturity)

    def node_estimate(k):
        rng = stream(mc.seed, PATH_INTEGRAL, k)
        return _chi_many(rule.nodes[k], contracts, state, params, grid, mc, spectral, rng)

    estimates = _run(node_estimate, range(len(rule.nodes)), threads)
    disc = math.exp(-params.r * maturity)
    means = np.array([e[0] for e in estimates])
    covs = np.array([e[1] for e in estimates])
    a = rule.weights * np.exp([e[2] for e in estimates])
    prices = disc * (a @ means)
    cov = disc**2 * np.einsum("k,kij->ij", a * a, covs)
    diagnostics = {
        "method": "path_integral",
        "y0_nodes": rule.nodes,
        "node_weights": a,
        "chi": means,
        "mass": float(a.sum()),
    }
    n_eval = len(rule.nodes) * mc.variance_paths * mc.price_paths
    return _strip(prices, cov, n_eval, diagnostics)


def price(contract: Contract, state: MarketState, params: ModelParams, grid: GridSpec, mc: McConfig,
          *, threads: int = 1) -> PriceResult:
    """Discounted price with its Monte-Carlo standard error.

    Deterministic for a fixed ``mc.seed`` whatever the thread count.
    """
    return price_strip([contract], state, params, grid, mc, threads=threads).results[0]


def simulate_variance_forward(y_today: float, eps: float, params: ModelParams, n: int, normals) -> np.ndarray:
    """Unconditioned log-variance paths, stepped from index n+1 down to 0."""
    P = normals.shape[0]
    y = np.empty((P, n + 2))
    y[:, n + 1] = y_today
    for i in range(n, -1, -1):
        law = kernel.variance_step(y[:, i + 1], eps, params)
        y[:, i] = law.mean + law.std * normals[:, i]
    return y


def price_sequential_strip(contracts: Sequence[Contract], state: MarketState, params: ModelParams,
                           grid: GridSpec, mc: McConfig, *, threads: int = 1) -> StripResult:
    """Nested plain Monte Carlo with the same total budget as :func:`price_strip`.

    ``grid.y0_nodes`` chunks of ``mc.variance_paths`` forward variance paths
    are drawn, each carrying ``mc.price_paths`` conditional log-price paths.
    """
    _require_pricable(params)
    maturity = _maturity(contracts)
    n = grid.n
    eps = step_size(maturity, n)

    def chunk(k):
        rng = stream(mc.seed, SEQUENTIAL, k)
        z = _normals(rng, (mc.variance_paths, n + 1), mc.antithetic, axis=0)
        y = simulate_variance_forward(state.spot_log_variance, eps, params, n, z)
        x = simulate_log_prices(y, state.spot_log_price, eps, params, mc.price_paths, rng, mc.antithetic)
        h = _path_averages(contracts, x)
        if mc.antithetic:
            half = h.shape[0] // 2
            h = 0.5 * (h[:half] + h[half:])
        return h

    h = np.concatenate(_run(chunk, range(grid.y0_nodes), threads), axis=0)
    mean, cov = _mean_and_cov(h, False)
    disc = math.exp(-params.r * maturity)
    n_eval = grid.y0_nodes * mc.variance_paths * mc.price_paths
    return _strip(disc * mean, disc**2 * cov, n_eval, {"method": "sequential", "chunks": grid.y0_nodes})


def price_sequential(contract: Contract, state: MarketState, params: ModelParams, grid: GridSpec,
                     mc: McConfig, *, threads: int = 1) -> PriceResult:
    return price_sequential_strip([contract], state, params, grid, mc, threads=threads).results[0]
