"""Spectral sampling of log-variance bridges.

With ``alpha = 1`` and ``lam = 0`` the log-variance is an arithmetic Brownian
motion. Rescaling ``y_i = sqrt(eps) xi eta_i - d eps i`` (``d`` the log-variance
drift) turns the path weight into ``exp(-1/2 sum (eta_i - eta_{i+1})^2)``,
whose interior part is the quadratic form of ``M = tridiag(-1, 2, -1)``.
``M`` is diagonalised once in closed form, after which a bridge pinned at both
ends is ``n`` independent Gaussian modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import GridSpec, ModelParams, step_size


@dataclass(frozen=True)
class SpectralBridge:
    """Eigenpairs of the ``n x n`` (2, -1) tridiagonal Toeplitz matrix.

    ``basis[i - 1, j - 1]`` is component ``i`` of eigenvector ``j``; row ``i``
    belongs to interior index ``i`` (row 1 neighbours maturity, row ``n``
    neighbours the valuation date).
    """

    n: int
    eigenvalues: np.ndarray
    basis: np.ndarray
    log_det_m: float

    def matrix(self) -> np.ndarray:
        return tridiagonal_matrix(self.n)


@dataclass(frozen=True)
class BridgeCoefficients:
    """Endpoint data of one bridge.

    ``g`` is measured relative to ``anchor``, the rescaled valuation-date
    endpoint: the path weight only depends on differences of the rescaled
    path, so shifting by a constant is exact and keeps the quantities
    ``O(1)`` even when ``xi sqrt(eps)`` is tiny.
    """

    g: np.ndarray
    endpoint_weight_log: float
    anchor: float
    eta0: float
    eta_today: float


def tridiagonal_matrix(n: int) -> np.ndarray:
    return 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


def tridiagonal_det(n: int) -> int:
    """Determinant of ``tridiag(-1, 2, -1)`` via the three-term recurrence."""
    if n < 1:
        raise ValueError("n must be >= 1")
    prev, cur = 1, 2
    for _ in range(n - 1):
        prev, cur = cur, 2 * cur - prev
    return cur


@lru_cache(maxsize=32)
def build_spectral(n: int) -> SpectralBridge:
    if n < 1:
        raise ValueError("n must be >= 1")
    j = np.arange(1, n + 1)
    theta = j * np.pi / (n + 1)
    # 4 sin^2(theta/2) == 2 - 2 cos(theta) without cancellation at small theta
    m = 4.0 * np.sin(0.5 * theta) ** 2
    basis = np.sqrt(2.0 / (n + 1)) * np.sin(np.outer(j, j) * np.pi / (n + 1))
    m.setflags(write=False)
    basis.setflags(write=False)
    return SpectralBridge(n=n, eigenvalues=m, basis=basis, log_det_m=float(np.sum(np.log(m))))


def _require_lognormal(params: ModelParams):
    if not params.is_lognormal_variance:
        raise ValueError("spectral bridge requires alpha=1 and lam=0")


def rescale(y, index, eps, params: ModelParams):
    """Map log-variance at step ``index`` to the drift-free coordinate eta."""
    return (y + params.log_variance_drift * eps * index) / (params.xi * np.sqrt(eps))


def bridge_coefficients(
    y_today: float,
    y0: float,
    grid: GridSpec,
    params: ModelParams,
    spectral: SpectralBridge,
    maturity: float,
) -> BridgeCoefficients:
    """Mode shifts ``g`` and the log endpoint weight for one terminal value.

    ``exp(endpoint_weight_log)`` is the density of the maturity log-variance
    ``y0`` given ``y_today``, obtained by integrating the interior path out in
    the eigenbasis.
    """
    _require_lognormal(params)
    n = grid.n
    eps = step_size(maturity, n)
    eta0 = float(rescale(y0, 0, eps, params))
    eta_today = float(rescale(y_today, n + 1, eps, params))
    anchor = eta_today
    e0, e1 = eta0 - anchor, eta_today - anchor
    O = spectral.basis
    g = e0 * O[0, :] + e1 * O[n - 1, :]
    quad = e0 * e0 + e1 * e1 - np.sum(g * g / spectral.eigenvalues)
    log_w = -0.5 * quad - 0.5 * (np.log(2.0 * np.pi * eps * params.xi**2) + spectral.log_det_m)
    return BridgeCoefficients(
        g=g, endpoint_weight_log=float(log_w), anchor=anchor, eta0=eta0, eta_today=eta_today
    )


def sample_variance_path(
    zeta,
    coeffs: BridgeCoefficients,
    spectral: SpectralBridge,
    grid: GridSpec,
    params: ModelParams,
    y_today: float,
    y0: float,
    maturity: float,
) -> np.ndarray:
    """Log-variance bridge(s) from standard normal mode draws.

    ``zeta`` has shape ``(..., n)``; the result has shape ``(..., n + 2)``
    with ``path[..., n + 1] = y_today`` and ``path[..., 0] = y0`` exactly.
    """
    zeta = np.asarray(zeta, dtype=float)
    n = grid.n
    if zeta.shape[-1] != n:
        raise ValueError(f"zeta must have trailing length {n}, got {zeta.shape[-1]}")
    eps = step_size(maturity, n)
    m = spectral.eigenvalues
    omega = zeta / np.sqrt(m) + coeffs.g / m
    eta = coeffs.anchor + omega @ spectral.basis.T
    i = np.arange(1, n + 1)
    interior = np.sqrt(eps) * params.xi * eta - params.log_variance_drift * eps * i
    out = np.empty(zeta.shape[:-1] + (n + 2,))
    out[..., 1 : n + 1] = interior
    out[..., 0] = y0
    out[..., n + 1] = y_today
    return out


def bridge_log_density(path, coeffs: BridgeCoefficients, spectral: SpectralBridge, grid: GridSpec,
                       params: ModelParams, maturity: float):
    """Log density of the interior of ``path`` under the bridge sampler.

    Evaluated through the eigen-coordinates, i.e. by inverting the sampling
    map; used to check the change of variables against the sequential law.
    """
    path = np.asarray(path, dtype=float)
    n = grid.n
    eps = step_size(maturity, n)
    i = np.arange(1, n + 1)
    eta = rescale(path[..., 1 : n + 1], i, eps, params) - coeffs.anchor
    omega = eta @ spectral.basis
    m = spectral.eigenvalues
    resid = omega - coeffs.g / m
    log_omega = 0.5 * np.sum(np.log(m / (2 * np.pi))) - 0.5 * np.sum(m * resid**2, axis=-1)
    # dy_i = sqrt(eps) xi d eta_i, and O is orthogonal
    return log_omega - n * np.log(np.sqrt(eps) * params.xi)
