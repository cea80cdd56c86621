"""Pointwise building blocks of the discretised propagator.

One time step of length ``eps`` moves the state ``(x, y) = (ln S, ln V)`` from
index ``i + 1`` to index ``i``. Coefficients are frozen at the starting point,
so the one-step propagator is a bivariate Gaussian with

    mean  (eps * drift_x, eps * drift_y)
    std   (e^{y/2} sqrt(eps), xi e^{y(alpha-1)} sqrt(eps))
    corr  rho

All functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class StepLaw:
    mean: np.ndarray | float
    std: np.ndarray | float


def _check_eps(eps):
    if np.any(np.asarray(eps) <= 0):
        raise ValueError("eps must be positive")


def price_drift(y, params: ModelParams):
    return params.r - 0.5 * np.exp(y)


def variance_drift(y, params: ModelParams):
    """Drift of ``y = ln V`` (Ito-corrected)."""
    a = params.alpha
    return params.lam * np.exp(-y) + params.mu - 0.5 * params.xi**2 * np.exp(2.0 * y * (a - 1.0))


def variance_diffusion(y, params: ModelParams):
    return params.xi * np.exp(y * (params.alpha - 1.0))


def log_normalization(eps, y, params: ModelParams):
    """``ln N(eps) = y (1/2 - alpha) - ln(2 pi eps xi sqrt(1 - rho^2))``."""
    _check_eps(eps)
    rho = params.rho
    return y * (0.5 - params.alpha) - np.log(2.0 * np.pi * eps * params.xi * np.sqrt(1.0 - rho * rho))


def lagrangian(dx, dy, y, eps, params: ModelParams):
    """Completed-square Lagrangian, split into its price and variance parts.

    ``dx`` and ``dy`` are the increments ``x_i - x_{i+1}`` and
    ``y_i - y_{i+1}``; ``y`` is the log-variance at the start of the step.
    Returns ``(l_xy, l_y)``; ``eps * (l_xy + l_y)`` is the Gaussian exponent.
    """
    _check_eps(eps)
    rho, xi, a = params.rho, params.xi, params.alpha
    u = dx / eps - price_drift(y, params)
    v = dy / eps - variance_drift(y, params)
    resid = u - rho * np.exp(y * (1.5 - a)) / xi * v
    l_xy = -np.exp(-y) / (2.0 * (1.0 - rho * rho)) * resid**2
    l_y = -np.exp(2.0 * y * (1.0 - a)) / (2.0 * xi * xi) * v**2
    return l_xy, l_y


def lagrangian_direct(dx, dy, y, eps, params: ModelParams):
    """The same Lagrangian before completing the square (quadratic form)."""
    _check_eps(eps)
    rho, xi, a = params.rho, params.xi, params.alpha
    u = dx / eps - price_drift(y, params)
    v = dy / eps - variance_drift(y, params)
    c = 1.0 - rho * rho
    return (
        -np.exp(-y) / (2.0 * c) * u**2
        + rho * np.exp(y * (0.5 - a)) / (xi * c) * u * v
        - np.exp(2.0 * y * (1.0 - a)) / (2.0 * xi * xi * c) * v**2
    )


def log_propagator(x_from, y_from, x_to, y_to, eps, params: ModelParams):
    """Log transition density ``ln N(eps) + eps * L`` of one step."""
    l_xy, l_y = lagrangian(x_to - x_from, y_to - y_from, y_from, eps, params)
    return log_normalization(eps, y_from, params) + eps * (l_xy + l_y)


def variance_step(y_next, eps, params: ModelParams) -> StepLaw:
    """Law of the next log-variance given the current one."""
    return StepLaw(
        mean=y_next + eps * variance_drift(y_next, params),
        std=variance_diffusion(y_next, params) * np.sqrt(eps),
    )


def conditional_price_step(x_next, y_next, dy, eps, params: ModelParams) -> StepLaw:
    """Law of the next log-price given the current state and the variance move.

    The variance increment ``dy`` carries information about the price shock
    through the correlation, so the price step is Gaussian with regression
    coefficient ``rho`` on the standardised variance shock and residual
    variance ``(1 - rho^2) V eps``.
    """
    _check_eps(eps)
    rho = params.rho
    vol = np.exp(0.5 * y_next)
    shock = (dy - eps * variance_drift(y_next, params)) / variance_diffusion(y_next, params)
    mean = x_next + eps * price_drift(y_next, params) + rho * vol * shock
    std = vol * np.sqrt(eps * (1.0 - rho * rho))
    return StepLaw(mean=mean, std=std)


def hamiltonian_apply(f, x, y, params: ModelParams, h: float = 1e-4):
    """Apply the pricing Hamiltonian to ``f(x, y)`` by central differences.

    Returns ``(H f)(x, y)``; the backward generator is ``-H``.
    """
    a = params.alpha
    fx = (f(x + h, y) - f(x - h, y)) / (2 * h)
    fy = (f(x, y + h) - f(x, y - h)) / (2 * h)
    fxx = (f(x + h, y) - 2 * f(x, y) + f(x - h, y)) / h**2
    fyy = (f(x, y + h) - 2 * f(x, y) + f(x, y - h)) / h**2
    fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h)
    xi2e = params.xi**2 * np.exp(2 * y * (a - 1))
    return -(
        (params.r - 0.5 * np.exp(y)) * fx
        + (params.lam * np.exp(-y) + params.mu - 0.5 * xi2e) * fy
        + 0.5 * xi2e * fyy
        + 0.5 * np.exp(y) * fxx
        + params.rho * params.xi * np.exp(y * (a - 0.5)) * fxy
    )
