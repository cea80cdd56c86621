"""Trajectory functionals for European path-dependent payoffs.

Log-price arrays have shape ``(..., n + 2)`` in index order, so
``x[..., 0]`` is the log price at maturity. Averages run over all ``n + 2``
samples with equal weights, and barriers are monitored on the grid only.
"""

from __future__ import annotations

import numpy as np

from .model import Contract, PayoffKind, Trajectory


def _log_prices(traj) -> np.ndarray:
    if isinstance(traj, Trajectory):
        return traj.log_price
    return np.asarray(traj, dtype=float)


def evaluate(contract: Contract, traj) -> np.ndarray | float:
    """Payoff of ``contract`` on one trajectory or a batch of log-price paths."""
    x = _log_prices(traj)
    if x.shape[-1] < 2:
        raise ValueError("a trajectory needs at least the two endpoints")
    kind = contract.kind
    K = contract.strike
    if kind is PayoffKind.CUSTOM:
        out = np.asarray(contract.custom_payoff(x), dtype=float)
        return out if out.ndim else float(out)
    terminal = np.exp(x[..., 0])
    if kind is PayoffKind.EUROPEAN_CALL:
        out = np.maximum(terminal - K, 0.0)
    elif kind is PayoffKind.EUROPEAN_PUT:
        out = np.maximum(K - terminal, 0.0)
    elif kind is PayoffKind.ASIAN_ARITHMETIC_CALL:
        out = np.maximum(np.mean(np.exp(x), axis=-1) - K, 0.0)
    elif kind is PayoffKind.ASIAN_GEOMETRIC_CALL:
        out = np.maximum(np.exp(np.mean(x, axis=-1)) - K, 0.0)
    elif kind is PayoffKind.LOOKBACK_FIXED_CALL:
        out = np.maximum(np.exp(np.max(x, axis=-1)) - K, 0.0)
    elif kind is PayoffKind.UP_AND_OUT_CALL:
        alive = np.max(x, axis=-1) < np.log(contract.barrier)
        out = np.where(alive, np.maximum(terminal - K, 0.0), 0.0)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unsupported payoff kind {kind!r}")
    return out if np.ndim(out) else float(out)


def constant(value: float = 1.0):
    """Payoff functional returning ``value`` on every path."""

    def payoff(x):
        return np.full(np.shape(x)[:-1], float(value))

    return payoff


def forward(strike: float):
    """Forward contract ``S_T - K``."""

    def payoff(x):
        return np.exp(x[..., 0]) - strike

    return payoff


def custom(fn, strike: float, maturity: float) -> Contract:
    return Contract(PayoffKind.CUSTOM, strike, maturity, custom_payoff=fn)


CALL_KINDS = (
    PayoffKind.EUROPEAN_CALL,
    PayoffKind.ASIAN_ARITHMETIC_CALL,
    PayoffKind.ASIAN_GEOMETRIC_CALL,
    PayoffKind.LOOKBACK_FIXED_CALL,
    PayoffKind.UP_AND_OUT_CALL,
)
