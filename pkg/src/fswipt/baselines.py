"""Time-switching (TS) and power-splitting (PS) reference receivers.

Both receivers see all subcarriers.  TS spends a time fraction ``alpha``
harvesting, which scales harvest by ``alpha`` and capacity by ``1 - alpha``.
PS diverts a power share ``rho`` of every subcarrier to the harvester, which
scales harvest by ``rho`` and the decoder SNR by ``1 - rho``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .rf_model import ChannelRealization, SubcarrierMetrics

CAPACITY = "capacity"
HARVEST = "harvest"


@dataclass(frozen=True)
class SwitchSolution:
    ratio: float
    capacity: float
    harvested: float
    feasible: bool


def _check_objective(objective: str) -> str:
    if objective not in (CAPACITY, HARVEST):
        raise ParameterError(f"objective must be {CAPACITY!r} or {HARVEST!r}, got {objective!r}")
    return objective


def ts_solve(metrics: SubcarrierMetrics, objective: str, constraint: float) -> SwitchSolution:
    """Optimal time fraction for the capacity (``constraint=Q_min``) or
    harvest (``constraint=C_min``) objective."""
    _check_objective(objective)
    c_sum = float(metrics.capacities.sum())
    q_sum = float(metrics.harvests.sum())
    if objective == CAPACITY:
        feasible = constraint <= q_sum
        alpha = float(np.clip(constraint / q_sum, 0.0, 1.0)) if q_sum > 0 else (
            0.0 if constraint <= 0 else 1.0)
    else:
        feasible = constraint <= c_sum
        alpha = float(np.clip(1.0 - constraint / c_sum, 0.0, 1.0)) if c_sum > 0 else (
            1.0 if constraint <= 0 else 0.0)
    return SwitchSolution(alpha, (1.0 - alpha) * c_sum, alpha * q_sum, feasible)


def ps_capacity(ch: ChannelRealization, snrs, rho: float) -> float:
    """``sum_k B log2(1 + (1 - rho) |H_k|^2 gamma_k)``."""
    return _split_capacity(ch.bandwidth_hz, ch.power_gains * np.asarray(snrs, dtype=float), rho)


def _split_capacity(bandwidth: float, received_snr: np.ndarray, rho: float) -> float:
    return bandwidth * float(np.log2(1.0 + (1.0 - rho) * received_snr).sum())


def ps_solve(metrics: SubcarrierMetrics, ch: ChannelRealization, powers,
             objective: str, constraint: float, xtol: float = 1e-12) -> SwitchSolution:
    """Optimal power-splitting ratio.

    The harvest objective inverts the strictly decreasing ``C(rho)`` by
    bisection; the returned ratio is the lower bracket end, so the capacity
    constraint holds.
    """
    _check_objective(objective)
    received = ch.power_gains * np.asarray(powers, dtype=float) / ch.noise_variance_w
    bw = ch.bandwidth_hz
    q_sum = float(metrics.harvests.sum())
    if objective == CAPACITY:
        feasible = constraint <= q_sum
        rho = float(np.clip(constraint / q_sum, 0.0, 1.0)) if q_sum > 0 else (
            0.0 if constraint <= 0 else 1.0)
        return SwitchSolution(rho, _split_capacity(bw, received, rho), rho * q_sum, feasible)

    c_full = _split_capacity(bw, received, 0.0)
    if constraint > c_full:
        return SwitchSolution(0.0, c_full, 0.0, False)
    if constraint <= 0:
        return SwitchSolution(1.0, 0.0, q_sum, True)
    lo, hi = 0.0, 1.0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if _split_capacity(bw, received, mid) >= constraint:
            lo = mid
        else:
            hi = mid
    return SwitchSolution(lo, _split_capacity(bw, received, lo), lo * q_sum, True)
