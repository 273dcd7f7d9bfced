"""Multi-carrier channel model and per-subcarrier capacity / harvest metrics.

All quantities are SI: watts, hertz, bits per second.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError


def _as_readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ChannelRealization:
    """One fading draw of a K-subcarrier frame.

    Parameters
    ----------
    gains : array_like of complex
        Channel coefficients ``H_k``.
    bandwidth_hz : float
        Bandwidth of each subcarrier.
    noise_variance_w : float
        AWGN variance ``sigma_z^2`` in watts.
    efficiencies : float or array_like, default 0.5
        RF-to-DC conversion efficiency ``eta_k`` in (0, 1].
    """

    gains: np.ndarray
    bandwidth_hz: float
    noise_variance_w: float
    efficiencies: np.ndarray = field(default=0.5)

    def __post_init__(self):
        gains = _as_readonly(self.gains, complex)
        if gains.size < 1:
            raise ParameterError("at least one subcarrier is required")
        if not np.all(np.isfinite(gains)):
            raise ParameterError("channel gains must be finite")
        eta = np.broadcast_to(np.asarray(self.efficiencies, dtype=float), gains.shape)
        eta = _as_readonly(eta, float)
        if np.any(eta <= 0) or np.any(eta > 1):
            raise ParameterError("conversion efficiencies must lie in (0, 1]")
        if not self.bandwidth_hz > 0:
            raise ParameterError(f"bandwidth must be positive, got {self.bandwidth_hz}")
        if not self.noise_variance_w > 0:
            raise ParameterError(
                f"noise variance must be positive, got {self.noise_variance_w}")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "efficiencies", eta)
        object.__setattr__(self, "bandwidth_hz", float(self.bandwidth_hz))
        object.__setattr__(self, "noise_variance_w", float(self.noise_variance_w))

    @property
    def num_subcarriers(self) -> int:
        return self.gains.size

    @property
    def power_gains(self) -> np.ndarray:
        """``|H_k|^2``."""
        return np.abs(self.gains) ** 2

    def with_noise(self, noise_variance_w: float) -> "ChannelRealization":
        return ChannelRealization(self.gains, self.bandwidth_hz, noise_variance_w,
                                  self.efficiencies)


@dataclass(frozen=True)
class SubcarrierMetrics:
    """Per-subcarrier capacity ``C_k`` (bits/s), harvest ``Q_k`` (W) and SNR ``gamma_k``."""

    capacities: np.ndarray
    harvests: np.ndarray
    snrs: np.ndarray = None

    def __post_init__(self):
        c = _as_readonly(self.capacities, float)
        q = _as_readonly(self.harvests, float)
        if c.shape != q.shape:
            raise ParameterError(
                f"capacities ({c.size}) and harvests ({q.size}) differ in length")
        if np.any(c < 0) or np.any(q < 0) or not (np.all(np.isfinite(c)) and np.all(np.isfinite(q))):
            raise ParameterError("metrics must be finite and non-negative")
        snrs = np.full(c.shape, np.nan) if self.snrs is None else self.snrs
        object.__setattr__(self, "capacities", c)
        object.__setattr__(self, "harvests", q)
        object.__setattr__(self, "snrs", _as_readonly(snrs, float))

    def __len__(self):
        return self.capacities.size


@dataclass(frozen=True)
class AllocationMask:
    """Binary split of the subcarriers: 1 routes to the decoder, 0 to the harvester."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1 or not np.all((bits == 0) | (bits == 1)):
            raise ParameterError("mask bits must be a 1-D vector of 0/1")
        object.__setattr__(self, "bits", _as_readonly(bits, np.int8))

    @classmethod
    def from_info_set(cls, indices, num_subcarriers: int) -> "AllocationMask":
        bits = np.zeros(num_subcarriers, dtype=np.int8)
        bits[list(indices)] = 1
        return cls(bits)

    def __len__(self):
        return self.bits.size

    @property
    def complement(self) -> np.ndarray:
        return 1 - self.bits

    @property
    def info_set(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    @property
    def harvest_set(self) -> np.ndarray:
        return np.flatnonzero(self.bits == 0)

    def __str__(self):
        return "".join(str(int(b)) for b in self.bits)


def equal_power(num_subcarriers: int, power_w: float) -> np.ndarray:
    """Per-subcarrier power vector with ``P_t,k = power_w`` everywhere."""
    if power_w < 0:
        raise ParameterError("transmit power must be non-negative")
    return np.full(num_subcarriers, float(power_w))


def sample_rayleigh(num_subcarriers: int, rng: np.random.Generator,
                    mean_power: float = 1.0) -> np.ndarray:
    """Draw i.i.d. circularly-symmetric complex Gaussian gains with ``E|H|^2 = mean_power``."""
    if int(num_subcarriers) != num_subcarriers or num_subcarriers < 1:
        raise ParameterError(f"num_subcarriers must be a positive integer, got {num_subcarriers}")
    if not mean_power > 0:
        raise ParameterError(f"mean_power must be positive, got {mean_power}")
    scale = np.sqrt(mean_power / 2.0)
    draws = rng.standard_normal((2, int(num_subcarriers)))
    return scale * (draws[0] + 1j * draws[1])


def _check_powers(powers, size: int) -> np.ndarray:
    p = np.asarray(powers, dtype=float).reshape(-1)
    if p.size != size:
        raise ParameterError(f"power vector has {p.size} entries, expected {size}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ParameterError("transmit powers must be finite and non-negative")
    return p


def compute_metrics(ch: ChannelRealization, powers) -> SubcarrierMetrics:
    """Evaluate ``C_k = B log2(1 + |H_k|^2 gamma_k)`` and ``Q_k = eta_k |H_k|^2 P_k``."""
    p = _check_powers(powers, ch.num_subcarriers)
    g2 = ch.power_gains
    snrs = p / ch.noise_variance_w
    capacities = ch.bandwidth_hz * np.log2(1.0 + g2 * snrs)
    harvests = ch.efficiencies * g2 * p
    return SubcarrierMetrics(capacities, harvests, snrs)


def totals(metrics: SubcarrierMetrics, mask: AllocationMask) -> tuple[float, float]:
    """Return ``(C_T, Q_T)``: capacity over the information set, harvest over its complement."""
    if len(mask) != len(metrics):
        raise ParameterError(f"mask has {len(mask)} entries, metrics have {len(metrics)}")
    info = mask.bits.astype(bool)
    return (float(np.sum(metrics.capacities[info])),
            float(np.sum(metrics.harvests[~info])))
