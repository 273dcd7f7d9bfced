"""Power allocation over a fixed subcarrier partition.

The decoder set gets water-filling, the harvester set gets all power on its
best subcarrier or, under a per-subcarrier cap, a greedy fill of the best
ones.  ``spa_pipeline`` chains subcarrier allocation with these.
"""
from __future__ import annotations

import warnings
from typing import NamedTuple

import numpy as np

from .allocation import DEFAULT_RESOLUTION, SolveOutcome, solve_p1, solve_p2
from .errors import (DegenerateChannelWarning, EmptySet, ParameterError,
                     ResourceInfeasible)
from .rf_model import (ChannelRealization, compute_metrics,
                       equal_power, totals)


class WaterfillResult(NamedTuple):
    powers: np.ndarray
    water_level: float  # mu = B / (lambda ln 2)


def waterfill(gains, budget: float) -> WaterfillResult:
    """Capacity-optimal split ``P_k = (mu - 1/g_k)^+`` with ``sum(P) = budget``.

    ``gains`` are normalized power gains ``|H_k|^2 / sigma_z^2``.  The water
    level comes from the active-set closed form over sorted inverse gains.
    """
    g = np.asarray(gains, dtype=float).reshape(-1)
    if budget < 0:
        raise ParameterError(f"budget must be non-negative, got {budget}")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise ParameterError("gains must be finite and non-negative")
    powers = np.zeros(g.size)
    if budget == 0 or g.size == 0:
        return WaterfillResult(powers, 0.0)
    if not np.any(g > 0):
        warnings.warn("all gains are zero; no power allocated", DegenerateChannelWarning,
                      stacklevel=2)
        return WaterfillResult(powers, 0.0)

    with np.errstate(divide="ignore"):
        inv = np.where(g > 0, 1.0 / g, np.inf)
    order = np.argsort(inv, kind="stable")
    inv_sorted = inv[order]
    levels = (budget + np.cumsum(inv_sorted)) / np.arange(1, g.size + 1)
    # the active set is the longest prefix whose own water level still covers its floor
    active = int(np.flatnonzero(levels > inv_sorted)[-1]) + 1
    mu = float(levels[active - 1])
    powers[order[:active]] = mu - inv_sorted[:active]
    return WaterfillResult(powers, mu)


def single_best_alloc(gains, budget: float) -> np.ndarray:
    """Put the whole budget on the largest ``eta_k |H_k|^2`` (first index on ties)."""
    g = np.asarray(gains, dtype=float).reshape(-1)
    if g.size == 0:
        raise EmptySet("cannot allocate power over an empty subcarrier set")
    if budget < 0:
        raise ParameterError(f"budget must be non-negative, got {budget}")
    powers = np.zeros(g.size)
    powers[int(np.argmax(g))] = budget
    return powers


def capped_alloc(gains, budget: float, cap: float) -> np.ndarray:
    """Maximize ``sum(g_k P_k)`` s.t. ``sum(P_k) <= budget`` and ``0 <= P_k <= cap``.

    With a single coupling constraint the LP optimum is greedy: fill the
    subcarriers in decreasing gain order up to ``cap`` until the budget runs out.
    """
    g = np.asarray(gains, dtype=float).reshape(-1)
    if g.size == 0:
        raise EmptySet("cannot allocate power over an empty subcarrier set")
    if not cap > 0:
        raise ParameterError(f"cap must be positive, got {cap}")
    if budget < 0:
        raise ParameterError(f"budget must be non-negative, got {budget}")
    if budget > g.size * cap * (1 + 1e-12):
        raise ResourceInfeasible(
            f"budget {budget:g} W exceeds {g.size} subcarriers x cap {cap:g} W")
    powers = np.zeros(g.size)
    remaining = float(budget)
    for k in np.argsort(-g, kind="stable"):
        if remaining <= 0:
            break
        powers[k] = min(cap, remaining)
        remaining -= powers[k]
    return powers


def spa_pipeline(ch: ChannelRealization, problem: str, constraint: float,
                 power_per_subcarrier: float, cap: float | None = None,
                 iterations: int = 1, resolution: int = DEFAULT_RESOLUTION,
                 initial: SolveOutcome | None = None) -> SolveOutcome:
    """Subcarrier allocation followed by power allocation on one draw.

    ``problem`` is ``"p1"`` (capacity objective, water-filling over the
    decoder set) or ``"p2"`` (harvest objective, single-best or capped
    allocation over the harvester set).  The other set keeps the power it
    had when the allocation was solved, so the allocation's constraint is
    preserved.  Each extra iteration re-solves the allocation under the new
    power vector and redistributes ``P_T`` minus the power held by the
    untouched set.

    ``initial`` may carry an already-computed equal-power allocation for the
    first iteration.
    """
    problem = problem.lower()
    if problem not in ("p1", "p2"):
        raise ParameterError(f"problem must be 'p1' or 'p2', got {problem!r}")
    if iterations < 1:
        raise ParameterError("iterations must be >= 1")
    solve = solve_p1 if problem == "p1" else solve_p2
    k = ch.num_subcarriers
    powers = equal_power(k, power_per_subcarrier)
    total_power = float(powers.sum())
    g2 = ch.power_gains

    outcome = initial
    for it in range(iterations):
        if it > 0 or outcome is None:
            outcome = solve(compute_metrics(ch, powers), constraint, resolution)
        if not outcome.feasible:
            return SolveOutcome(outcome.mask, outcome.objective, outcome.constraint_used,
                                None, False, outcome.solver, powers)
        info = outcome.mask.bits.astype(bool)
        target = info if problem == "p1" else ~info
        if not np.any(target):
            break
        budget = max(total_power - float(powers[~target].sum()), 0.0)
        new = powers.copy()
        if problem == "p1":
            new[target] = waterfill(g2[target] / ch.noise_variance_w, budget).powers
        elif cap is None:
            new[target] = single_best_alloc(ch.efficiencies[target] * g2[target], budget)
        else:
            new[target] = capped_alloc(ch.efficiencies[target] * g2[target], budget, cap)
        powers = new

    metrics = compute_metrics(ch, powers)
    c_t, q_t = totals(metrics, outcome.mask)
    objective, used = (c_t, q_t) if problem == "p1" else (q_t, c_t)
    return SolveOutcome(outcome.mask, objective, used, None, True, outcome.solver, powers)
