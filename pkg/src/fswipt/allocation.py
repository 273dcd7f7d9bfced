"""Subcarrier allocation as a 0/1 knapsack.

Maximizing capacity under a harvest floor (``solve_p1``) is a knapsack whose
items are subcarriers sent to the decoder: value ``C_k``, weight ``Q_k``,
capacity ``sum(Q) - Q_min``.  Maximizing harvest under a capacity floor
(``solve_p2``) is the mirror image with the roles of ``C`` and ``Q`` swapped
and items being the harvested subcarriers.

Physical values are quantized to integers before the dynamic program.  Weights
are rounded up and the capacity is not rounded up, so any selection the DP
accepts also meets the original real-valued constraint.  Weights that are
exact multiples of a common unit are scaled exactly instead.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InfeasibleConstraint, ParameterError, ResourceLimit
from .rf_model import AllocationMask, SubcarrierMetrics, totals

DEFAULT_RESOLUTION = 2 ** 14
VALUE_BITS = 30
DP_CELL_BUDGET = 64_000_000
BRUTE_FORCE_MAX_ITEMS = 24
EXACT_MAX_DENOMINATOR = 1024


class Solver(str, enum.Enum):
    DP = "dp"
    BRUTE_FORCE = "brute_force"


@dataclass(frozen=True)
class KnapsackInstance:
    """Integer knapsack plus the scales mapping integers back to physical units."""

    values: np.ndarray
    weights: np.ndarray
    capacity: int
    value_scale: float = 1.0
    weight_scale: float = 1.0
    item_index_map: np.ndarray = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64).reshape(-1)
        weights = np.asarray(self.weights, dtype=np.int64).reshape(-1)
        if values.shape != weights.shape:
            raise ParameterError("values and weights must have equal length")
        if np.any(values < 0) or np.any(weights < 0):
            raise ParameterError("values and weights must be non-negative")
        if int(self.capacity) != self.capacity or self.capacity < 0:
            raise ParameterError(f"capacity must be a non-negative integer, got {self.capacity}")
        if not (self.value_scale > 0 and self.weight_scale > 0):
            raise ParameterError("scales must be positive")
        index_map = (np.arange(values.size) if self.item_index_map is None
                     else np.asarray(self.item_index_map, dtype=np.int64))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "capacity", int(self.capacity))
        object.__setattr__(self, "item_index_map", index_map)

    def __len__(self):
        return self.values.size


class KnapsackSolution(NamedTuple):
    selection: np.ndarray  # 0/1 per item
    objective: int


class RelaxedSolution(NamedTuple):
    """Continuous-relaxation optimum.

    ``critical`` is the 0-based position in ``order`` of the fractional item,
    or ``None`` when every item fits.  ``fractions`` is indexed by subcarrier.
    """

    bound: float
    critical: int | None
    fractions: np.ndarray
    order: np.ndarray


@dataclass(frozen=True)
class SolveOutcome:
    mask: AllocationMask
    objective: float
    constraint_used: float
    upper_bound: float | None
    feasible: bool
    solver: Solver
    powers: np.ndarray | None = None


# --------------------------------------------------------------------------- #
# Instance construction


def _quantize(values, weights, threshold: float, resolution: int,
              vacuous: bool) -> KnapsackInstance:
    if int(resolution) != resolution or resolution < 1:
        raise ParameterError(f"resolution must be a positive integer, got {resolution}")
    resolution = int(resolution)
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)

    vmax = float(values.max()) if values.size else 0.0
    value_scale = vmax / 2 ** VALUE_BITS if vmax > 0 else 1.0
    qvalues = np.rint(values / value_scale).astype(np.int64)

    if vacuous:
        # constraint cannot bind: every item fits at zero weight
        total = float(weights.sum())
        weight_scale = total / resolution if total > 0 else 1.0
        return KnapsackInstance(qvalues, np.zeros(values.size, np.int64), resolution,
                                value_scale, weight_scale)
    if threshold == 0:
        total = float(weights.sum())
        weight_scale = total / resolution if total > 0 else 1.0
        qweights = (weights > 0).astype(np.int64)
        return KnapsackInstance(qvalues, qweights, 0, value_scale, weight_scale)

    denominator = _exact_denominator(weights / threshold, min(resolution, EXACT_MAX_DENOMINATOR))
    if denominator:
        qweights = np.rint(weights / threshold * denominator).astype(np.int64)
        return KnapsackInstance(qvalues, qweights, denominator, value_scale,
                                threshold / denominator)

    weight_scale = threshold / resolution
    # floor + 1 is ceil for non-integers and stays strictly above exact integers
    qweights = np.where(weights > 0, np.floor(weights / weight_scale) + 1, 0).astype(np.int64)
    return KnapsackInstance(qvalues, qweights, resolution, value_scale, weight_scale)


def _exact_denominator(ratios: np.ndarray, max_denominator: int) -> int | None:
    """Smallest ``D`` making every ``ratio * D`` an integer, if one is small enough.

    Weights that are exact multiples of a common unit (hand-built instances)
    then quantize without loss, so selections that meet the threshold
    exactly stay feasible.
    """
    candidates = np.arange(1, max_denominator + 1, dtype=float)
    for r in ratios:
        scaled = r * candidates
        candidates = candidates[np.abs(scaled - np.rint(scaled)) <= 1e-11 * np.maximum(1.0, scaled)]
        if candidates.size == 0:
            return None
    return int(candidates[0])


def build_p1_instance(metrics: SubcarrierMetrics, q_min: float,
                      resolution: int = DEFAULT_RESOLUTION) -> KnapsackInstance:
    """Knapsack over decoder-bound subcarriers with capacity ``Q_th = sum(Q) - q_min``."""
    q_th = float(metrics.harvests.sum()) - q_min
    if q_th < 0:
        raise InfeasibleConstraint(
            f"Q_min={q_min:g} W exceeds total harvestable power {metrics.harvests.sum():g} W")
    return _quantize(metrics.capacities, metrics.harvests, q_th, resolution, q_min <= 0)


def build_p2_instance(metrics: SubcarrierMetrics, c_min: float,
                      resolution: int = DEFAULT_RESOLUTION) -> KnapsackInstance:
    """Knapsack over harvested subcarriers with capacity ``C_th = sum(C) - c_min``."""
    c_th = float(metrics.capacities.sum()) - c_min
    if c_th < 0:
        raise InfeasibleConstraint(
            f"C_min={c_min:g} bit/s exceeds total capacity {metrics.capacities.sum():g} bit/s")
    return _quantize(metrics.harvests, metrics.capacities, c_th, resolution, c_min <= 0)


# --------------------------------------------------------------------------- #
# Exact solvers


def _dp_table(values: np.ndarray, weights: np.ndarray, width: int,
              cell_budget: int) -> np.ndarray:
    """``best[i, c]``: optimal value from items ``i..n-1`` within capacity ``c < width``."""
    n = values.size
    if (n + 1) * width > cell_budget:
        raise ResourceLimit(f"DP table of {(n + 1) * width} cells exceeds budget "
                            f"{cell_budget}; lower the resolution")
    best = np.empty((n + 1, width), dtype=np.int64)
    best[n] = 0
    for i in range(n - 1, -1, -1):
        nxt, row = best[i + 1], best[i]
        w = int(weights[i])
        if w < width:
            row[:w] = nxt[:w]
            np.add(nxt[:width - w], values[i], out=row[w:])
            np.maximum(row[w:], nxt[w:], out=row[w:])
        else:
            row[:] = nxt
    return best


def _backtrack(best: np.ndarray, values: np.ndarray, weights: np.ndarray,
               capacities: np.ndarray) -> np.ndarray:
    """Selections (one row per capacity) taking each item whenever that stays optimal."""
    n = values.size
    c = np.array(capacities, dtype=np.int64)
    selections = np.zeros((c.size, n), dtype=np.int8)
    for i in range(n):
        w = weights[i]
        fits = c >= w
        take = fits & (best[i + 1, np.where(fits, c - w, 0)] + values[i] == best[i, c])
        selections[:, i] = take
        c -= w * take
    return selections


def _backtrack_one(best: np.ndarray, values: list, weights: list, c: int) -> np.ndarray:
    # scalar form of _backtrack for a single capacity; far cheaper than fancy indexing
    n = len(values)
    selection = np.zeros(n, dtype=np.int8)
    for i in range(n):
        w = weights[i]
        if w <= c and best.item(i + 1, c - w) + values[i] == best.item(i, c):
            selection[i] = 1
            c -= w
    return selection


def dp_solve(inst: KnapsackInstance, cell_budget: int = DP_CELL_BUDGET) -> KnapsackSolution:
    """Exact 0/1 knapsack by dynamic programming over capacities.

    Backtracking from item 0 takes an item whenever taking it is optimal, so
    among tied optima the lexicographically greatest selection (lowest
    indices first) is returned.
    """
    best = _dp_table(inst.values, inst.weights, inst.capacity + 1, cell_budget)
    selection = _backtrack(best, inst.values, inst.weights, [inst.capacity])[0]
    return KnapsackSolution(selection, int(best[0, inst.capacity]))


def brute_force_solve(inst: KnapsackInstance, chunk: int = 1 << 16) -> KnapsackSolution:
    """Exhaustive search over all ``2**n`` selections, with the DP's tie-break."""
    n = len(inst)
    if n > BRUTE_FORCE_MAX_ITEMS:
        raise ResourceLimit(f"brute force limited to {BRUTE_FORCE_MAX_ITEMS} items, got {n}")
    if n == 0:
        return KnapsackSolution(np.zeros(0, dtype=np.int8), 0)
    # item i maps to bit n-1-i, so larger codes are lexicographically greater selections
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best_value, best_code = -1, -1
    for start in range(0, 1 << n, chunk):
        codes = np.arange(start, min(start + chunk, 1 << n), dtype=np.int64)
        bits = (codes[:, None] >> shifts) & 1
        value = bits @ inst.values
        weight = bits @ inst.weights
        value = np.where(weight <= inst.capacity, value, -1)
        top = value.max()
        code = codes[value == top].max()
        if top > best_value or (top == best_value and code > best_code):
            best_value, best_code = int(top), int(code)
    selection = ((best_code >> shifts) & 1).astype(np.int8)
    return KnapsackSolution(selection, best_value)


# --------------------------------------------------------------------------- #
# Continuous relaxation


def relaxation_order(metrics: SubcarrierMetrics) -> np.ndarray:
    """Subcarrier indices sorted by ``C_k / Q_k`` descending.

    ``Q_k = 0`` with ``C_k > 0`` counts as an infinite ratio; ``Q_k = C_k = 0``
    goes last.  Ties keep the lower index first.
    """
    c, q = metrics.capacities, metrics.harvests
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(q > 0, c / q, np.inf)
    ratio = np.where((q == 0) & (c == 0), -np.inf, ratio)
    return np.argsort(-ratio, kind="stable")


def upper_bound_c(metrics: SubcarrierMetrics, q_min: float) -> RelaxedSolution:
    """Capacity bound of the fractional relaxation of ``solve_p1``."""
    c, q = metrics.capacities, metrics.harvests
    q_th = float(q.sum()) - q_min
    if q_th < 0:
        raise InfeasibleConstraint(f"Q_min={q_min:g} W exceeds total harvestable power")
    order = relaxation_order(metrics)
    fractions = np.zeros(c.size)
    prefix = np.cumsum(q[order])
    over = np.flatnonzero(prefix > q_th)
    if over.size == 0:
        fractions[:] = 1.0
        return RelaxedSolution(float(c.sum()), None, fractions, order)
    d = int(over[0])
    head, crit = order[:d], order[d]
    residual = q_th - float(q[head].sum())
    share = min(max(residual / q[crit], 0.0), 1.0)
    fractions[head] = 1.0
    fractions[crit] = share
    return RelaxedSolution(float(c[head].sum() + c[crit] * share), d, fractions, order)


def upper_bound_q(metrics: SubcarrierMetrics, c_min: float) -> RelaxedSolution:
    """Harvest bound of the fractional relaxation of ``solve_p2``.

    Harvested subcarriers are filled from the tail of the ``C/Q`` ordering;
    the critical item is the last position whose suffix sum of ``C`` exceeds
    ``C_th``.  ``fractions`` holds the harvest share per subcarrier.
    """
    c, q = metrics.capacities, metrics.harvests
    c_th = float(c.sum()) - c_min
    if c_th < 0:
        raise InfeasibleConstraint(f"C_min={c_min:g} bit/s exceeds total capacity")
    order = relaxation_order(metrics)
    fractions = np.zeros(c.size)
    suffix = np.cumsum(c[order][::-1])[::-1]
    over = np.flatnonzero(suffix > c_th)
    if over.size == 0:
        fractions[:] = 1.0
        return RelaxedSolution(float(q.sum()), None, fractions, order)
    d = int(over[-1])
    tail, crit = order[d + 1:], order[d]
    residual = c_th - float(c[tail].sum())
    share = min(max(residual / c[crit], 0.0), 1.0)
    fractions[tail] = 1.0
    fractions[crit] = share
    return RelaxedSolution(float(q[tail].sum() + q[crit] * share), d, fractions, order)


# --------------------------------------------------------------------------- #
# Problem wrappers


def _select(inst: KnapsackInstance, solver: Solver, feasible) -> np.ndarray:
    """Best selection that passes the real-valued ``feasible`` check.

    Rounding weights up costs less than one unit per selected item, so every
    truly feasible selection fits within ``capacity + n``.  The DP path
    tries the capacities in that window by descending value and keeps the
    first candidate that ``feasible`` accepts; the ``capacity`` candidate is
    feasible by construction.
    """
    if Solver(solver) is Solver.BRUTE_FORCE:
        return brute_force_solve(inst).selection
    n, cap = len(inst), inst.capacity
    best = _dp_table(inst.values, inst.weights, cap + n + 1, DP_CELL_BUDGET)
    caps = np.arange(cap, cap + n + 1)
    scores = best[0, caps]
    values, weights = inst.values.tolist(), inst.weights.tolist()
    # candidates are backtracked lazily, best first
    for j in np.argsort(-scores, kind="stable"):
        if scores[j] <= scores[0]:
            break
        candidate = _backtrack_one(best, values, weights, int(caps[j]))
        if feasible(candidate):
            return candidate
    return _backtrack_one(best, values, weights, cap)


def _repair(selected: np.ndarray, weights: np.ndarray, values: np.ndarray,
            slack_ok) -> np.ndarray:
    # last-ulp guard: drop the worst value-per-weight items until the float check passes
    selected = selected.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(weights > 0, values / weights, np.inf)
    for k in np.argsort(ratio, kind="stable"):
        if slack_ok(selected):
            break
        if selected[k] and weights[k] > 0:
            selected[k] = 0
    return selected


def solve_p1(metrics: SubcarrierMetrics, q_min: float,
             resolution: int = DEFAULT_RESOLUTION, solver: Solver = Solver.DP) -> SolveOutcome:
    """Maximize ``C_T`` subject to ``Q_T >= q_min``.

    An unreachable ``q_min`` yields ``feasible=False`` with every subcarrier
    harvested.
    """
    k = len(metrics)
    try:
        inst = build_p1_instance(metrics, q_min, resolution)
    except InfeasibleConstraint:
        mask = AllocationMask(np.zeros(k, dtype=np.int8))
        c_t, q_t = totals(metrics, mask)
        return SolveOutcome(mask, c_t, q_t, None, False, Solver(solver))
    def meets(sel):
        return totals(metrics, AllocationMask(sel))[1] >= q_min

    info = _repair(_select(inst, solver, meets), metrics.harvests, metrics.capacities, meets)
    mask = AllocationMask(info)
    c_t, q_t = totals(metrics, mask)
    bound = upper_bound_c(metrics, q_min).bound
    return SolveOutcome(mask, c_t, q_t, bound, True, Solver(solver))


def solve_p2(metrics: SubcarrierMetrics, c_min: float,
             resolution: int = DEFAULT_RESOLUTION, solver: Solver = Solver.DP) -> SolveOutcome:
    """Maximize ``Q_T`` subject to ``C_T >= c_min``.

    An unreachable ``c_min`` yields ``feasible=False`` with every subcarrier
    sent to the decoder.
    """
    k = len(metrics)
    try:
        inst = build_p2_instance(metrics, c_min, resolution)
    except InfeasibleConstraint:
        mask = AllocationMask(np.ones(k, dtype=np.int8))
        c_t, q_t = totals(metrics, mask)
        return SolveOutcome(mask, q_t, c_t, None, False, Solver(solver))
    def meets(sel):
        return totals(metrics, AllocationMask(1 - sel))[0] >= c_min

    harvest = _repair(_select(inst, solver, meets), metrics.capacities, metrics.harvests, meets)
    mask = AllocationMask(1 - harvest)
    c_t, q_t = totals(metrics, mask)
    bound = upper_bound_q(metrics, c_min).bound
    return SolveOutcome(mask, q_t, c_t, bound, True, Solver(solver))
