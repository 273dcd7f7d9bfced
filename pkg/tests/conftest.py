"""Independent oracles shared by the test modules.

None of these call into the solvers they check.
"""
import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

ACCEPTANCE_LINES = []


def report(criterion, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def all_masks(k):
    return np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.int8)


def brute_p1(c, q, q_min):
    """Max sum(C over info) s.t. sum(Q over harvest) >= q_min, over all 2^K masks."""
    masks = all_masks(len(c))
    cap = masks @ c
    harv = (1 - masks) @ q
    ok = harv >= q_min
    if not ok.any():
        return None
    return float(cap[ok].max())


def brute_p2(c, q, c_min):
    masks = all_masks(len(c))
    cap = masks @ c
    harv = (1 - masks) @ q
    ok = cap >= c_min
    if not ok.any():
        return None
    return float(harv[ok].max())


def lp_relaxation(values, weights, capacity):
    """max v.x  s.t. w.x <= capacity, 0 <= x <= 1 (HiGHS)."""
    res = linprog(-np.asarray(values, float), A_ub=[weights], b_ub=[capacity],
                  bounds=[(0, 1)] * len(values), method="highs")
    assert res.status == 0
    return -res.fun


def box_lp_vertices(gains, budget, cap):
    """Max g.P over the vertices of {0 <= P <= cap, sum(P) <= budget}.

    Each vertex has every coordinate at 0 or cap except at most one, which
    is then pinned by sum(P) = budget.
    """
    g = np.asarray(gains, float)
    n = g.size
    patterns = np.array(list(itertools.product((0, 1, 2), repeat=n))).reshape(-1, n)
    free = patterns == 2
    patterns = patterns[free.sum(axis=1) <= 1]
    free = patterns == 2
    p = np.where(patterns == 1, cap, 0.0)
    rest = budget - p.sum(axis=1)
    pinned = free.any(axis=1)
    ok = ~pinned | ((rest >= 0) & (rest <= cap))
    p = np.where(free, rest[:, None], p)
    ok &= p.sum(axis=1) <= budget * (1 + 1e-12)
    return float(max((p[ok] @ g).max(initial=0.0), 0.0))


def water_level_bisection(gains, budget, iters=200):
    """Water level by bisection on sum((mu - 1/g)^+) = budget."""
    inv = 1.0 / np.asarray(gains, float)
    lo, hi = 0.0, inv.min() + budget
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.maximum(mid - inv, 0).sum() > budget:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def worked():
    """Three-subcarrier instance with C = [3, 2, 1] bit/s and Q = [2, 2, 1] mW."""
    from fswipt import SubcarrierMetrics
    return SubcarrierMetrics([3.0, 2.0, 1.0], [2e-3, 2e-3, 1e-3])
