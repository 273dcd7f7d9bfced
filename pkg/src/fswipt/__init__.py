"""Frequency-switching SWIPT: knapsack subcarrier allocation, relaxation
bounds, power allocation, TS/PS baselines and a Monte Carlo sweep harness."""
from .allocation import (KnapsackInstance, RelaxedSolution, SolveOutcome, Solver,
                         brute_force_solve, build_p1_instance, build_p2_instance,
                         dp_solve, relaxation_order, solve_p1, solve_p2,
                         upper_bound_c, upper_bound_q)
from .baselines import CAPACITY, HARVEST, SwitchSolution, ps_capacity, ps_solve, ts_solve
from .errors import (ConfigError, DegenerateChannelWarning, EmptyResult, EmptySet,
                     InfeasibleConstraint, ParameterError, ResourceInfeasible,
                     ResourceLimit)
from .power_alloc import capped_alloc, single_best_alloc, spa_pipeline, waterfill
from .rf_model import (AllocationMask, ChannelRealization, SubcarrierMetrics,
                       compute_metrics, equal_power, sample_rayleigh, totals)
from .sim import SimConfig, SweepRecord, emit_csv, load_config, parse_csv, run_sweep

__version__ = "0.1.0"
