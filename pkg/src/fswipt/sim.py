"""Seeded Monte Carlo sweep over noise levels and CSV output.

Every (noise point, trial) pair gets its own Philox stream keyed by the seed
with the pair as counter, so results do not depend on how trials are split
across workers.  Trials are reduced in fixed-size chunks in a fixed order.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .allocation import DEFAULT_RESOLUTION, solve_p1, solve_p2, upper_bound_c, upper_bound_q
from .baselines import CAPACITY, HARVEST, ps_solve, ts_solve
from .errors import ConfigError, EmptyResult, InfeasibleConstraint, ResourceLimit
from .power_alloc import spa_pipeline
from .rf_model import ChannelRealization, compute_metrics, equal_power, sample_rayleigh

logger = logging.getLogger(__name__)

SCHEMES = ("FS-SA", "FS-SPA", "TS", "PS", "C_up", "Q_up")
DEFAULT_SCHEMES = {"p1": ("FS-SA", "FS-SPA", "TS", "PS", "C_up"),
                   "p2": ("FS-SA", "FS-SPA", "TS", "PS", "Q_up")}
CSV_HEADER = ("noise_db", "scheme", "mean_objective", "mean_constraint", "mean_info_count",
              "mean_harvest_count", "infeasible_fraction", "trials")
CHUNK_TRIALS = 500
THREADS_ENV = "SWIPT_THREADS"

# per-trial columns: objective, constraint, info count, harvest count, feasible
_N_STATS = 5


@dataclass(frozen=True)
class SimConfig:
    """Sweep parameters in the units the experiments are quoted in.

    SI conversion happens through the ``*_w`` / ``*_hz`` / ``*_bps`` properties.
    """

    num_subcarriers: int = 32
    bandwidth_khz: float = 15.0
    eta: float = 0.5
    total_power_mw: float = 128.0
    q_min_mw: float = 12.0
    c_min_kbps: float = 400.0
    p_t_max_mw: float | None = None
    noise_grid: tuple = tuple(float(x) for x in range(30, 75, 5))
    trials: int = 10_000
    seed: int = 0
    resolution: int = DEFAULT_RESOLUTION
    schemes: tuple = ()
    problem: str = "p1"
    mean_power: float = 1.0
    spa_iterations: int = 1

    def __post_init__(self):
        problem = str(self.problem).lower()
        object.__setattr__(self, "problem", problem)
        object.__setattr__(self, "noise_grid", tuple(float(x) for x in self.noise_grid))
        schemes = tuple(self.schemes) or DEFAULT_SCHEMES.get(problem, ())
        object.__setattr__(self, "schemes", schemes)
        self.validate()

    def validate(self):
        if self.problem not in ("p1", "p2"):
            raise ConfigError(f"problem must be p1 or p2, got {self.problem!r}")
        if int(self.num_subcarriers) != self.num_subcarriers or self.num_subcarriers < 1:
            raise ConfigError("num_subcarriers must be a positive integer")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if int(self.resolution) != self.resolution or self.resolution < 1:
            raise ConfigError("resolution must be a positive integer")
        if int(self.spa_iterations) != self.spa_iterations or self.spa_iterations < 1:
            raise ConfigError("spa_iterations must be a positive integer")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not self.noise_grid:
            raise ConfigError("noise_grid must not be empty")
        if not all(math.isfinite(x) for x in self.noise_grid):
            raise ConfigError("noise_grid entries must be finite")
        if self.bandwidth_khz <= 0 or self.total_power_mw <= 0 or self.mean_power <= 0:
            raise ConfigError("bandwidth, total power and mean power must be positive")
        if not 0 < self.eta <= 1:
            raise ConfigError("eta must lie in (0, 1]")
        if self.q_min_mw < 0 or self.c_min_kbps < 0:
            raise ConfigError("q_min_mw and c_min_kbps must be non-negative")
        if self.p_t_max_mw is not None and self.p_t_max_mw < self.power_per_subcarrier_w * 1e3:
            raise ConfigError("p_t_max_mw below the equal per-subcarrier power cannot hold the budget")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ConfigError(f"unknown schemes {sorted(unknown)}; choose from {SCHEMES}")
        wrong_bound = "Q_up" if self.problem == "p1" else "C_up"
        if wrong_bound in self.schemes:
            raise ConfigError(f"{wrong_bound} does not apply to problem {self.problem}")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")

    @property
    def bandwidth_hz(self) -> float:
        return self.bandwidth_khz * 1e3

    @property
    def power_per_subcarrier_w(self) -> float:
        return self.total_power_mw * 1e-3 / self.num_subcarriers

    @property
    def q_min_w(self) -> float:
        return self.q_min_mw * 1e-3

    @property
    def c_min_bps(self) -> float:
        return self.c_min_kbps * 1e3

    @property
    def p_t_max_w(self) -> float | None:
        return None if self.p_t_max_mw is None else self.p_t_max_mw * 1e-3

    @staticmethod
    def noise_variance_w(noise_db: float) -> float:
        """``sigma_z^2`` for a grid point given as ``1/sigma_z^2`` in dB."""
        return 10.0 ** (-noise_db / 10.0)


@dataclass(frozen=True)
class SweepRecord:
    noise_db: float
    scheme: str
    mean_objective: float
    mean_constraint: float
    mean_info_count: float
    mean_harvest_count: float
    infeasible_fraction: float
    trials: int


# --------------------------------------------------------------------------- #
# Config file


def _parse_value(name: str, text: str):
    text = text.strip()
    if name in ("noise_grid", "schemes"):
        items = [t.strip() for t in text.split(",") if t.strip()]
        return tuple(float(t) for t in items) if name == "noise_grid" else tuple(items)
    if name == "p_t_max_mw":
        return None if text.lower() in ("", "none") else float(text)
    if name == "problem":
        return text
    if name in ("num_subcarriers", "trials", "seed", "resolution", "spa_iterations"):
        return int(text, 0)
    return float(text)


def parse_config(text: str) -> SimConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    names = {f.name for f in dataclasses.fields(SimConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in names:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return SimConfig(**values)


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    return parse_config(text)


def format_config(cfg: SimConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ", ".join(str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- #
# Trial evaluation


def trial_rng(seed: int, noise_index: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one (noise point, trial) pair."""
    bitgen = np.random.Philox(key=seed, counter=[0, 0, trial_index, noise_index])
    return np.random.Generator(bitgen)


def evaluate_draw(cfg: SimConfig, ch: ChannelRealization) -> np.ndarray:
    """Evaluate every configured scheme on one channel draw.

    Returns an array of shape ``(len(cfg.schemes), 5)`` holding objective,
    constraint value, information-set size, harvest-set size and a
    feasibility flag.  TS/PS report the switching ratio as fractional set
    sizes ``K(1 - ratio)`` and ``K ratio``; bounds report the relaxed sizes.
    """
    k = ch.num_subcarriers
    p_e = cfg.power_per_subcarrier_w
    powers = equal_power(k, p_e)
    metrics = compute_metrics(ch, powers)
    p1 = cfg.problem == "p1"
    constraint = cfg.q_min_w if p1 else cfg.c_min_bps
    out = np.zeros((len(cfg.schemes), _N_STATS))

    sa = None
    if "FS-SA" in cfg.schemes or "FS-SPA" in cfg.schemes:
        sa = (solve_p1 if p1 else solve_p2)(metrics, constraint, cfg.resolution)

    for row, scheme in enumerate(cfg.schemes):
        if scheme in ("FS-SA", "FS-SPA"):
            res = sa if scheme == "FS-SA" else spa_pipeline(
                ch, cfg.problem, constraint, p_e, cfg.p_t_max_w, cfg.spa_iterations,
                cfg.resolution, initial=sa)
            n_info = float(res.mask.bits.sum())
            out[row] = res.objective, res.constraint_used, n_info, k - n_info, res.feasible
        elif scheme in ("TS", "PS"):
            objective = CAPACITY if p1 else HARVEST
            sol = (ts_solve(metrics, objective, constraint) if scheme == "TS"
                   else ps_solve(metrics, ch, powers, objective, constraint))
            obj, con = (sol.capacity, sol.harvested) if p1 else (sol.harvested, sol.capacity)
            out[row] = obj, con, k * (1 - sol.ratio), k * sol.ratio, sol.feasible
        else:
            try:
                relaxed = (upper_bound_c if p1 else upper_bound_q)(metrics, constraint)
            except InfeasibleConstraint:
                continue
            used = relaxed.fractions.sum()
            if p1:
                con = float(((1 - relaxed.fractions) * metrics.harvests).sum())
                out[row] = relaxed.bound, con, used, k - used, True
            else:
                con = float(((1 - relaxed.fractions) * metrics.capacities).sum())
                out[row] = relaxed.bound, con, k - used, used, True
    return out


ChannelSource = Callable[[int, int], np.ndarray]


def _run_chunk(cfg: SimConfig, noise_index: int, start: int, stop: int,
               channel_source: ChannelSource | None) -> np.ndarray:
    """Per-scheme sums over trials ``start..stop-1`` of one noise point."""
    noise_db = cfg.noise_grid[noise_index]
    noise_var = cfg.noise_variance_w(noise_db)
    sums = np.zeros((len(cfg.schemes), _N_STATS))
    for t in range(start, stop):
        if channel_source is None:
            gains = sample_rayleigh(cfg.num_subcarriers, trial_rng(cfg.seed, noise_index, t),
                                    cfg.mean_power)
        else:
            gains = channel_source(noise_index, t)
        ch = ChannelRealization(gains, cfg.bandwidth_hz, noise_var, cfg.eta)
        try:
            stats = evaluate_draw(cfg, ch)
        except ResourceLimit as exc:
            raise ResourceLimit(f"noise point {noise_db:g} dB, trial {t}: {exc}") from None
        feasible = stats[:, 4:5] > 0
        sums[:, :4] += np.where(feasible, stats[:, :4], 0.0)
        sums[:, 4] += feasible[:, 0]
    return sums


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            workers = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if workers < 0:
        raise ConfigError("worker count must be non-negative")
    return workers or (os.cpu_count() or 1)


def run_sweep(cfg: SimConfig, workers: int | None = None,
              channel_source: ChannelSource | None = None) -> list[SweepRecord]:
    """Monte Carlo sweep over ``cfg.noise_grid``.

    ``channel_source(noise_index, trial_index)`` overrides the Rayleigh draw
    (it must be picklable when ``workers > 1``).  Infeasible trials are
    excluded from the means and counted in ``infeasible_fraction``.
    """
    workers = resolve_workers(workers)
    tasks = [(g, start, min(start + CHUNK_TRIALS, cfg.trials))
             for g in range(len(cfg.noise_grid))
             for start in range(0, cfg.trials, CHUNK_TRIALS)]
    logger.info("sweep: %d noise points x %d trials, %d workers",
                len(cfg.noise_grid), cfg.trials, workers)
    if workers == 1 or len(tasks) == 1:
        partials = [_run_chunk(cfg, g, a, b, channel_source) for g, a, b in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, cfg, g, a, b, channel_source)
                       for g, a, b in tasks]
            partials = [f.result() for f in futures]

    totals = np.zeros((len(cfg.noise_grid), len(cfg.schemes), _N_STATS))
    for (g, _, _), part in zip(tasks, partials):
        totals[g] += part

    records = []
    for g, noise_db in enumerate(cfg.noise_grid):
        for s, scheme in enumerate(cfg.schemes):
            n_ok = totals[g, s, 4]
            with np.errstate(invalid="ignore", divide="ignore"):
                means = totals[g, s, :4] / n_ok
            records.append(SweepRecord(
                noise_db, scheme, *(float(v) for v in means),
                infeasible_fraction=float((cfg.trials - n_ok) / cfg.trials),
                trials=cfg.trials))
    return sorted(records, key=lambda r: (r.noise_db, r.scheme))


# --------------------------------------------------------------------------- #
# CSV


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def emit_csv(records: Sequence[SweepRecord], destination,
             feedback_bits: int | None = None) -> None:
    """Write records as CSV to a path or text stream.

    ``feedback_bits`` appends a constant column with the per-trial feedback
    size (one bit per subcarrier).
    """
    if not records:
        raise EmptyResult("no sweep records to write")
    header = list(CSV_HEADER) + (["feedback_bits"] if feedback_bits is not None else [])
    rows = []
    for r in sorted(records, key=lambda r: (r.noise_db, r.scheme)):
        row = [_fmt(r.noise_db), r.scheme, _fmt(r.mean_objective), _fmt(r.mean_constraint),
               _fmt(r.mean_info_count), _fmt(r.mean_harvest_count),
               _fmt(r.infeasible_fraction), str(r.trials)]
        if feedback_bits is not None:
            row.append(str(feedback_bits))
        rows.append(row)

    def write(stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)

    if hasattr(destination, "write"):
        write(destination)
        return
    path = Path(destination)
    try:
        with path.open("w", newline="") as fh:
            write(fh)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {path}: {exc.strerror}") from exc


def parse_csv(source) -> list[SweepRecord]:
    """Inverse of :func:`emit_csv` (extra columns are ignored)."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    reader = csv.DictReader(io.StringIO(text))
    missing = set(CSV_HEADER) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"CSV lacks columns {sorted(missing)}")
    return [SweepRecord(float(row["noise_db"]), row["scheme"],
                        float(row["mean_objective"]), float(row["mean_constraint"]),
                        float(row["mean_info_count"]), float(row["mean_harvest_count"]),
                        float(row["infeasible_fraction"]), int(row["trials"]))
            for row in reader]


_PLOT_TEMPLATE = '''"""Plot a sweep CSV produced by ``fswipt sweep``."""
import sys

import matplotlib.pyplot as plt
import pandas as pd

df = pd.read_csv(sys.argv[1] if len(sys.argv) > 1 else {csv!r})
fig, ax = plt.subplots()
for scheme, grp in df.groupby("scheme"):
    ax.plot(grp["noise_db"], grp["mean_objective"], marker="o", label=scheme)
ax.set_xlabel("1/sigma_z^2 [dB]")
ax.set_ylabel({ylabel!r})
ax.legend()
ax.grid(True)
plt.show()
'''


def write_plot_script(csv_path, destination, problem: str = "p1") -> None:
    ylabel = "capacity [bit/s]" if problem == "p1" else "harvested power [W]"
    Path(destination).write_text(_PLOT_TEMPLATE.format(csv=str(csv_path), ylabel=ylabel))
