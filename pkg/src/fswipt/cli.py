"""Command-line front end: ``sweep``, ``solve`` and ``bound``.

Exit status is 0 on success, 1 on invalid input, 2 on runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .allocation import DEFAULT_RESOLUTION, solve_p1, solve_p2, upper_bound_c, upper_bound_q
from .errors import ConfigError, InfeasibleConstraint, ParameterError
from .power_alloc import spa_pipeline
from .rf_model import ChannelRealization, SubcarrierMetrics, compute_metrics, equal_power
from .sim import emit_csv, load_config, run_sweep, write_plot_script

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("fswipt")


def load_channels(path, bandwidth_hz: float, noise_variance_w: float, eta: float,
                  power_w: float):
    """Read a per-subcarrier CSV.

    Two layouts are accepted: ``re,im[,eta]`` columns with complex channel
    coefficients, or ``capacity_bps,harvest_mw`` columns with precomputed
    metrics.  Returns ``(metrics, channel)``; ``channel`` is ``None`` for the
    metric layout.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read channels file {path}: {exc.strerror or exc}") from None
    rows = list(csv.DictReader(line for line in text.splitlines()
                               if line.strip() and not line.lstrip().startswith("#")))
    if not rows:
        raise ConfigError(f"{path}: no subcarrier rows")
    cols = set(rows[0])
    try:
        if {"re", "im"} <= cols:
            gains = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
            effs = (np.array([float(r["eta"]) for r in rows]) if "eta" in cols else eta)
            ch = ChannelRealization(gains, bandwidth_hz, noise_variance_w, effs)
            return compute_metrics(ch, equal_power(ch.num_subcarriers, power_w)), ch
        if {"capacity_bps", "harvest_mw"} <= cols:
            caps = [float(r["capacity_bps"]) for r in rows]
            harvests = [float(r["harvest_mw"]) * 1e-3 for r in rows]
            return SubcarrierMetrics(caps, harvests), None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}: need columns re,im[,eta] or capacity_bps,harvest_mw; got {sorted(cols)}")


def _add_instance_args(p: argparse.ArgumentParser):
    p.add_argument("--problem", choices=("p1", "p2"), required=True)
    p.add_argument("--channels", required=True, help="per-subcarrier CSV")
    p.add_argument("--q-min-mw", type=float, default=12.0)
    p.add_argument("--c-min-kbps", type=float, default=400.0)
    p.add_argument("--bandwidth-khz", type=float, default=15.0)
    p.add_argument("--noise-db", type=float, default=50.0, help="1/sigma_z^2 in dB")
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--power-mw", type=float, default=4.0, help="equal power per subcarrier")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fswipt",
                                     description="Frequency-switching SWIPT subcarrier allocation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="Monte Carlo sweep to CSV")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: $SWIPT_THREADS or CPU count)")
    sweep.add_argument("--feedback-column", action="store_true",
                       help="append the per-trial feedback size in bits")
    sweep.add_argument("--plot-script", help="also write a matplotlib script for the CSV")

    solve = sub.add_parser("solve", help="allocate one channel instance")
    _add_instance_args(solve)
    solve.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    solve.add_argument("--spa", action="store_true",
                       help="follow with power allocation (needs re,im channels)")
    solve.add_argument("--cap-mw", type=float, default=None, help="per-subcarrier cap for p2 SPA")

    bound = sub.add_parser("bound", help="continuous-relaxation upper bound only")
    _add_instance_args(bound)
    return parser


def _instance(args):
    noise_var = 10.0 ** (-args.noise_db / 10.0)
    metrics, ch = load_channels(args.channels, args.bandwidth_khz * 1e3, noise_var,
                                args.eta, args.power_mw * 1e-3)
    constraint = args.q_min_mw * 1e-3 if args.problem == "p1" else args.c_min_kbps * 1e3
    return metrics, ch, constraint


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    records = run_sweep(cfg, workers=args.workers)
    emit_csv(records, args.out,
             feedback_bits=cfg.num_subcarriers if (args.feedback_column or args.verbose) else None)
    if args.plot_script:
        write_plot_script(args.out, args.plot_script, cfg.problem)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    metrics, ch, constraint = _instance(args)
    solve = solve_p1 if args.problem == "p1" else solve_p2
    outcome = solve(metrics, constraint, args.resolution)
    unit, other = ("bit/s", "W") if args.problem == "p1" else ("W", "bit/s")
    print(f"mask {outcome.mask}")
    print(f"feasible {str(outcome.feasible).lower()}")
    print(f"objective {outcome.objective:.12g} {unit}")
    print(f"constraint {outcome.constraint_used:.12g} {other}")
    bound = "none" if outcome.upper_bound is None else f"{outcome.upper_bound:.12g} {unit}"
    print(f"bound {bound}")
    if args.spa:
        if ch is None:
            raise ConfigError("--spa needs a channels file with re,im columns")
        cap = None if args.cap_mw is None else args.cap_mw * 1e-3
        spa = spa_pipeline(ch, args.problem, constraint, args.power_mw * 1e-3, cap,
                           resolution=args.resolution, initial=outcome)
        print(f"spa_objective {spa.objective:.12g} {unit}")
        print("spa_powers_mw " + ",".join(f"{p * 1e3:.6g}" for p in spa.powers))
    return EXIT_OK


def _cmd_bound(args) -> int:
    metrics, _, constraint = _instance(args)
    if args.problem == "p1":
        print(f"C_up {upper_bound_c(metrics, constraint).bound:.12g} bit/s")
    else:
        print(f"Q_up {upper_bound_q(metrics, constraint).bound:.12g} W")
    return EXIT_OK


COMMANDS = {"sweep": _cmd_sweep, "solve": _cmd_solve, "bound": _cmd_bound}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterError, InfeasibleConstraint) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
