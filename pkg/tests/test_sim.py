import io
import math

import numpy as np
import pytest

from fswipt import (ChannelRealization, ConfigError, EmptyResult, ResourceLimit, SimConfig,
                    SubcarrierMetrics, SweepRecord, compute_metrics, emit_csv, equal_power,
                    load_config, parse_csv, run_sweep, solve_p1)
from fswipt.sim import (CSV_HEADER, evaluate_draw, format_config, parse_config,
                        resolve_workers, trial_rng, write_plot_script)


def small(**kw):
    base = dict(num_subcarriers=8, trials=40, noise_grid=(30.0, 50.0, 70.0), seed=7)
    base.update(kw)
    return SimConfig(**base)


class FixedGains:
    """Picklable channel source returning the same gains for every trial."""

    def __init__(self, gains):
        self.gains = np.asarray(gains, dtype=complex)

    def __call__(self, noise_index, trial_index):
        return self.gains


# --------------------------------------------------------------------------- config

def test_defaults_and_units():
    cfg = SimConfig()
    assert cfg.num_subcarriers == 32 and cfg.bandwidth_hz == 15e3
    assert cfg.power_per_subcarrier_w == pytest.approx(4e-3)
    assert cfg.q_min_w == pytest.approx(12e-3) and cfg.c_min_bps == pytest.approx(400e3)
    assert cfg.schemes == ("FS-SA", "FS-SPA", "TS", "PS", "C_up")
    assert SimConfig(problem="P2").schemes[-1] == "Q_up"
    assert SimConfig.noise_variance_w(50.0) == pytest.approx(1e-5)


@pytest.mark.parametrize("kw", [
    dict(problem="p3"), dict(num_subcarriers=0), dict(trials=0), dict(eta=1.5),
    dict(noise_grid=()), dict(schemes=("FS-SA", "XX")), dict(schemes=("Q_up",)),
    dict(problem="p2", schemes=("C_up",)), dict(p_t_max_mw=1.0), dict(q_min_mw=-1.0),
])
def test_config_rejects(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw)


def test_parse_config_round_trip():
    text = """
    # comment line
    num_subcarriers = 8   # trailing comment
    noise_grid = 30, 40, 50
    schemes = FS-SA, TS
    p_t_max_mw = none
    problem = p2
    """
    cfg = parse_config(text)
    assert cfg.num_subcarriers == 8 and cfg.noise_grid == (30.0, 40.0, 50.0)
    assert cfg.schemes == ("FS-SA", "TS") and cfg.problem == "p2" and cfg.p_t_max_mw is None
    assert parse_config(format_config(cfg)) == cfg


@pytest.mark.parametrize("text", ["bogus = 1", "trials = 1\ntrials = 2", "trials 5",
                                  "trials = many"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_config_missing(tmp_path):
    with pytest.raises(ConfigError, match="nope.cfg"):
        load_config(tmp_path / "nope.cfg")


def test_resolve_workers(monkeypatch):
    monkeypatch.setenv("SWIPT_THREADS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(1) == 1
    monkeypatch.setenv("SWIPT_THREADS", "x")
    with pytest.raises(ConfigError):
        resolve_workers()
    monkeypatch.delenv("SWIPT_THREADS")
    assert resolve_workers() >= 1


# --------------------------------------------------------------------------- draws

def test_trial_streams_distinct_and_reproducible():
    a = trial_rng(1, 0, 0).standard_normal(4)
    np.testing.assert_array_equal(a, trial_rng(1, 0, 0).standard_normal(4))
    for other in (trial_rng(2, 0, 0), trial_rng(1, 1, 0), trial_rng(1, 0, 1)):
        assert not np.array_equal(a, other.standard_normal(4))


def test_harness_matches_direct_solve():
    gains = [1.0, 0.8, 0.3]
    cfg = SimConfig(num_subcarriers=3, total_power_mw=6.0, q_min_mw=0.5, trials=3,
                    noise_grid=(40.0,), schemes=("FS-SA",))
    (rec,) = run_sweep(cfg, workers=1, channel_source=FixedGains(gains))
    ch = ChannelRealization(gains, 15e3, 1e-4, 0.5)
    direct = solve_p1(compute_metrics(ch, equal_power(3, 2e-3)), 0.5e-3)
    assert rec.mean_objective == pytest.approx(direct.objective, rel=1e-12)
    assert rec.mean_constraint == pytest.approx(direct.constraint_used, rel=1e-12)
    assert rec.mean_info_count == direct.mask.bits.sum()
    assert rec.infeasible_fraction == 0.0


def test_evaluate_draw_consistency(rng):
    from fswipt import sample_rayleigh
    for problem in ("p1", "p2"):
        cfg = SimConfig(problem=problem, p_t_max_mw=4.8, trials=1)
        for _ in range(30):
            ch = ChannelRealization(sample_rayleigh(32, rng), 15e3, 1e-5, 0.5)
            stats = evaluate_draw(cfg, ch)
            np.testing.assert_allclose(stats[:, 2] + stats[:, 3], 32)
            row = dict(zip(cfg.schemes, stats))
            if row["FS-SA"][4]:
                bound = row["C_up" if problem == "p1" else "Q_up"]
                assert row["FS-SA"][0] <= bound[0] * (1 + 1e-12)
                assert row["FS-SPA"][0] >= row["FS-SA"][0] * (1 - 1e-12)


def test_infeasible_draws_excluded():
    cfg = SimConfig(num_subcarriers=2, q_min_mw=100.0, trials=4, noise_grid=(40.0,),
                    schemes=("FS-SA", "TS"))
    recs = run_sweep(cfg, workers=1, channel_source=FixedGains([0.1, 0.1]))
    for r in recs:
        assert r.infeasible_fraction == 1.0 and math.isnan(r.mean_objective)


def test_resource_limit_names_noise_point():
    cfg = small(resolution=10 ** 7, trials=1, noise_grid=(42.0,))
    with pytest.raises(ResourceLimit, match="42 dB"):
        run_sweep(cfg, workers=1)


# --------------------------------------------------------------------------- sweep + CSV

def test_sweep_is_deterministic_and_worker_independent():
    cfg = small()
    one = run_sweep(cfg, workers=1)
    assert one == run_sweep(cfg, workers=1)
    assert one == run_sweep(cfg, workers=2)
    assert [(r.noise_db, r.scheme) for r in one] == sorted((r.noise_db, r.scheme) for r in one)
    assert one != run_sweep(small(seed=8), workers=1)


def test_chunking_does_not_change_results(monkeypatch):
    import fswipt.sim as sim
    cfg = small(trials=30)
    ref = run_sweep(cfg, workers=1)
    monkeypatch.setattr(sim, "CHUNK_TRIALS", 7)
    chunked = run_sweep(cfg, workers=1)
    for a, b in zip(ref, chunked):
        assert a.mean_objective == pytest.approx(b.mean_objective, rel=1e-12)


def test_csv_single_record():
    rec = SweepRecord(30.0, "TS", 1.5, 2.5, 3.0, 5.0, 0.0, 10)
    buf = io.StringIO()
    emit_csv([rec], buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1] == "30,TS,1.5,2.5,3,5,0,10"


def test_csv_empty_raises():
    with pytest.raises(EmptyResult):
        emit_csv([], io.StringIO())


def test_csv_round_trip_and_feedback_column(tmp_path):
    recs = run_sweep(small(trials=10), workers=1)
    path = tmp_path / "out.csv"
    emit_csv(recs, path, feedback_bits=8)
    assert path.read_text().splitlines()[0].endswith(",feedback_bits")
    back = parse_csv(path)
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        assert (a.noise_db, a.scheme, a.trials) == (b.noise_db, b.scheme, b.trials)
        assert float(f"{a.mean_objective:.12g}") == b.mean_objective


def test_plot_script_stub(tmp_path):
    dest = tmp_path / "plot.py"
    write_plot_script("sweep.csv", dest, "p2")
    text = dest.read_text()
    compile(text, str(dest), "exec")
    assert "sweep.csv" in text and "harvested power" in text


def test_more_power_more_capacity():
    lo = run_sweep(small(total_power_mw=64.0, schemes=("FS-SA",)), workers=1)
    hi = run_sweep(small(total_power_mw=128.0, schemes=("FS-SA",)), workers=1)
    for a, b in zip(lo, hi):
        assert b.mean_objective >= a.mean_objective


def test_capacity_grows_as_noise_falls():
    recs = run_sweep(small(schemes=("FS-SA", "C_up")), workers=1)
    for scheme in ("FS-SA", "C_up"):
        series = [r.mean_objective for r in recs if r.scheme == scheme]
        assert series == sorted(series)
