"""Acceptance gate: every release criterion, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s`. Criterion 3 builds the
16-region synthetic grid set in a temp directory and runs the full sweep
twice; it is the slow one (a few minutes).
"""

import json
import math
import subprocess
import sys
import time
from datetime import datetime, timezone

import numpy as np
import pytest

from carbonsched import (
    SlackBudget,
    component_fraction,
    derived_metrics,
    extrapolate_full_run,
    flexible_start,
    oracle_flexible_start,
    oracle_pause_resume,
    pause_resume,
    percent_change,
    quantize,
    reference_jobs,
    threshold_schedule,
)
from carbonsched import JobSpec, Schedule, operational_emissions

from conftest import T0, make_profile, make_series

N_PROPERTY_INSTANCES = 1000


def report(criterion, ok, detail=""):
    line = f"ACCEPTANCE [{criterion}] {'PASS' if ok else 'FAIL'} {detail}".rstrip()
    print(line)
    assert ok, line


def hours(n_intervals):
    return SlackBudget("absolute_hours", n_intervals / 12)


class TestCriterion1Arithmetic:
    """Reference-value arithmetic; must finish in well under a second."""

    def test_criterion_1(self):
        t_start = time.monotonic()

        full = extrapolate_full_run(13812.4, 8 / 60)
        report("1.extrapolation", abs(full - 103593) <= 1.0,
               f"full-run estimate {full:.0f} kWh")

        frac = component_fraction(
            {"GPU": 187.1, "CPU0": 22.9, "CPU1": 9.3, "DRAM0": 23.0, "DRAM1": 9.3}
        )
        report("1.gpu_share", round(frac["GPU"] * 100) == 74,
               f"GPU share {frac['GPU']:.4f}")

        rates = {
            name: derived_metrics(job).kwh_per_gpu_hour
            for name, job in reference_jobs().items()
        }
        in_range = all(0.066 <= r <= 0.282 for r in rates.values())
        report("1.kwh_per_gpu_hour", in_range and len(rates) == 11,
               f"range [{min(rates.values()):.3f}, {max(rates.values()):.3f}]"
               f" over {len(rates)} jobs")

        spread = percent_change(2381, 2210)
        report("1.daily_spread", abs(spread - 0.0774) < 5e-5,
               f"midnight vs 06:00 spread {spread * 100:.2f}%")

        series = make_series([200.0] * 432)
        prof = quantize(reference_jobs()["bert_pretrain"])
        grams = operational_emissions(prof, series, Schedule(tuple(range(432))))
        report("1.flat_grid_bert",
               math.isclose(grams, 7460.0, rel_tol=1e-9)
               and abs(grams - 7000) / 7000 <= 0.15,
               f"{grams:.0f} g on a flat 200 g/kWh grid")

        elapsed = time.monotonic() - t_start
        report("1.runtime", elapsed < 1.0, f"{elapsed:.3f} s")


def _random_uniform_instance(rng):
    """Uniform-profile instance with an oracle-enumerable window (<= 26)."""
    w = int(rng.integers(2, 27))
    for _ in range(20):
        n = int(rng.integers(1, w))
        if math.comb(w, n) <= 8000:
            break
    else:
        n = 1
    vals = rng.uniform(10.0, 900.0, size=w + int(rng.integers(0, 5)))
    prof = make_profile([float(rng.uniform(0.1, 2.0))] * n)
    return prof, make_series(vals), hours(w - n)


class TestCriterion2Properties:
    """Property-based substitutes for the non-reproducible published sweeps."""

    def test_oracle_equivalence(self):
        t_start = time.monotonic()
        rng = np.random.default_rng(2024)
        for i in range(N_PROPERTY_INSTANCES):
            prof, series, slack = _random_uniform_instance(rng)
            pr = pause_resume(prof, series, T0, slack)
            pr_oracle = oracle_pause_resume(prof, series, T0, slack)
            assert pr.optimized_grams == pr_oracle.optimized_grams, i
            fs = flexible_start(prof, series, T0, slack)
            fs_oracle = oracle_flexible_start(prof, series, T0, slack)
            assert fs.optimized_grams == fs_oracle.optimized_grams, i
        elapsed = time.monotonic() - t_start
        report("2.oracle_equivalence", elapsed < 60.0,
               f"{N_PROPERTY_INSTANCES} instances, exact match, {elapsed:.1f} s")

    def test_dominance(self):
        rng = np.random.default_rng(77)
        violations = 0
        for _ in range(N_PROPERTY_INSTANCES):
            prof, series, slack = _random_uniform_instance(rng)
            fs = flexible_start(prof, series, T0, slack)
            pr = pause_resume(prof, series, T0, slack)
            if fs.savings_fraction > pr.savings_fraction + 1e-12:
                violations += 1
        report("2.dominance", violations == 0,
               f"{violations} violations in {N_PROPERTY_INSTANCES} instances")

    def test_monotonicity(self):
        rng = np.random.default_rng(31)
        bad = 0
        n_instances = 60
        for _ in range(n_instances):
            n_job = int(rng.integers(6, 60))
            vals = rng.uniform(20.0, 900.0, size=n_job * 3 + 24 * 12 + 40)
            series = make_series(vals)
            prof = make_profile([float(rng.uniform(0.1, 2.0))] * n_job)
            for fn in (flexible_start, pause_resume):
                prev = -1.0
                for h in (6, 12, 18, 24):
                    s = fn(prof, series, T0, SlackBudget("absolute_hours", h)).savings_fraction
                    if s < prev - 1e-12:
                        bad += 1
                    prev = s
                prev = -1.0
                for pct in (0.25, 0.5, 0.75, 1.0):
                    s = fn(prof, series, T0, SlackBudget("relative_fraction", pct)).savings_fraction
                    if s < prev - 1e-12:
                        bad += 1
                    prev = s
        report("2.monotonicity", bad == 0,
               f"{bad} decreases across {n_instances} instances x both slack ladders")

    def test_duality(self):
        rng = np.random.default_rng(55)
        mismatches = 0
        n_instances = 400
        for _ in range(n_instances):
            prof, series, slack = _random_uniform_instance(rng)
            n = prof.n_intervals
            w = n + slack.intervals(n)
            window_sorted = sorted(float(v) for v in series.values[:w])
            threshold = window_sorted[n] if n < w else math.inf
            pr = pause_resume(prof, series, T0, slack)
            sched, _ = threshold_schedule(prof, series, T0, w, threshold)
            if sched.indices != pr.schedule.indices:
                mismatches += 1
        report("2.duality", mismatches == 0,
               f"{mismatches} mismatches in {n_instances} distinct-intensity instances")

    def test_flat_grid_null(self):
        series = make_series([321.0] * 600)
        prof = make_profile([0.7] * 18)
        fs = flexible_start(prof, series, T0, hours(288))
        pr = pause_resume(prof, series, T0, hours(288))
        report("2.flat_null",
               fs.savings_fraction == 0.0 and pr.savings_fraction == 0.0,
               f"FS {fs.savings_fraction}, P&R {pr.savings_fraction}")

    def test_conservation(self):
        rng = np.random.default_rng(8)
        worst_residue = 0.0
        for _ in range(500):
            duration = float(rng.uniform(1.0, 20000.0))
            total = float(rng.uniform(1e-4, 1e5))
            prof = quantize(JobSpec("c", 1, "V100", duration, total_kwh=total))
            worst_residue = max(
                worst_residue,
                abs(float(prof.per_interval_kwh.sum()) - total) / max(1.0, total),
            )
        series = make_series(rng.uniform(50, 800, size=40))
        prof = make_profile(rng.uniform(0.05, 3.0, size=10))
        sched = Schedule(tuple(range(3, 13)))
        base = operational_emissions(prof, series, sched)
        worst_lin = 0.0
        for c in (1e-3, 0.5, 3.0, 1e4):
            scaled = operational_emissions(prof.scaled(c), series, sched)
            worst_lin = max(worst_lin, abs(scaled - base * c) / (base * c))
        report("2.conservation", worst_residue <= 1e-9 and worst_lin <= 1e-9,
               f"quantize residue {worst_residue:.1e}, linearity {worst_lin:.1e}")


@pytest.fixture(scope="session")
def fixture_env(tmp_path_factory):
    """Materialized 16-region grid set plus the 11 reference job files."""
    root = tmp_path_factory.mktemp("sweep_fixture")
    grids = root / "grids"
    jobs = root / "jobs"
    jobs.mkdir()
    code = subprocess.run(
        [sys.executable, "-m", "carbonsched.cli", "gen-fixture",
         "--out", str(grids), "--days", "385"],
        capture_output=True, text=True,
    )
    assert code.returncode == 0, code.stderr
    for name, job in reference_jobs().items():
        (jobs / f"{name}.json").write_text(json.dumps({
            "name": job.name, "gpu_count": job.gpu_count,
            "gpu_type": job.gpu_type, "duration_minutes": job.duration_minutes,
            "total_kwh": job.total_kwh,
        }))
    return grids, jobs


class TestCriterion3SweepDeterminism:
    def test_sweep_byte_identical_and_fully_sampled(self, fixture_env):
        grids, jobs = fixture_env
        t_start = time.monotonic()
        argv = [
            sys.executable, "-m", "carbonsched.cli", "sweep",
            "--grids", str(grids), "--jobs", str(jobs),
            "--year", "2020", "--samples-per-month", "5",
            "--slack-set", "hours:24,percent:100",
        ]
        run1 = subprocess.run(argv + ["--threads", "1"], capture_output=True)
        run2 = subprocess.run(argv + ["--threads", "4"], capture_output=True)
        elapsed = time.monotonic() - t_start
        assert run1.returncode == 0, run1.stderr.decode()
        assert run2.returncode == 0, run2.stderr.decode()
        identical = run1.stdout == run2.stdout

        rep = json.loads(run1.stdout)
        counts_ok = True
        for model, by_region in rep["cells"].items():
            for region, by_slack in by_region.items():
                for slack, by_alg in by_slack.items():
                    for alg, cell in by_alg.items():
                        if cell["samples"] != 60 or cell["excluded"] != 0:
                            counts_ok = False
        report("3.sweep_determinism", identical and counts_ok,
               f"byte-identical across runs/threads={identical}, "
               f"60 samples per cell={counts_ok}, {elapsed:.0f} s")
        report("3.sweep_runtime", elapsed < 300.0, f"{elapsed:.0f} s for 2 runs")


class TestCriterion4ToyInstancesViaCli:
    def run_cli(self, argv):
        proc = subprocess.run(
            [sys.executable, "-m", "carbonsched.cli"] + argv,
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        return json.loads(proc.stdout)

    def test_flexible_start_toy(self, tmp_path):
        from carbonsched import write_series

        grid = tmp_path / "dip.csv"
        write_series(make_series([300.0, 100.0, 100.0, 300.0], region_id="dip"), grid)
        job = tmp_path / "job.json"
        job.write_text(json.dumps({
            "name": "fs_toy", "gpu_count": 1, "gpu_type": "V100",
            "duration_minutes": 10, "total_kwh": 2.0,
        }))
        rep = self.run_cli([
            "flexible-start", "--grid", str(grid), "--job", str(job),
            "--start", "2020-01-01T00:00:00Z", "--window-hours", str(2 / 12),
        ])
        ok = (
            rep["baseline_grams"] == 400.0
            and rep["optimized_grams"] == 200.0
            and rep["savings_fraction"] == 0.5
        )
        report("4.flexible_start_toy", ok,
               f"savings {rep['savings_fraction'] * 100:.0f}%")

    def test_pause_resume_toy(self, tmp_path):
        from carbonsched import write_series

        grid = tmp_path / "zig.csv"
        write_series(
            make_series([100.0, 300.0, 100.0, 300.0, 100.0], region_id="zig"), grid
        )
        job = tmp_path / "job.json"
        job.write_text(json.dumps({
            "name": "pr_toy", "gpu_count": 1, "gpu_type": "V100",
            "duration_minutes": 15, "total_kwh": 3.0,
        }))
        rep = self.run_cli([
            "pause-resume", "--grid", str(grid), "--job", str(job),
            "--start", "2020-01-01T00:00:00Z", "--slack-hours", str(2 / 12),
        ])
        ok = (
            rep["baseline_grams"] == 500.0
            and rep["optimized_grams"] == 300.0
            and abs(rep["savings_fraction"] - 0.4) < 1e-15
            and rep["n_pauses"] == 2
            and abs(rep["pauses_per_hour"] - 4.8) < 1e-12
        )
        report("4.pause_resume_toy", ok,
               f"savings {rep['savings_fraction'] * 100:.0f}%, "
               f"{rep['n_pauses']} pauses, {rep['pauses_per_hour']:.1f} pauses/hour")
