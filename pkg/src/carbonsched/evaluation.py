"""Evaluation harnesses: region comparison, time-of-day tables, and
year-long sweeps of optimizer gains sampled monthly.

All aggregation is order-independent and deterministic: shuffling samples
or changing worker counts never changes a reported number.
"""

from __future__ import annotations

import calendar
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import CoverageError, ValidationError
from .grid import IntensitySeries
from .scheduler import (
    OptimizationOutcome,
    Schedule,
    SlackBudget,
    flexible_start,
    pause_resume,
)
from .sci import operational_emissions
from .workload import JobSpec, quantize

QUARTILE_METHOD = "linear"  # order-statistic linear interpolation

DEFAULT_SAMPLE_DAYS = (3, 9, 15, 21, 27)

ALGORITHMS = ("flexible_start", "pause_resume")


def sampling_plan(
    year: int,
    samples_per_month: int,
    mode: str = "fixed_days",
    seed: int = 0,
    days: tuple[int, ...] = DEFAULT_SAMPLE_DAYS,
) -> list[datetime]:
    """Start timestamps spread over a year, a fixed count per month.

    fixed_days picks the same days-of-month at 00:00 UTC every month;
    seeded_random draws aligned 5-minute slots uniformly within each month.
    """
    if samples_per_month < 1:
        raise ValidationError("samples_per_month must be >= 1")
    out: list[datetime] = []
    if mode == "fixed_days":
        if samples_per_month > len(days):
            raise ValidationError(
                f"fixed_days mode supports at most {len(days)} samples per month"
            )
        for month in range(1, 13):
            for day in days[:samples_per_month]:
                out.append(datetime(year, month, day, tzinfo=timezone.utc))
    elif mode == "seeded_random":
        rng = random.Random(seed)
        for month in range(1, 13):
            n_days = calendar.monthrange(year, month)[1]
            slots = sorted(rng.sample(range(n_days * 288), samples_per_month))
            start = datetime(year, month, 1, tzinfo=timezone.utc)
            out.extend(start + timedelta(seconds=300 * s) for s in slots)
    else:
        raise ValidationError(f"unknown sampling mode {mode!r}")
    return out


@dataclass(frozen=True)
class RegionStats:
    region_id: str
    min_grams: float
    q1_grams: float
    mean_grams: float
    q3_grams: float
    max_grams: float
    samples: int
    skipped: int

    def to_dict(self) -> dict:
        return {
            "region_id": self.region_id,
            "min_grams": self.min_grams,
            "q1_grams": self.q1_grams,
            "mean_grams": self.mean_grams,
            "q3_grams": self.q3_grams,
            "max_grams": self.max_grams,
            "samples": self.samples,
            "skipped": self.skipped,
            "quartile_method": QUARTILE_METHOD,
        }


def baseline_emissions(job: JobSpec, series: IntensitySeries, start: datetime) -> float:
    """Emissions of an unoptimized contiguous run beginning at start."""
    profile = quantize(job)
    i0 = series.index_of(start)
    n = profile.n_intervals
    if i0 + n > len(series):
        raise CoverageError("job exceeds series coverage")
    return operational_emissions(profile, series, Schedule(tuple(range(i0, i0 + n))))


def region_comparison(
    job: JobSpec,
    region_series: dict[str, IntensitySeries],
    samples: list[datetime],
) -> dict[str, RegionStats]:
    """Baseline-emissions distribution per region over the sampled starts."""
    out = {}
    for region_id in sorted(region_series):
        series = region_series[region_id]
        grams = []
        skipped = 0
        for start in samples:
            try:
                grams.append(baseline_emissions(job, series, start))
            except CoverageError:
                skipped += 1
        if not grams:
            raise CoverageError(f"region {region_id} covers no sampled window")
        arr = np.array(grams)
        q1, q3 = np.quantile(arr, [0.25, 0.75], method=QUARTILE_METHOD)
        out[region_id] = RegionStats(
            region_id=region_id,
            min_grams=float(arr.min()),
            q1_grams=float(q1),
            mean_grams=float(arr.mean()),
            q3_grams=float(q3),
            max_grams=float(arr.max()),
            samples=len(grams),
            skipped=skipped,
        )
    return out


def time_of_day_sweep(
    job: JobSpec,
    series: IntensitySeries,
    date: datetime,
    hours: list[float],
) -> dict[float, float]:
    """Baseline emissions for contiguous runs starting at each hour offset
    of the given UTC day."""
    day = date.replace(hour=0, minute=0, second=0, microsecond=0)
    out = {}
    for h in hours:
        start = day + timedelta(hours=h)
        out[h] = baseline_emissions(job, series, start)
    return out


@dataclass(frozen=True)
class CellStats:
    mean_gain: float
    mean_pauses_per_hour: float
    samples: int
    excluded: int


@dataclass
class SweepReport:
    """Mean optimizer gains per (job, region, slack, algorithm) cell, plus
    the cross-region pooled means."""

    cells: dict[tuple[str, str, str, str], CellStats]
    cross_region: dict[tuple[str, str, str], CellStats]
    metadata: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        nested: dict = {}
        for (model, region, slack, alg), st in self.cells.items():
            nested.setdefault(model, {}).setdefault(region, {}).setdefault(slack, {})[
                alg
            ] = {
                "mean_gain": st.mean_gain,
                "mean_pauses_per_hour": st.mean_pauses_per_hour,
                "samples": st.samples,
                "excluded": st.excluded,
            }
        cross: dict = {}
        for (model, slack, alg), st in self.cross_region.items():
            cross.setdefault(model, {}).setdefault(slack, {})[alg] = {
                "mean_gain": st.mean_gain,
                "mean_pauses_per_hour": st.mean_pauses_per_hour,
                "samples": st.samples,
                "excluded": st.excluded,
            }
        return {"cells": nested, "cross_region": cross, "metadata": self.metadata}

    def to_csv_rows(self) -> list[str]:
        rows = [
            "model,region,slack_kind,slack_value,algorithm,mean_gain,"
            "mean_pauses_per_hour,samples"
        ]
        for key in sorted(self.cells):
            model, region, slack, alg = key
            st = self.cells[key]
            kind, value = slack.split(":", 1)
            rows.append(
                f"{model},{region},{kind},{value},{alg},{st.mean_gain!r},"
                f"{st.mean_pauses_per_hour!r},{st.samples}"
            )
        return rows


_ALGORITHM_FNS = {"flexible_start": flexible_start, "pause_resume": pause_resume}


def _sweep_cell(
    job: JobSpec,
    series: IntensitySeries,
    samples: list[datetime],
    slacks: list[SlackBudget],
    algorithms: tuple[str, ...],
    pauses_denominator: str,
) -> dict[tuple[str, str], tuple[list[float], list[float], int]]:
    """Per-sample gains for one (job, region) pair, keyed (slack, algorithm)."""
    profile = quantize(job)
    out: dict[tuple[str, str], tuple[list[float], list[float], int]] = {}
    for slack in slacks:
        for alg in algorithms:
            fn = _ALGORITHM_FNS[alg]
            gains: list[float] = []
            pauses: list[float] = []
            excluded = 0
            for start in samples:
                try:
                    res: OptimizationOutcome = fn(
                        profile, series, start, slack, pauses_denominator
                    )
                except CoverageError:
                    excluded += 1
                    continue
                gains.append(res.savings_fraction)
                pauses.append(res.pauses_per_hour)
            out[(slack.label(), alg)] = (gains, pauses, excluded)
    return out


def gains_sweep(
    jobs: dict[str, JobSpec],
    regions: dict[str, IntensitySeries],
    slacks: list[SlackBudget],
    samples: list[datetime],
    algorithms: tuple[str, ...] = ALGORITHMS,
    pauses_denominator: str = "window",
    threads: int = 1,
) -> SweepReport:
    """Average optimizer gains over the sampled starts, per cell and pooled
    across regions. Parallelism is across (job, region) pairs and does not
    affect any reported value."""
    for alg in algorithms:
        if alg not in _ALGORITHM_FNS:
            raise ValidationError(f"unknown algorithm {alg!r}")
    tasks = [(m, r) for m in sorted(jobs) for r in sorted(regions)]

    def run(task):
        model, region = task
        return task, _sweep_cell(
            jobs[model], regions[region], samples, slacks, algorithms,
            pauses_denominator,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(run, tasks))
    else:
        results = dict(map(run, tasks))

    cells: dict[tuple[str, str, str, str], CellStats] = {}
    pooled: dict[tuple[str, str, str], tuple[list[float], list[float], int]] = {}
    for (model, region), cell in results.items():
        for (slack_label, alg), (gains, pauses, excluded) in cell.items():
            cells[(model, region, slack_label, alg)] = CellStats(
                mean_gain=float(np.mean(gains)) if gains else float("nan"),
                mean_pauses_per_hour=float(np.mean(pauses)) if pauses else float("nan"),
                samples=len(gains),
                excluded=excluded,
            )
            key = (model, slack_label, alg)
            acc = pooled.setdefault(key, ([], [], 0))
            acc[0].extend(gains)
            acc[1].extend(pauses)
            pooled[key] = (acc[0], acc[1], acc[2] + excluded)
    cross = {
        key: CellStats(
            mean_gain=float(np.mean(gains)) if gains else float("nan"),
            mean_pauses_per_hour=float(np.mean(pauses)) if pauses else float("nan"),
            samples=len(gains),
            excluded=excluded,
        )
        for key, (gains, pauses, excluded) in pooled.items()
    }
    return SweepReport(
        cells=cells,
        cross_region=cross,
        metadata={
            "samples": [s.isoformat() for s in samples],
            "pauses_denominator": pauses_denominator,
            "algorithms": list(algorithms),
            "quartile_method": QUARTILE_METHOD,
        },
    )
