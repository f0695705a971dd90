"""Temporal shifting of workloads onto low-intensity intervals.

Two offline algorithms operate on historical intensity series:

* flexible_start: try every 5-minute start in a window, run contiguously,
  keep the cheapest start.
* pause_resume: within the enlarged window (job duration plus slack), run
  only in the lowest-intensity intervals, pausing in between. Pausing is
  modeled as free and instantaneous.

A threshold formulation (run whenever intensity is below a cutoff) is the
dual of pause_resume, and exhaustive oracles exist for both algorithms so
results can be verified independently.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from datetime import datetime

import numpy as np

from .errors import CoverageError, InfeasibleError, ValidationError
from .grid import INTERVALS_PER_HOUR, IntensitySeries
from .sci import operational_emissions
from .workload import EnergyProfile

# Largest window for which the exhaustive subset oracle will enumerate.
ORACLE_MAX_WINDOW = 26

PAUSES_DENOMINATORS = ("window", "job_duration")


@dataclass(frozen=True)
class Schedule:
    """Strictly increasing series interval indices, one per profile segment."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if not idx:
            raise ValidationError("schedule must contain at least one interval")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError("schedule indices must be strictly increasing")

    @property
    def n_pauses(self) -> int:
        """Maximal inactive gaps strictly between active intervals."""
        return sum(1 for a, b in zip(self.indices, self.indices[1:]) if b > a + 1)

    def is_contiguous(self) -> bool:
        return self.n_pauses == 0


@dataclass(frozen=True)
class SlackBudget:
    """Allowed increase in elapsed duration: absolute hours or a fraction
    of the job's own duration."""

    kind: str  # "absolute_hours" | "relative_fraction"
    value: float

    def __post_init__(self):
        if self.kind not in ("absolute_hours", "relative_fraction"):
            raise ValidationError(f"unknown slack kind {self.kind!r}")
        if not (self.value >= 0):
            raise ValidationError("slack value must be non-negative")

    def intervals(self, job_intervals: int) -> int:
        """Slack in 5-minute intervals. Absolute hours quantize to the grid;
        relative slack rounds up so the job never gets less than requested."""
        if self.kind == "absolute_hours":
            return round(self.value * INTERVALS_PER_HOUR)
        return math.ceil(self.value * job_intervals)

    def label(self) -> str:
        if self.kind == "absolute_hours":
            return f"hours:{self.value:g}"
        return f"percent:{self.value * 100:g}"


@dataclass(frozen=True)
class OptimizationOutcome:
    baseline_grams: float
    optimized_grams: float
    savings_fraction: float
    schedule: Schedule
    n_pauses: int
    pauses_per_hour: float
    window_intervals: int
    forecast_limited: bool = False

    def to_dict(self, include_schedule: bool = True) -> dict:
        d = {
            "baseline_grams": self.baseline_grams,
            "optimized_grams": self.optimized_grams,
            "savings_fraction": self.savings_fraction,
            "n_pauses": self.n_pauses,
            "pauses_per_hour": self.pauses_per_hour,
            "window_intervals": self.window_intervals,
            "forecast_limited": self.forecast_limited,
        }
        if include_schedule:
            d["schedule_indices"] = list(self.schedule.indices)
        return d


def _baseline(profile: EnergyProfile, series: IntensitySeries, i0: int) -> tuple[float, Schedule]:
    n = profile.n_intervals
    if i0 + n > len(series):
        raise CoverageError(
            f"job of {n} intervals starting at index {i0} exceeds series coverage"
        )
    sched = Schedule(tuple(range(i0, i0 + n)))
    return operational_emissions(profile, series, sched), sched


def _outcome(
    profile: EnergyProfile,
    series: IntensitySeries,
    baseline: float,
    schedule: Schedule,
    window_intervals: int,
    pauses_denominator: str = "window",
) -> OptimizationOutcome:
    if pauses_denominator not in PAUSES_DENOMINATORS:
        raise ValidationError(f"unknown pauses denominator {pauses_denominator!r}")
    optimized = operational_emissions(profile, series, schedule)
    n_pauses = schedule.n_pauses
    if pauses_denominator == "window":
        denom_hours = window_intervals / INTERVALS_PER_HOUR
    else:
        denom_hours = profile.n_intervals / INTERVALS_PER_HOUR
    return OptimizationOutcome(
        baseline_grams=baseline,
        optimized_grams=optimized,
        savings_fraction=(baseline - optimized) / baseline if baseline > 0 else 0.0,
        schedule=schedule,
        n_pauses=n_pauses,
        pauses_per_hour=n_pauses / denom_hours,
        window_intervals=window_intervals,
    )


def window_start_index(series: IntensitySeries, t0: datetime) -> int:
    return series.index_of(t0)


def flexible_start(
    profile: EnergyProfile,
    series: IntensitySeries,
    t0: datetime,
    window: SlackBudget,
    pauses_denominator: str = "window",
) -> OptimizationOutcome:
    """Best contiguous run starting within [t0, t0 + window].

    Both window endpoints are candidate starts (W + 1 candidates). Ties go
    to the earliest start. Starts where the job no longer fits in coverage
    are excluded; the baseline start must fit.
    """
    i0 = series.index_of(t0)
    n = profile.n_intervals
    w = window.intervals(n)
    baseline, base_sched = _baseline(profile, series, i0)
    last_start = min(i0 + w, len(series) - n)
    if last_start < i0:
        raise InfeasibleError("no feasible start in window")
    segment = series.values[i0 : last_start + n]
    # totals[s] = sum_j profile[j] * values[i0 + s + j], for every candidate.
    totals = np.correlate(segment, profile.per_interval_kwh, mode="valid")
    best = int(np.argmin(totals))
    sched = Schedule(tuple(range(i0 + best, i0 + best + n)))
    return _outcome(profile, series, baseline, sched, n + w, pauses_denominator)


def _window_bounds(series: IntensitySeries, i0: int, n: int, slack_intervals: int) -> int:
    w = n + slack_intervals
    if i0 + w > len(series):
        raise CoverageError(
            f"window of {w} intervals starting at index {i0} exceeds series coverage"
        )
    return w


def select_cheapest(values: np.ndarray, k: int) -> tuple[int, ...]:
    """Indices of the k lowest values, ties broken toward earlier indices,
    returned in chronological order."""
    order = np.argsort(values, kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))


def pause_resume(
    profile: EnergyProfile,
    series: IntensitySeries,
    t0: datetime,
    slack: SlackBudget,
    pauses_denominator: str = "window",
) -> OptimizationOutcome:
    """Run only during the cheapest intervals of the enlarged window.

    Selects the job-duration many lowest-intensity intervals in the
    (job + slack) window, then executes profile segment j in the j-th
    selected interval chronologically. For non-uniform profiles this
    chronological assignment is a heuristic and may differ from the
    exhaustive optimum; see oracle_pause_resume.
    """
    i0 = series.index_of(t0)
    n = profile.n_intervals
    s = slack.intervals(n)
    w = _window_bounds(series, i0, n, s)
    baseline, _ = _baseline(profile, series, i0)
    window_vals = series.values[i0 : i0 + w]
    chosen = select_cheapest(window_vals, n)
    sched = Schedule(tuple(i0 + i for i in chosen))
    return _outcome(profile, series, baseline, sched, w, pauses_denominator)


def threshold_schedule(
    profile: EnergyProfile,
    series: IntensitySeries,
    t0: datetime,
    window_intervals: int,
    threshold: float,
) -> tuple[Schedule, int]:
    """Run whenever intensity is strictly below the threshold, until the job
    is complete; intervals exactly at the threshold fill remaining demand
    left to right. Returns the schedule and the slack intervals consumed
    (window positions skipped before the job finished).
    """
    i0 = series.index_of(t0)
    n = profile.n_intervals
    if window_intervals < n:
        raise ValidationError("window shorter than job duration")
    if i0 + window_intervals > len(series):
        raise CoverageError("window exceeds series coverage")
    window_vals = series.values[i0 : i0 + window_intervals]
    active = [int(k) for k in np.nonzero(window_vals < threshold)[0][:n]]
    if len(active) < n:
        at = np.nonzero(window_vals == threshold)[0]
        have = set(active)
        for k in at:
            if len(active) >= n:
                break
            have.add(int(k))
            active = sorted(have)
    if len(active) < n:
        raise InfeasibleError("threshold infeasible in window")
    active = sorted(active)[:n]
    slack_used = active[-1] + 1 - n
    return Schedule(tuple(i0 + k for k in active)), slack_used


def oracle_pause_resume(
    profile: EnergyProfile,
    series: IntensitySeries,
    t0: datetime,
    slack: SlackBudget,
    pauses_denominator: str = "window",
) -> OptimizationOutcome:
    """Independent brute-force reference for pause_resume.

    Windows up to ORACLE_MAX_WINDOW intervals are solved by enumerating every
    interval subset of job size (chronological profile assignment, exact
    fsum objective, lexicographic tie-break). Larger windows fall back to
    sweeping threshold_schedule over every distinct intensity in the window.
    """
    i0 = series.index_of(t0)
    n = profile.n_intervals
    s = slack.intervals(n)
    w = _window_bounds(series, i0, n, s)
    baseline, _ = _baseline(profile, series, i0)
    window_vals = series.values[i0 : i0 + w]
    prof = [float(x) for x in profile.per_interval_kwh]

    if w <= ORACLE_MAX_WINDOW:
        best_cost = math.inf
        best_subset = None
        for subset in itertools.combinations(range(w), n):
            cost = math.fsum(p * window_vals[k] for p, k in zip(prof, subset))
            if cost < best_cost:
                best_cost = cost
                best_subset = subset
        sched = Schedule(tuple(i0 + k for k in best_subset))
    else:
        # Threshold sweep: every distinct intensity (and +inf) as a cutoff.
        best_cost = math.inf
        sched = None
        candidates = sorted(set(float(v) for v in window_vals)) + [math.inf]
        for th in candidates:
            try:
                cand, _ = threshold_schedule(profile, series, t0, w, th)
            except InfeasibleError:
                continue
            cost = math.fsum(
                p * series.values[k] for p, k in zip(prof, cand.indices)
            )
            if cost < best_cost:
                best_cost = cost
                sched = cand
        if sched is None:
            raise InfeasibleError("no feasible threshold in window")
    return _outcome(profile, series, baseline, sched, w, pauses_denominator)


def oracle_flexible_start(
    profile: EnergyProfile,
    series: IntensitySeries,
    t0: datetime,
    window: SlackBudget,
    pauses_denominator: str = "window",
) -> OptimizationOutcome:
    """Independent re-enumeration of every candidate start for flexible_start."""
    i0 = series.index_of(t0)
    n = profile.n_intervals
    w = window.intervals(n)
    baseline, _ = _baseline(profile, series, i0)
    prof = [float(x) for x in profile.per_interval_kwh]
    best_cost = math.inf
    best_start = None
    for start in range(i0, i0 + w + 1):
        if start + n > len(series):
            continue
        cost = math.fsum(p * series.values[start + j] for j, p in enumerate(prof))
        if cost < best_cost:
            best_cost = cost
            best_start = start
    if best_start is None:
        raise InfeasibleError("no feasible start in window")
    sched = Schedule(tuple(range(best_start, best_start + n)))
    return _outcome(profile, series, baseline, sched, n + w, pauses_denominator)


def forecast_clamped(
    profile: EnergyProfile,
    series: IntensitySeries,
    t0: datetime,
    requested: SlackBudget,
    horizon_hours: float,
    algorithm: str = "pause_resume",
    pauses_denominator: str = "window",
) -> OptimizationOutcome:
    """Run an optimizer with its window truncated to the forecast horizon.

    Mirrors operating against a forecast of limited length: the scheduling
    window becomes min(requested window, horizon), expressed as an absolute
    slack before dispatching to the underlying algorithm.
    """
    if horizon_hours <= 0:
        raise ValidationError("horizon_hours must be positive")
    n = profile.n_intervals
    horizon_intervals = round(horizon_hours * INTERVALS_PER_HOUR)
    if algorithm == "flexible_start":
        w = min(requested.intervals(n), horizon_intervals)
        clamped = SlackBudget("absolute_hours", w / INTERVALS_PER_HOUR)
        out = flexible_start(profile, series, t0, clamped, pauses_denominator)
    elif algorithm == "pause_resume":
        # Requested total window (job + slack) truncated to the horizon, but
        # never below the job itself.
        total = min(n + requested.intervals(n), max(horizon_intervals, n))
        clamped = SlackBudget("absolute_hours", (total - n) / INTERVALS_PER_HOUR)
        out = pause_resume(profile, series, t0, clamped, pauses_denominator)
    else:
        raise ValidationError(f"unknown algorithm {algorithm!r}")
    return replace(out, forecast_limited=True)
