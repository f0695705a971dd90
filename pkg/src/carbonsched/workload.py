"""Workload descriptions, 5-minute energy profiles, and efficiency metrics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ValidationError

# A job total and its profile sum must agree to this relative tolerance.
TOTAL_PROFILE_RTOL = 1e-6


@dataclass(frozen=True)
class EnergyProfile:
    """Per-5-minute-interval energy use of one job, in kWh."""

    per_interval_kwh: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.per_interval_kwh, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError("profile must be a non-empty 1-D sequence")
        if not np.isfinite(arr).all() or (arr < 0).any():
            raise ValidationError("profile entries must be finite and non-negative")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "per_interval_kwh", arr)

    @property
    def n_intervals(self) -> int:
        return self.per_interval_kwh.size

    @property
    def total_kwh(self) -> float:
        return float(self.per_interval_kwh.sum())

    def is_uniform(self) -> bool:
        first = self.per_interval_kwh[0]
        return bool((self.per_interval_kwh == first).all())

    def scaled(self, factor: float) -> "EnergyProfile":
        return EnergyProfile(self.per_interval_kwh * factor)


@dataclass(frozen=True)
class JobSpec:
    """A compute job: identity, GPU allocation, duration, and energy.

    Exactly one of total_kwh / profile_kwh must be given, or both if they
    agree to TOTAL_PROFILE_RTOL.
    """

    name: str
    gpu_count: int
    gpu_type: str
    duration_minutes: float
    total_kwh: float | None = None
    profile_kwh: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.gpu_count < 1:
            raise ValidationError("gpu_count must be a positive integer")
        if not (self.duration_minutes > 0):
            raise ValidationError("duration_minutes must be positive")
        if self.total_kwh is None and self.profile_kwh is None:
            raise ValidationError("one of total_kwh / profile_kwh is required")
        if self.profile_kwh is not None:
            prof = tuple(float(x) for x in self.profile_kwh)
            object.__setattr__(self, "profile_kwh", prof)
            if any(x < 0 or not math.isfinite(x) for x in prof):
                raise ValidationError("profile_kwh entries must be non-negative")
            expected = math.ceil(self.duration_minutes / 5.0)
            if len(prof) != expected:
                raise ValidationError(
                    f"profile_kwh has {len(prof)} intervals, duration implies {expected}"
                )
            if self.total_kwh is not None:
                s = math.fsum(prof)
                if abs(self.total_kwh - s) > TOTAL_PROFILE_RTOL * abs(self.total_kwh):
                    raise ValidationError(
                        f"total_kwh {self.total_kwh} disagrees with profile sum {s}"
                    )
        if self.total_kwh is not None and not (self.total_kwh > 0):
            raise ValidationError("total_kwh must be positive")

    @property
    def energy_kwh(self) -> float:
        if self.total_kwh is not None:
            return float(self.total_kwh)
        return math.fsum(self.profile_kwh)

    @property
    def duration_hours(self) -> float:
        return self.duration_minutes / 60.0


def quantize(job: JobSpec) -> EnergyProfile:
    """Spread a job's energy onto the 5-minute grid.

    A recorded profile passes through unchanged. Otherwise energy is spread
    uniformly over the duration; a trailing partial interval gets the
    proportional remainder, and the last interval absorbs the floating-point
    residue so the profile sums to total_kwh exactly.
    """
    if job.profile_kwh is not None:
        return EnergyProfile(np.asarray(job.profile_kwh, dtype=float))
    n = math.ceil(job.duration_minutes / 5.0)
    total = job.energy_kwh
    per_full = total * 5.0 / job.duration_minutes
    prof = np.full(n, per_full)
    prof[-1] = total - per_full * (n - 1)
    return EnergyProfile(prof)


@dataclass(frozen=True)
class DerivedMetrics:
    kwh_per_gpu_hour: float
    duration_hours: float
    gpu_hours: float


def derived_metrics(job: JobSpec) -> DerivedMetrics:
    """Cross-experiment efficiency numbers: GPU-hours and kWh per GPU-hour."""
    duration_hours = job.duration_hours
    gpu_hours = job.gpu_count * duration_hours
    return DerivedMetrics(
        kwh_per_gpu_hour=job.energy_kwh / gpu_hours,
        duration_hours=duration_hours,
        gpu_hours=gpu_hours,
    )


def extrapolate_full_run(partial_kwh: float, fraction_complete: float) -> float:
    """Estimate full-run energy from a partial run's energy and progress."""
    if not (0 < fraction_complete <= 1):
        raise ValidationError("fraction_complete must be in (0, 1]")
    return partial_kwh / fraction_complete


def component_fraction(component_watts: dict[str, float]) -> dict[str, float]:
    """Share of total power draw per hardware component."""
    if any(w < 0 for w in component_watts.values()):
        raise ValidationError("component watts must be non-negative")
    total = math.fsum(component_watts.values())
    if total <= 0:
        raise ValidationError("total power draw must be positive")
    return {label: w / total for label, w in component_watts.items()}


def job_from_dict(obj: dict) -> JobSpec:
    try:
        return JobSpec(
            name=str(obj["name"]),
            gpu_count=int(obj["gpu_count"]),
            gpu_type=str(obj["gpu_type"]),
            duration_minutes=float(obj["duration_minutes"]),
            total_kwh=(float(obj["total_kwh"]) if "total_kwh" in obj else None),
            profile_kwh=(
                tuple(obj["profile_kwh"]) if "profile_kwh" in obj else None
            ),
        )
    except KeyError as ex:
        raise ValidationError(f"job spec missing field {ex}") from ex
    except (TypeError, ValueError) as ex:
        raise ValidationError(f"malformed job spec: {ex}") from ex


def load_job(path) -> JobSpec:
    try:
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
    except (OSError, json.JSONDecodeError) as ex:
        raise ValidationError(f"cannot read job spec {path}: {ex}") from ex
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: job spec must be a JSON object")
    return job_from_dict(obj)


def load_job_dir(directory) -> dict[str, JobSpec]:
    from pathlib import Path

    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise ValidationError(f"no job spec files found in {directory}")
    jobs = {}
    for p in paths:
        job = load_job(p)
        jobs[job.name] = job
    return jobs


def reference_jobs() -> dict[str, JobSpec]:
    """The bundled 11-job reference fixture (GPU training runs)."""
    text = resources.files("carbonsched.fixtures").joinpath("reference_jobs.json").read_text()
    return {row["name"]: job_from_dict(row) for row in json.loads(text)}
