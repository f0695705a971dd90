"""Marginal grid carbon-intensity time series: model, CSV ingest, synthesis.

A series is a gap-free sequence of non-negative intensities (gCO2eq/kWh) on
a fixed 5-minute UTC grid. Each value is treated as the constant marginal
intensity over its interval. Inputs at finer granularity are averaged down
to 5-minute buckets; coarser inputs are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np
import pandas as pd

from .errors import CoverageError, ValidationError

STEP_SECONDS = 300
INTERVALS_PER_HOUR = 12
INTERVALS_PER_DAY = 288
CSV_HEADER = "timestamp,intensity_gco2_per_kwh"

# Longest interior gap forward_fill will repair (1 hour). Longer gaps are
# treated as data outages that would silently corrupt optimization results.
MAX_FILL_SLOTS = 12


def _require_utc(ts: datetime, what: str) -> datetime:
    if ts.tzinfo is None or ts.utcoffset() != timedelta(0):
        raise ValidationError(f"{what} must be timezone-aware UTC, got {ts!r}")
    return ts


@dataclass(frozen=True)
class IntensitySeries:
    """Immutable 5-minute marginal intensity series for one region."""

    region_id: str
    epoch_start: datetime
    values: np.ndarray
    step_seconds: int = STEP_SECONDS
    filled_slots: int = 0  # interior gaps repaired at load time

    def __post_init__(self):
        _require_utc(self.epoch_start, "epoch_start")
        if self.step_seconds != STEP_SECONDS:
            raise ValidationError(
                f"step_seconds must be {STEP_SECONDS}, got {self.step_seconds}"
            )
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValidationError("values must be a non-empty 1-D sequence")
        if not np.isfinite(vals).all():
            raise ValidationError("intensity values must be finite")
        if (vals < 0).any():
            raise ValidationError("negative intensity")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> datetime:
        """Exclusive end of coverage."""
        return self.epoch_start + timedelta(seconds=len(self) * self.step_seconds)

    def timestamp_at(self, k: int) -> datetime:
        return self.epoch_start + timedelta(seconds=k * self.step_seconds)

    def index_of(self, ts: datetime) -> int:
        """Interval index of an aligned timestamp; errors if misaligned or
        outside coverage."""
        _require_utc(ts, "timestamp")
        offset = (ts - self.epoch_start).total_seconds()
        if offset % self.step_seconds != 0:
            raise ValidationError(
                f"timestamp {ts.isoformat()} is not aligned to the 5-minute grid"
            )
        k = int(offset // self.step_seconds)
        if k < 0 or k >= len(self):
            raise CoverageError(
                f"timestamp {ts.isoformat()} outside coverage "
                f"[{self.epoch_start.isoformat()}, {self.end.isoformat()})"
            )
        return k

    def slice(self, start: datetime, n_intervals: int) -> "IntensitySeries":
        k = self.index_of(start)
        if n_intervals <= 0:
            raise ValidationError("n_intervals must be positive")
        if k + n_intervals > len(self):
            raise CoverageError("window exceeds series coverage")
        return IntensitySeries(
            region_id=self.region_id,
            epoch_start=start,
            values=self.values[k : k + n_intervals],
        )


@dataclass(frozen=True)
class SyntheticGridSpec:
    """Deterministic sinusoid-plus-noise generator parameters.

    values[k] = max(0, base + amplitude * sin(2*pi*(hour_k - phase_hours)/period_hours)
                       + N(0, noise_stddev))
    """

    base: float
    amplitude: float = 0.0
    period_hours: float = 24.0
    phase_hours: float = 0.0
    days: int = 1
    noise_stddev: float = 0.0
    seed: int = 0
    region_id: str = "synthetic"
    epoch_start: datetime = field(
        default_factory=lambda: datetime(2020, 1, 1, tzinfo=timezone.utc)
    )

    def __post_init__(self):
        if self.period_hours <= 0:
            raise ValidationError("period_hours must be positive")
        if self.days <= 0:
            raise ValidationError("days must be positive")
        if self.noise_stddev < 0:
            raise ValidationError("noise_stddev must be non-negative")


def generate_synthetic(spec: SyntheticGridSpec) -> IntensitySeries:
    """Generate a clamped sinusoidal series; pure function of the spec."""
    n = spec.days * INTERVALS_PER_DAY
    hours = np.arange(n) * (STEP_SECONDS / 3600.0)
    vals = spec.base + spec.amplitude * np.sin(
        2.0 * math.pi * (hours - spec.phase_hours) / spec.period_hours
    )
    if spec.noise_stddev > 0:
        rng = np.random.default_rng(spec.seed)
        vals = vals + rng.normal(0.0, spec.noise_stddev, n)
    np.maximum(vals, 0.0, out=vals)
    return IntensitySeries(
        region_id=spec.region_id, epoch_start=spec.epoch_start, values=vals
    )


def load_series(path, fill_policy: str = "reject", region_id: str | None = None) -> IntensitySeries:
    """Load a region CSV (see CSV_HEADER) into a validated series.

    fill_policy: "reject" errors on any missing 5-minute slot;
    "forward_fill" repairs interior gaps up to MAX_FILL_SLOTS consecutive
    slots with the last seen value and records the count in filled_slots.
    """
    if fill_policy not in ("reject", "forward_fill"):
        raise ValidationError(f"unknown fill_policy {fill_policy!r}")
    try:
        df = pd.read_csv(path, dtype=str)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as ex:
        raise ValidationError(f"cannot parse {path}: {ex}") from ex
    if list(df.columns) != CSV_HEADER.split(","):
        raise ValidationError(
            f"{path}: expected header {CSV_HEADER!r}, got {','.join(df.columns)!r}"
        )
    if len(df) == 0:
        raise ValidationError(f"{path}: no data rows")

    ts_str = df["timestamp"].astype(str)
    is_utc = ts_str.str.endswith("Z") | ts_str.str.endswith("+00:00")
    if not is_utc.all():
        bad = ts_str[~is_utc].iloc[0]
        raise ValidationError(
            f"{path}: timestamps must be UTC (Z or +00:00 suffix), got {bad!r}"
        )
    try:
        ts = pd.to_datetime(ts_str, utc=True, format="ISO8601")
    except (ValueError, pd.errors.ParserError) as ex:
        raise ValidationError(f"{path}: malformed timestamp: {ex}") from ex
    try:
        vals = pd.to_numeric(df["intensity_gco2_per_kwh"]).to_numpy(dtype=float)
    except (ValueError, TypeError) as ex:
        raise ValidationError(f"{path}: malformed intensity value: {ex}") from ex
    if np.isnan(vals).any():
        raise ValidationError(f"{path}: missing intensity value")
    if (vals < 0).any():
        raise ValidationError(f"{path}: negative intensity")

    secs = ts.astype("int64").to_numpy() // 10**9
    if len(secs) > 1:
        diffs = np.diff(secs)
        if (diffs <= 0).any():
            raise ValidationError(f"{path}: non-monotonic timestamps")
    else:
        diffs = np.array([], dtype=np.int64)

    if region_id is None:
        from pathlib import Path

        region_id = Path(path).stem

    epoch = datetime.fromtimestamp(int(secs[0]), tz=timezone.utc)

    step = int(diffs.min()) if diffs.size else STEP_SECONDS
    if step < STEP_SECONDS:
        # Finer granularity: average down to 5-minute buckets.
        if STEP_SECONDS % step != 0 or not (diffs == step).all():
            raise ValidationError(
                f"{path}: sub-5-minute data must be gap-free on a step dividing "
                f"{STEP_SECONDS} s (found step {step} s)"
            )
        ratio = STEP_SECONDS // step
        if len(vals) % ratio != 0:
            raise ValidationError(
                f"{path}: sub-5-minute data does not fill whole 5-minute buckets"
            )
        vals = vals.reshape(-1, ratio).mean(axis=1)
        return IntensitySeries(region_id=region_id, epoch_start=epoch, values=vals)
    if diffs.size and (diffs % STEP_SECONDS != 0).any():
        # Not a divisor of 300 s and not on its multiples: neither
        # resampleable nor interpretable as missing 5-minute slots.
        raise ValidationError(
            f"{path}: timestamps not on the 5-minute grid (coarser or mixed "
            "steps cannot be resampled)"
        )

    slots = (secs - secs[0]) // STEP_SECONDS
    n_expected = int(slots[-1]) + 1
    if n_expected == len(vals):
        return IntensitySeries(region_id=region_id, epoch_start=epoch, values=vals)

    if fill_policy == "reject":
        n_missing = n_expected - len(vals)
        raise ValidationError(
            f"{path}: {n_missing} missing 5-minute slot(s) (fill_policy=reject)"
        )
    gap_lengths = np.diff(slots) - 1
    worst = int(gap_lengths.max())
    if worst > MAX_FILL_SLOTS:
        raise ValidationError(
            f"{path}: gap of {worst} slots exceeds forward-fill cap of "
            f"{MAX_FILL_SLOTS}"
        )
    full = np.full(n_expected, np.nan)
    full[slots] = vals
    filled = int(np.isnan(full).sum())
    full = pd.Series(full).ffill().to_numpy()
    return IntensitySeries(
        region_id=region_id, epoch_start=epoch, values=full, filled_slots=filled
    )


def _format_value(v: float) -> str:
    return repr(float(v))


def write_series(series: IntensitySeries, path) -> None:
    """Write the canonical CSV form; load_series round-trips it exactly."""
    n = len(series)
    start = np.datetime64(series.epoch_start.replace(tzinfo=None), "s")
    stamps = np.datetime_as_string(
        start + np.arange(n, dtype="timedelta64[s]") * STEP_SECONDS, timezone="UTC"
    )
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(CSV_HEADER + "\n")
        f.writelines(
            f"{t},{_format_value(v)}\n" for t, v in zip(stamps, series.values)
        )


def load_region_dir(directory, fill_policy: str = "reject") -> dict[str, IntensitySeries]:
    """Load every <region_id>.csv in a directory, keyed by region id."""
    from pathlib import Path

    paths = sorted(Path(directory).glob("*.csv"))
    if not paths:
        raise ValidationError(f"no region CSV files found in {directory}")
    return {p.stem: load_series(p, fill_policy=fill_policy) for p in paths}
