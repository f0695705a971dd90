"""Operational emissions and software-carbon-intensity reporting.

Emissions integrate a job's 5-minute energy profile against the marginal
intensity of the intervals it actually executes in (kWh x g/kWh = grams).
Embodied carbon is a pass-through constant; datacenter overhead enters as
an optional PUE multiplier on energy.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ValidationError
from .grid import IntensitySeries
from .workload import EnergyProfile


@dataclass(frozen=True)
class EquivalenceFactors:
    """Metric tons CO2eq per everyday unit (US averages)."""

    phone_charge_t: float = 8.22e-6
    mile_driven_t: float = 3.98e-4
    gallon_gasoline_t: float = 8.887e-3
    barrel_oil_t: float = 0.43
    home_year_t: float = 8.30
    railcar_coal_t: float = 181.29

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValidationError(f"equivalence factor {f.name} must be positive")

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class SciReport:
    e_kwh: float
    i_effective_g_per_kwh: float
    o_grams: float
    m_grams: float
    c_grams: float
    r: str
    pue: float

    def to_dict(self) -> dict:
        return {
            "e_kwh": self.e_kwh,
            "i_effective_g_per_kwh": self.i_effective_g_per_kwh,
            "o_grams": self.o_grams,
            "m_grams": self.m_grams,
            "c_grams": self.c_grams,
            "r": self.r,
            "pue": self.pue,
        }


def _check_schedule(profile: EnergyProfile, series: IntensitySeries, indices) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size != profile.n_intervals:
        raise ValidationError(
            f"schedule has {idx.size} intervals, profile has {profile.n_intervals}"
        )
    if idx.size > 1 and not (np.diff(idx) > 0).all():
        raise ValidationError("schedule indices must be strictly increasing")
    if idx[0] < 0 or idx[-1] >= len(series):
        raise ValidationError("schedule index out of series range")
    return idx


def operational_emissions(profile: EnergyProfile, series: IntensitySeries, schedule) -> float:
    """Grams CO2eq when profile segment j runs in the j-th scheduled interval."""
    indices = getattr(schedule, "indices", schedule)
    idx = _check_schedule(profile, series, indices)
    return float(np.dot(profile.per_interval_kwh, series.values[idx]))


def sci_report(
    profile: EnergyProfile,
    series: IntensitySeries,
    schedule,
    m_grams: float = 0.0,
    r: str = "one training job",
    pue: float = 1.0,
) -> SciReport:
    """Full report: energy, effective intensity, operational and total carbon."""
    if pue < 1.0:
        raise ValidationError("pue must be >= 1")
    if m_grams < 0:
        raise ValidationError("embodied grams must be non-negative")
    scaled = profile.scaled(pue)
    e = scaled.total_kwh
    o = operational_emissions(scaled, series, schedule)
    return SciReport(
        e_kwh=e,
        i_effective_g_per_kwh=(o / e if e > 0 else 0.0),
        o_grams=o,
        m_grams=m_grams,
        c_grams=o + m_grams,
        r=r,
        pue=pue,
    )


def to_equivalences(grams: float, factors: EquivalenceFactors | None = None) -> dict[str, float]:
    """Express grams CO2eq as counts of everyday emission sources."""
    if grams < 0:
        raise ValidationError("grams must be non-negative")
    factors = factors or EquivalenceFactors()
    tons = grams / 1e6
    return {
        label.removesuffix("_t"): tons / factor
        for label, factor in factors.as_dict().items()
    }


def from_equivalences(quantities: dict[str, float], factors: EquivalenceFactors | None = None) -> dict[str, float]:
    """Inverse of to_equivalences, per label; returns grams per label."""
    factors = factors or EquivalenceFactors()
    by_label = {k.removesuffix("_t"): v for k, v in factors.as_dict().items()}
    return {label: qty * by_label[label] * 1e6 for label, qty in quantities.items()}


def percent_change(a: float, b: float) -> float:
    """Relative change of a versus reference b, as a fraction."""
    if b == 0:
        raise ValidationError("reference value must be non-zero")
    return (a - b) / b
