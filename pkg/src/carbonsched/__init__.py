"""Carbon-aware emissions accounting and temporal scheduling for compute
workloads."""

from .errors import (
    CarbonSchedError,
    CoverageError,
    InfeasibleError,
    InvariantError,
    ValidationError,
)
from .grid import (
    IntensitySeries,
    SyntheticGridSpec,
    generate_synthetic,
    load_region_dir,
    load_series,
    write_series,
)
from .sci import (
    EquivalenceFactors,
    SciReport,
    operational_emissions,
    percent_change,
    sci_report,
    to_equivalences,
)
from .scheduler import (
    OptimizationOutcome,
    Schedule,
    SlackBudget,
    flexible_start,
    forecast_clamped,
    oracle_flexible_start,
    oracle_pause_resume,
    pause_resume,
    threshold_schedule,
)
from .workload import (
    EnergyProfile,
    JobSpec,
    component_fraction,
    derived_metrics,
    extrapolate_full_run,
    load_job,
    quantize,
    reference_jobs,
)

__version__ = "0.1.0"

__all__ = [
    "CarbonSchedError",
    "CoverageError",
    "EnergyProfile",
    "EquivalenceFactors",
    "InfeasibleError",
    "IntensitySeries",
    "InvariantError",
    "JobSpec",
    "OptimizationOutcome",
    "Schedule",
    "SciReport",
    "SlackBudget",
    "SyntheticGridSpec",
    "ValidationError",
    "component_fraction",
    "derived_metrics",
    "extrapolate_full_run",
    "flexible_start",
    "forecast_clamped",
    "generate_synthetic",
    "load_job",
    "load_region_dir",
    "load_series",
    "operational_emissions",
    "oracle_flexible_start",
    "oracle_pause_resume",
    "pause_resume",
    "percent_change",
    "quantize",
    "reference_jobs",
    "sci_report",
    "threshold_schedule",
    "to_equivalences",
    "write_series",
]
