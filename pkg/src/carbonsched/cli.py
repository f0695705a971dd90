"""Command-line interface.

Subcommands mirror the library: emissions reporting, the two optimizers,
region/time-of-day comparisons, year-long sweeps, equivalence conversion,
and synthetic grid generation. Reports go to stdout (JSON by default,
CSV with --format csv); diagnostics go to stderr.

Exit codes: 0 success, 2 input validation, 3 coverage/infeasibility,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from .errors import CoverageError, InvariantError, ValidationError
from .evaluation import (
    gains_sweep,
    region_comparison,
    sampling_plan,
    time_of_day_sweep,
)
from .grid import (
    IntensitySeries,
    SyntheticGridSpec,
    generate_synthetic,
    load_region_dir,
    load_series,
    write_series,
)
from .scheduler import Schedule, SlackBudget, flexible_start, pause_resume
from .sci import EquivalenceFactors, sci_report, to_equivalences
from .workload import load_job, load_job_dir, quantize

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_COVERAGE = 3
EXIT_INTERNAL = 4

CONFIG_ENV = "CARBONSCHED_CONFIG"

_CONFIG_DEFAULTS = {
    "format": "json",
    "fill_policy": "reject",
    "pue": 1.0,
    "embodied_grams": 0.0,
    "pauses_denominator": "window",
    "equivalences": {},
}


def _load_config() -> dict:
    cfg = dict(_CONFIG_DEFAULTS)
    path = os.environ.get(CONFIG_ENV)
    if path:
        try:
            with open(path, encoding="utf-8") as f:
                user = json.load(f)
        except (OSError, json.JSONDecodeError) as ex:
            raise ValidationError(f"cannot read config {path}: {ex}") from ex
        unknown = set(user) - set(cfg)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(user)
    return cfg


def _parse_start(text: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as ex:
        raise ValidationError(f"malformed timestamp {text!r}: {ex}") from ex
    if ts.tzinfo is None:
        raise ValidationError(f"timestamp {text!r} must carry a UTC offset")
    return ts.astimezone(timezone.utc)


def _factors(cfg: dict) -> EquivalenceFactors:
    overrides = cfg.get("equivalences") or {}
    defaults = EquivalenceFactors()
    merged = defaults.as_dict()
    for key, value in overrides.items():
        name = key if key.endswith("_t") else key + "_t"
        if name not in merged:
            raise ValidationError(f"unknown equivalence factor {key!r}")
        merged[name] = float(value)
    return EquivalenceFactors(**merged)


def _round_obj(obj, ndigits=3):
    if isinstance(obj, float):
        return round(obj, ndigits)
    if isinstance(obj, dict):
        return {k: _round_obj(v, ndigits) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_round_obj(v, ndigits) for v in obj]
    return obj


def _emit_json(obj, pretty: bool) -> None:
    if pretty:
        obj = _round_obj(obj)
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _emit_flat(obj: dict, fmt: str, pretty: bool) -> None:
    """Flat mapping as JSON, or as a one-row CSV with fixed column order."""
    if fmt == "csv":
        flat = {}
        for k, v in obj.items():
            if isinstance(v, dict):
                for k2, v2 in v.items():
                    flat[f"{k}_{k2}"] = v2
            elif isinstance(v, list):
                flat[k] = ";".join(str(x) for x in v)
            else:
                flat[k] = v
        cols = list(flat)
        sys.stdout.write(",".join(cols) + "\n")
        sys.stdout.write(
            ",".join(
                repr(v) if isinstance(v, float) else str(v) for v in flat.values()
            )
            + "\n"
        )
    else:
        _emit_json(obj, pretty)


def _contiguous_schedule(series: IntensitySeries, start: datetime, n: int) -> Schedule:
    i0 = series.index_of(start)
    if i0 + n > len(series):
        raise CoverageError(
            f"window [{start.isoformat()}, +{n * 5} min) exceeds coverage ending "
            f"{series.end.isoformat()}"
        )
    return Schedule(tuple(range(i0, i0 + n)))


def _slack_from_args(args, hours_attr: str, percent_attr: str) -> SlackBudget:
    hours = getattr(args, hours_attr)
    percent = getattr(args, percent_attr)
    if (hours is None) == (percent is None):
        raise ValidationError(
            f"exactly one of --{hours_attr.replace('_', '-')} / "
            f"--{percent_attr.replace('_', '-')} is required"
        )
    if hours is not None:
        return SlackBudget("absolute_hours", hours)
    return SlackBudget("relative_fraction", percent / 100.0)


def _parse_slack_set(spec: str) -> list[SlackBudget]:
    """Comma list like 'hours:6,hours:24,percent:50,percent:100'."""
    out = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            kind, value = item.split(":", 1)
            value = float(value)
        except ValueError as ex:
            raise ValidationError(f"malformed slack item {item!r}") from ex
        if kind == "hours":
            out.append(SlackBudget("absolute_hours", value))
        elif kind == "percent":
            out.append(SlackBudget("relative_fraction", value / 100.0))
        else:
            raise ValidationError(f"unknown slack kind {kind!r} in {item!r}")
    if not out:
        raise ValidationError("empty slack set")
    return out


def cmd_emissions(args, cfg) -> int:
    series = load_series(args.grid, fill_policy=cfg["fill_policy"])
    job = load_job(args.job)
    start = _parse_start(args.start)
    profile = quantize(job)
    schedule = _contiguous_schedule(series, start, profile.n_intervals)
    pue = args.pue if args.pue is not None else float(cfg["pue"])
    embodied = (
        args.embodied if args.embodied is not None else float(cfg["embodied_grams"])
    )
    report = sci_report(
        profile, series, schedule, m_grams=embodied, r=f"training job {job.name}",
        pue=pue,
    )
    obj = report.to_dict()
    obj["equivalences"] = to_equivalences(report.c_grams, _factors(cfg))
    _emit_flat(obj, args.format or cfg["format"], args.pretty)
    return EXIT_OK


def _run_optimizer(args, cfg, fn, hours_attr, percent_attr) -> int:
    series = load_series(args.grid, fill_policy=cfg["fill_policy"])
    job = load_job(args.job)
    start = _parse_start(args.start)
    slack = _slack_from_args(args, hours_attr, percent_attr)
    profile = quantize(job)
    outcome = fn(
        profile, series, start, slack,
        args.pauses_denominator or cfg["pauses_denominator"],
    )
    if not (outcome.optimized_grams <= outcome.baseline_grams * (1 + 1e-12)) and profile.is_uniform():
        raise InvariantError("optimizer produced worse-than-baseline schedule")
    _emit_flat(outcome.to_dict(), args.format or cfg["format"], args.pretty)
    return EXIT_OK


def cmd_flexible_start(args, cfg) -> int:
    return _run_optimizer(args, cfg, flexible_start, "window_hours", "window_percent")


def cmd_pause_resume(args, cfg) -> int:
    return _run_optimizer(args, cfg, pause_resume, "slack_hours", "slack_percent")


def cmd_sweep(args, cfg) -> int:
    regions = load_region_dir(args.grids, fill_policy=cfg["fill_policy"])
    jobs = load_job_dir(args.jobs)
    slacks = _parse_slack_set(args.slack_set)
    samples = sampling_plan(
        args.year, args.samples_per_month, mode=args.mode, seed=args.seed
    )
    report = gains_sweep(
        jobs, regions, slacks, samples,
        pauses_denominator=args.pauses_denominator or cfg["pauses_denominator"],
        threads=args.threads,
    )
    fmt = args.format or cfg["format"]
    if fmt == "csv":
        sys.stdout.write("\n".join(report.to_csv_rows()) + "\n")
    else:
        _emit_json(report.to_json_obj(), args.pretty)
    if args.emit_plot_data:
        _write_sweep_plot_data(report, args.emit_plot_data)
    return EXIT_OK


def _write_sweep_plot_data(report, path) -> None:
    # One row per cell, gain as a plain column; ready for external plotting.
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(report.to_csv_rows()) + "\n")


def cmd_equiv(args, cfg) -> int:
    obj = to_equivalences(args.grams, _factors(cfg))
    _emit_flat(obj, args.format or cfg["format"], args.pretty)
    return EXIT_OK


def cmd_gen_grid(args, cfg) -> int:
    spec = SyntheticGridSpec(
        base=args.base,
        amplitude=args.amplitude,
        period_hours=args.period_hours,
        phase_hours=args.phase_hours,
        days=args.days,
        noise_stddev=args.noise_stddev,
        seed=args.seed,
        region_id=args.region_id,
        epoch_start=_parse_start(args.epoch),
    )
    series = generate_synthetic(spec)
    write_series(series, args.out)
    sys.stderr.write(f"wrote {len(series)} intervals to {args.out}\n")
    return EXIT_OK


def cmd_gen_fixture(args, cfg) -> int:
    """Materialize the bundled 16-region synthetic grid set as CSV files."""
    specs = json.loads(
        resources.files("carbonsched.fixtures")
        .joinpath("synthetic_regions.json")
        .read_text()
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    epoch = _parse_start(args.epoch)
    for row in specs:
        spec = SyntheticGridSpec(days=args.days, epoch_start=epoch, **row)
        write_series(generate_synthetic(spec), out / f"{spec.region_id}.csv")
    sys.stderr.write(f"wrote {len(specs)} region files to {out}\n")
    return EXIT_OK


def cmd_compare_regions(args, cfg) -> int:
    regions = load_region_dir(args.grids, fill_policy=cfg["fill_policy"])
    job = load_job(args.job)
    samples = sampling_plan(
        args.year, args.samples_per_month, mode=args.mode, seed=args.seed
    )
    stats = region_comparison(job, regions, samples)
    fmt = args.format or cfg["format"]
    if fmt == "csv":
        cols = [
            "region_id", "min_grams", "q1_grams", "mean_grams", "q3_grams",
            "max_grams", "samples", "skipped",
        ]
        sys.stdout.write(",".join(cols) + "\n")
        for region_id in sorted(stats):
            st = stats[region_id].to_dict()
            sys.stdout.write(
                ",".join(
                    repr(st[c]) if isinstance(st[c], float) else str(st[c])
                    for c in cols
                )
                + "\n"
            )
    else:
        _emit_json({r: st.to_dict() for r, st in stats.items()}, args.pretty)
    if args.emit_plot_data:
        _write_region_plot_data(job, regions, samples, args.emit_plot_data)
    return EXIT_OK


def _write_region_plot_data(job, regions, samples, path) -> None:
    from .evaluation import baseline_emissions

    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("region_id,start,grams\n")
        for region_id in sorted(regions):
            for start in samples:
                try:
                    g = baseline_emissions(job, regions[region_id], start)
                except CoverageError:
                    continue
                f.write(f"{region_id},{start.isoformat()},{g!r}\n")


def cmd_time_of_day(args, cfg) -> int:
    series = load_series(args.grid, fill_policy=cfg["fill_policy"])
    job = load_job(args.job)
    hours = [float(h) for h in args.hours.split(",")]
    rows = {}
    for date_str in args.date:
        date = _parse_start(date_str + "T00:00:00Z")
        rows[date_str] = time_of_day_sweep(job, series, date, hours)
    fmt = args.format or cfg["format"]
    if fmt == "csv":
        sys.stdout.write("date," + ",".join(f"{h:g}" for h in hours) + "\n")
        for date_str, cells in rows.items():
            sys.stdout.write(
                date_str + "," + ",".join(repr(cells[h]) for h in hours) + "\n"
            )
    else:
        _emit_json(
            {d: {f"{h:g}": v for h, v in cells.items()} for d, cells in rows.items()},
            args.pretty,
        )
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.add_argument("--pretty", action="store_true",
                   help="round numbers for human reading")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carbonsched",
        description="Carbon emissions accounting and temporal scheduling "
        "for compute workloads.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("emissions", help="SCI report for a contiguous run")
    p.add_argument("--grid", required=True)
    p.add_argument("--job", required=True)
    p.add_argument("--start", required=True)
    p.add_argument("--pue", type=float, default=None)
    p.add_argument("--embodied", type=float, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_emissions)

    p = sub.add_parser("flexible-start", help="best contiguous start in a window")
    p.add_argument("--grid", required=True)
    p.add_argument("--job", required=True)
    p.add_argument("--start", required=True)
    p.add_argument("--window-hours", type=float, default=None)
    p.add_argument("--window-percent", type=float, default=None)
    p.add_argument("--pauses-denominator", choices=["window", "job_duration"],
                   default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_flexible_start)

    p = sub.add_parser("pause-resume", help="run only in the cheapest intervals")
    p.add_argument("--grid", required=True)
    p.add_argument("--job", required=True)
    p.add_argument("--start", required=True)
    p.add_argument("--slack-hours", type=float, default=None)
    p.add_argument("--slack-percent", type=float, default=None)
    p.add_argument("--pauses-denominator", choices=["window", "job_duration"],
                   default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_pause_resume)

    p = sub.add_parser("sweep", help="year-long optimizer gain sweep")
    p.add_argument("--grids", required=True, help="directory of <region>.csv files")
    p.add_argument("--jobs", required=True, help="directory of job JSON files")
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--samples-per-month", type=int, required=True)
    p.add_argument("--slack-set", required=True,
                   help="e.g. hours:6,hours:24,percent:50,percent:100")
    p.add_argument("--mode", choices=["fixed_days", "seeded_random"],
                   default="fixed_days")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--pauses-denominator", choices=["window", "job_duration"],
                   default=None)
    p.add_argument("--emit-plot-data", default=None, metavar="PATH")
    _add_common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("equiv", help="grams to everyday-source equivalences")
    p.add_argument("--grams", type=float, required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_equiv)

    p = sub.add_parser("gen-grid", help="generate one synthetic region CSV")
    p.add_argument("--base", type=float, required=True)
    p.add_argument("--amplitude", type=float, default=0.0)
    p.add_argument("--period-hours", type=float, default=24.0)
    p.add_argument("--phase-hours", type=float, default=0.0)
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--noise-stddev", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region-id", default="synthetic")
    p.add_argument("--epoch", default="2020-01-01T00:00:00Z")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_gen_grid)

    p = sub.add_parser("gen-fixture",
                       help="materialize the bundled 16-region synthetic set")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--days", type=int, default=385)
    p.add_argument("--epoch", default="2020-01-01T00:00:00Z")
    _add_common(p)
    p.set_defaults(fn=cmd_gen_fixture)

    p = sub.add_parser("compare-regions", help="baseline emissions per region")
    p.add_argument("--grids", required=True)
    p.add_argument("--job", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--samples-per-month", type=int, required=True)
    p.add_argument("--mode", choices=["fixed_days", "seeded_random"],
                   default="fixed_days")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-plot-data", default=None, metavar="PATH")
    _add_common(p)
    p.set_defaults(fn=cmd_compare_regions)

    p = sub.add_parser("time-of-day", help="emissions by start hour of day")
    p.add_argument("--grid", required=True)
    p.add_argument("--job", required=True)
    p.add_argument("--date", action="append", required=True,
                   help="UTC date YYYY-MM-DD; repeatable")
    p.add_argument("--hours", default="0,3,6,9,12,15,18,21")
    _add_common(p)
    p.set_defaults(fn=cmd_time_of_day)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config()
        return args.fn(args, cfg)
    except ValidationError as ex:
        sys.stderr.write(f"error: {ex}\n")
        return EXIT_VALIDATION
    except CoverageError as ex:
        sys.stderr.write(f"error: {ex}\n")
        return EXIT_COVERAGE
    except InvariantError as ex:
        sys.stderr.write(f"internal error: {ex}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
