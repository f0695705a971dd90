import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from carbonsched import (
    JobSpec,
    ValidationError,
    component_fraction,
    derived_metrics,
    extrapolate_full_run,
    quantize,
    reference_jobs,
)
from carbonsched.workload import load_job, load_job_dir


class TestJobSpec:
    def test_requires_energy(self):
        with pytest.raises(ValidationError):
            JobSpec("j", 1, "V100", 60)

    def test_profile_length_checked(self):
        with pytest.raises(ValidationError, match="intervals"):
            JobSpec("j", 1, "V100", 60, profile_kwh=(1.0,) * 5)

    def test_total_profile_agreement(self):
        JobSpec("j", 1, "V100", 10, total_kwh=1.0, profile_kwh=(0.5, 0.5))
        with pytest.raises(ValidationError, match="disagrees"):
            JobSpec("j", 1, "V100", 10, total_kwh=2.0, profile_kwh=(0.5, 0.5))

    def test_positive_fields(self):
        with pytest.raises(ValidationError):
            JobSpec("j", 0, "V100", 60, total_kwh=1.0)
        with pytest.raises(ValidationError):
            JobSpec("j", 1, "V100", 0, total_kwh=1.0)


class TestQuantize:
    def test_even_split(self):
        prof = quantize(JobSpec("j", 1, "V100", 10, total_kwh=1.0))
        assert list(prof.per_interval_kwh) == [0.5, 0.5]

    def test_partial_final_interval(self):
        # 12.5 min at uniform power: two full 5-min intervals at 0.4 kWh,
        # then the remaining 2.5 min carries 0.2 kWh; checked by hand.
        prof = quantize(JobSpec("j", 1, "V100", 12.5, total_kwh=1.0))
        assert prof.per_interval_kwh == pytest.approx([0.4, 0.4, 0.2])
        assert math.fsum(prof.per_interval_kwh) == pytest.approx(1.0, abs=1e-12)

    def test_long_uniform_run(self):
        jobs = reference_jobs()
        prof = quantize(jobs["bert_pretrain"])
        assert prof.n_intervals == 432
        assert prof.per_interval_kwh[0] == pytest.approx(37.3 / 432)
        assert prof.total_kwh == pytest.approx(37.3, abs=1e-9)

    def test_recorded_profile_passthrough(self):
        job = JobSpec("j", 1, "V100", 10, profile_kwh=(0.7, 0.1))
        assert list(quantize(job).per_interval_kwh) == [0.7, 0.1]

    @given(
        duration=st.floats(min_value=0.5, max_value=10000),
        total=st.floats(min_value=1e-6, max_value=1e5),
    )
    def test_energy_conserved(self, duration, total):
        prof = quantize(JobSpec("j", 1, "V100", duration, total_kwh=total))
        assert abs(float(prof.per_interval_kwh.sum()) - total) <= 1e-9 * max(1.0, total)
        assert prof.n_intervals == math.ceil(duration / 5.0)


class TestDerivedMetrics:
    def test_identity(self):
        m = derived_metrics(JobSpec("j", 1, "V100", 60, total_kwh=1.0))
        assert m.kwh_per_gpu_hour == pytest.approx(1.0)
        assert m.gpu_hours == pytest.approx(1.0)

    def test_known_rates(self):
        jobs = reference_jobs()
        assert derived_metrics(jobs["bert_pretrain"]).kwh_per_gpu_hour == pytest.approx(
            37.3 / (8 * 36)
        )
        assert derived_metrics(jobs["transformer_6b"]).kwh_per_gpu_hour == pytest.approx(
            13812.4 / (256 * 192)
        )

    def test_rate_range_all_reference_jobs(self):
        for job in reference_jobs().values():
            rate = derived_metrics(job).kwh_per_gpu_hour
            assert 0.066 <= rate <= 0.282, job.name

    def test_gpu_count_scaling(self):
        a = derived_metrics(JobSpec("j", 2, "V100", 60, total_kwh=1.0))
        b = derived_metrics(JobSpec("j", 4, "V100", 60, total_kwh=1.0))
        assert b.kwh_per_gpu_hour == pytest.approx(a.kwh_per_gpu_hour / 2)


class TestExtrapolate:
    def test_partial_run_scale_up(self):
        assert extrapolate_full_run(13812.4, 8 / 60) == pytest.approx(103593, abs=1)

    def test_identity(self):
        assert extrapolate_full_run(42.0, 1.0) == 42.0

    def test_doubling(self):
        assert extrapolate_full_run(50.0, 0.5) == 100.0

    def test_bad_fraction(self):
        with pytest.raises(ValidationError):
            extrapolate_full_run(1.0, 0.0)
        with pytest.raises(ValidationError):
            extrapolate_full_run(1.0, -0.5)


class TestComponentFraction:
    WATTS = {"GPU": 187.1, "CPU0": 22.9, "CPU1": 9.3, "DRAM0": 23.0, "DRAM1": 9.3}

    def test_gpu_share(self):
        frac = component_fraction(self.WATTS)
        assert round(frac["GPU"] * 100) == 74
        assert frac["GPU"] == pytest.approx(187.1 / 251.6)

    def test_sums_to_one(self):
        frac = component_fraction(self.WATTS)
        assert math.fsum(frac.values()) == pytest.approx(1.0, abs=1e-9)

    def test_single_component(self):
        assert component_fraction({"x": 100.0}) == {"x": 1.0}

    def test_symmetry(self):
        assert component_fraction({"a": 50.0, "b": 50.0}) == {"a": 0.5, "b": 0.5}

    def test_all_zero(self):
        with pytest.raises(ValidationError):
            component_fraction({"a": 0.0, "b": 0.0})


class TestJobIO:
    def test_load_job(self, tmp_path):
        f = tmp_path / "j.json"
        f.write_text(json.dumps({
            "name": "toy", "gpu_count": 2, "gpu_type": "V100",
            "duration_minutes": 30, "total_kwh": 1.5,
        }))
        job = load_job(f)
        assert job.name == "toy"
        assert job.energy_kwh == 1.5

    def test_load_job_with_profile(self, tmp_path):
        f = tmp_path / "j.json"
        f.write_text(json.dumps({
            "name": "toy", "gpu_count": 1, "gpu_type": "V100",
            "duration_minutes": 10, "profile_kwh": [0.4, 0.6],
        }))
        assert quantize(load_job(f)).total_kwh == pytest.approx(1.0)

    def test_missing_field(self, tmp_path):
        f = tmp_path / "j.json"
        f.write_text(json.dumps({"name": "toy"}))
        with pytest.raises(ValidationError, match="missing"):
            load_job(f)

    def test_job_dir(self, tmp_path):
        for i in range(3):
            (tmp_path / f"j{i}.json").write_text(json.dumps({
                "name": f"job{i}", "gpu_count": 1, "gpu_type": "V100",
                "duration_minutes": 10, "total_kwh": 1.0,
            }))
        jobs = load_job_dir(tmp_path)
        assert sorted(jobs) == ["job0", "job1", "job2"]
