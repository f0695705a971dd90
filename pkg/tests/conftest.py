from datetime import datetime, timezone

import numpy as np
import pytest

from carbonsched import EnergyProfile, IntensitySeries

T0 = datetime(2020, 1, 1, tzinfo=timezone.utc)


@pytest.fixture
def t0():
    return T0


def make_series(values, region_id="test", epoch=T0):
    return IntensitySeries(region_id=region_id, epoch_start=epoch,
                           values=np.asarray(values, dtype=float))


def make_profile(values):
    return EnergyProfile(np.asarray(values, dtype=float))


@pytest.fixture
def flat_series():
    return make_series([200.0] * 576)
