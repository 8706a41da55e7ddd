import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emtrloc.line import LineSpec
from emtrloc.signal import FrequencyGrid, SampledRecord, add_awgn
from emtrloc.wavelet import (
    DetectorConfig,
    NoArrivalError,
    OutOfLineError,
    detect_arrival,
    locate_two_ended,
)

GRID = FrequencyGrid(4096, 1e-6)
LINE = LineSpec.table2()


def _step(at=500):
    x = np.zeros(GRID.n_samples)
    x[at:] = 1.0
    return SampledRecord(x, GRID)


def test_clean_step():
    p = detect_arrival(_step())
    assert abs(p.t_arrival - 500e-6) <= 1e-6
    assert p.scale_used == 1 and p.confidence > 1


def test_noisy_step_95th_percentile_within_two_samples():
    errs = []
    for seed in range(100):
        p = detect_arrival(add_awgn(_step(), 30.0, seed=seed))
        errs.append(abs(p.index - 500))
    assert np.percentile(errs, 95) <= 2


def test_all_noise_raises():
    rng = np.random.default_rng(4)
    with pytest.raises(NoArrivalError):
        detect_arrival(SampledRecord(rng.normal(size=GRID.n_samples), GRID))
    with pytest.raises(NoArrivalError):
        detect_arrival(SampledRecord(np.zeros(GRID.n_samples), GRID))


@given(st.integers(450, 3000))
def test_translation_covariance(at):
    a = detect_arrival(_step(450))
    b = detect_arrival(_step(at))
    assert b.index - a.index == at - 450


def test_t0_offset_carries_into_arrival_time():
    x = _step()
    shifted = SampledRecord(x.values, GRID, t0_offset=1e-3)
    assert math.isclose(detect_arrival(shifted).t_arrival, 1e-3 + 500e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(k=0)
    with pytest.raises(ValueError):
        DetectorConfig(wavelet="morl")
    with pytest.raises(ValueError):
        DetectorConfig(pre_event_fraction=1.0)


def test_two_ended_geometry():
    v = LINE.velocity
    assert math.isclose(locate_two_ended(20e3 / v, 80e3 / v, LINE), 20e3, rel_tol=1e-12)
    assert locate_two_ended(1e-3, 1e-3, LINE) == 50e3


def test_one_microsecond_offset_shift():
    base = locate_two_ended(0.0, 0.0, LINE)
    moved = locate_two_ended(0.0, 1e-6, LINE)
    # v = 2.4351e8 m/s, so v * 1 us / 2 = 121.76 m
    assert math.isclose(base - moved, 121.76, abs_tol=0.1)


@given(st.floats(-3e-4, 3e-4), st.floats(-1.0, 1.0))
def test_common_clock_shift_cancels(dt, tau):
    a = locate_two_ended(1e-3, 1e-3 + dt, LINE)
    b = locate_two_ended(1e-3 + tau, 1e-3 + dt + tau, LINE)
    assert math.isclose(a, b, rel_tol=1e-6, abs_tol=1e-3)


def test_inconsistent_picks_rejected():
    with pytest.raises(OutOfLineError):
        locate_two_ended(0.0, 1e-3, LINE)
