import csv
import math

import numpy as np
import pytest

from emtrloc import experiments as ex
from emtrloc.config import ConfigError, ExperimentConfig

# 20 km lossless line sampled at 1 MHz: small enough to run in a second
SMALL = ExperimentConfig(
    length_m=20e3,
    loss_mode="lossless",
    xf_m=(4e3, 9e3, 13e3, 17e3),
    zf_ohm=(0.0,),
    n_samples=32768,
    dt_sim_s=1e-6,
    inception_s=2e-3,
    snr_db=math.inf,
    scan_step_m=100.0,
    band_lo_hz=1e3,
    band_hi_hz=5e5,
)


def test_clean_bolted_fault_within_one_scan_step():
    table = ex.run_error_table(SMALL.with_overrides(methods=("EMTR1", "EMTR2", "EMTR3")))
    assert table.n_seeds == 1
    for m in table.methods:
        for x in SMALL.xf_m:
            assert table.single(m, x, 0.0) <= SMALL.scan_step_m / 1e3 + 1e-12


def test_acquire_is_quiet_before_inception():
    u0, ul = ex.acquire(SMALL, 9e3, 100.0)
    assert u0.grid.dt == SMALL.dt_s and u0.values.size == SMALL.n_samples
    n_pre = int(SMALL.inception_s / SMALL.dt_s) - 5
    for rec in (u0, ul):
        # the lossless line rings on into the next period, so compare slopes, not levels
        slope = np.abs(np.diff(rec.values))
        assert slope[:n_pre].max() < 0.1 * slope.max()
        assert np.argmax(slope) >= n_pre


def test_noise_is_seeded_per_cell():
    cfg = SMALL.with_overrides(snr_db=30.0, seed=7)
    u0, ul = ex.acquire(cfg, 9e3, 100.0)
    a = ex.noisy_pair(cfg, u0, ul, key=(0, 0, 0))
    b = ex.noisy_pair(cfg, u0, ul, key=(0, 0, 0))
    c = ex.noisy_pair(cfg, u0, ul, key=(0, 0, 1))
    assert np.array_equal(a[0].values, b[0].values) and np.array_equal(a[1].values, b[1].values)
    assert not np.array_equal(a[0].values, c[0].values)
    assert not np.array_equal(a[0].values - u0.values, a[1].values - ul.values)


def test_zero_offset_sweep_matches_table():
    cfg = SMALL.with_overrides(methods=("EMTR3", "WT"), snr_db=30.0, seed=3, n_seeds=3, sync_error_s=0.0)
    base, shifted = ex.run_sync_sweep(cfg)
    table = ex.run_error_table(cfg)
    for key, errs in table.errors_km.items():
        np.testing.assert_array_equal(errs, base.errors_km[key])
        np.testing.assert_array_equal(errs, shifted.errors_km[key])


def test_wt_estimate_moves_by_half_the_offset_distance():
    cfg = SMALL.with_overrides(zf_ohm=(50.0,))
    u0, ul = ex.acquire(cfg, 13e3, 50.0)
    x0, _ = ex.locate_pair(cfg, "WT", u0, ul)
    late = ex.noisy_pair(cfg, u0, ul, key=(0, 0, 0), tau=4e-6)[1]
    x1, _ = ex.locate_pair(cfg, "WT", u0, late)
    assert x0 - x1 == pytest.approx(cfg.line().velocity * 4e-6 / 2, rel=1e-9)


def test_sync_sweep_needs_two_ended_methods():
    with pytest.raises(ConfigError):
        ex.run_sync_sweep(SMALL.with_overrides(methods=("EMTR1",)))


def test_heatmap_rows_are_normalized_and_extrema_kept(tmp_path):
    cfg = SMALL.with_overrides(methods=("EMTR1",), inception_s=0.0)
    res = ex.run_heatmap(cfg)
    assert res.energy.shape == (4, res.scan.positions.size)
    np.testing.assert_allclose(res.energy.max(axis=1), 1.0)
    np.testing.assert_allclose(res.extremum, SMALL.xf_m, atol=100.0)
    assert np.all(res.errors_m() <= 100.0)
    p = tmp_path / "h.csv"
    ex.write_heatmap_csv(p, res)
    rows = list(csv.reader(p.open()))
    assert rows[0][:3] == ["x_f_m", "extremum_xprime_m", "x_hat_m"]
    assert len(rows) == 5 and len(rows[1]) == 3 + res.scan.positions.size


def test_heatmap_rejects_several_methods():
    with pytest.raises(ConfigError):
        ex.run_heatmap(SMALL)
    with pytest.raises(ConfigError):
        ex.run_heatmap(SMALL.with_overrides(methods=("WT",)))


def test_error_table_csv_marks_failures(tmp_path):
    table = ex.ErrorTable((1.0,), (50.0,), ("EMTR1",), 2)
    table.errors_km[("EMTR1", 1.0, 50.0)] = np.array([math.nan, 0.5])
    p = tmp_path / "t.csv"
    ex.write_error_table_csv(p, table)
    rows = list(csv.reader(p.open()))
    assert rows[1] == ["EMTR1", "1", "50.0", ex.NO_LOC, "0.5", "2", "1"]


def test_locate_pair_removes_recorded_clock_offset():
    cfg = SMALL.with_overrides(zf_ohm=(1000.0,), inception_s=0.0)
    u0, ul = ex.acquire(cfg, 13e3, 1000.0)
    x_ref, _ = ex.locate_pair(cfg, "EMTR3", u0, ul)
    from emtrloc.signal import SampledRecord, delay

    late = delay(ul, 3e-6)
    stamped = SampledRecord(late.values, late.grid, t0_offset=-3e-6)
    x_hat, _ = ex.locate_pair(cfg, "emtr3", u0, stamped)
    assert abs(x_ref - 13e3) <= 100.0
    assert x_hat == pytest.approx(x_ref, abs=100.0)
