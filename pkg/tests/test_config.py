import math

import pytest

from emtrloc.config import ConfigError, ExperimentConfig, format_config, load_config, parse_config
from emtrloc.line import OPEN


def test_defaults_are_the_100km_line():
    cfg = ExperimentConfig()
    assert cfg.line().length_m == 100e3
    assert cfg.line().velocity == pytest.approx(2.4351e8, rel=1e-4)
    assert cfg.band is None


def test_parse_values_and_comments():
    cfg = parse_config(
        """
        # comment line
        length_m = 20000   # trailing comment
        zf_ohm = 0, 100, open
        z0_ohm = open
        methods = emtr1, wt
        snr_db = inf
        seed = none
        band_lo_hz = 1000
        source_cutoff_hz = none
        """
    )
    assert cfg.length_m == 20000.0
    assert cfg.zf_ohm == (0.0, 100.0, OPEN)
    assert cfg.z0_ohm is OPEN
    assert cfg.methods == ("EMTR1", "WT")
    assert math.isinf(cfg.snr_db) and cfg.seed is None
    assert cfg.band == (1000.0, math.inf)


@pytest.mark.parametrize(
    "text",
    [
        "bogus_key = 1",
        "length_m = 1\nlength_m = 2",
        "length_m 100",
        "n_samples = many",
        "methods = EMTR9",
        "snr_db = 30\nseed = none",
        "scan_step_m = 0",
        "n_seeds = 0",
        "n_samples = 1001",
        "loss_mode = wet",
    ],
)
def test_rejects_bad_input(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_format_round_trip(tmp_path):
    cfg = ExperimentConfig(zf_ohm=(0.0, OPEN), snr_db=math.inf, seed=None, xf_m=(1234.5,))
    p = tmp_path / "c.cfg"
    p.write_text(format_config(cfg))
    assert load_config(p) == cfg


def test_shipped_configs_load():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    names = sorted(p.name for p in root.glob("*.cfg"))
    assert names
    for p in root.glob("*.cfg"):
        load_config(p)
