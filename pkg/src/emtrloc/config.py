"""Flat ``key = value`` experiment configuration.

One assignment per line; ``#`` starts a comment. Key names carry their
units. List-valued keys take comma-separated values. Impedances accept
``open`` and ``snr_db`` accepts ``inf``. Unknown keys are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .line import OPEN, LineSpec, TerminationSpec
from .signal import FrequencyGrid

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "load_config", "format_config"]

METHOD_NAMES = ("EMTR1", "EMTR2", "EMTR3", "WT")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Defaults describe the 100 km overhead line sampled at 1 MHz."""

    length_m: float = 100e3
    r_per_m: float = 0.036e-3
    l_per_m: float = 1.60e-6
    c_per_m: float = 10.54e-12
    loss_mode: str = "lossy"
    z0_ohm: object = 1e5
    zl_ohm: object = 1e5
    source_kind: str = "step_1_over_jw"
    xf_m: tuple = (20e3, 40e3, 60e3, 80e3)
    zf_ohm: tuple = (50.0, 300.0)
    methods: tuple = ("EMTR1", "EMTR2", "EMTR3", "WT")
    scan_step_m: float = 10.0
    n_samples: int = 131072
    dt_s: float = 1e-6
    dt_sim_s: float = 1e-7
    band_lo_hz: float = 0.0
    band_hi_hz: float = math.inf
    source_cutoff_hz: float | None = None  # None: acquisition Nyquist
    inception_s: float = 2e-3
    snr_db: float = 30.0
    seed: int | None = 0
    n_seeds: int = 20
    sync_error_s: float = 0.0
    wt_k: float = 5.0
    wt_wavelet: str = "db2"

    def __post_init__(self):
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ConfigError(f"unknown method {m!r}; expected one of {METHOD_NAMES}")
        if math.isfinite(self.snr_db) and self.seed is None:
            raise ConfigError("seed is required when snr_db is finite")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be at least 1")
        if not self.scan_step_m > 0:
            raise ConfigError("scan_step_m must be positive")
        try:
            self.line()
            self.terms()
            self.grid()
        except ValueError as err:
            raise ConfigError(str(err)) from err

    def line(self) -> LineSpec:
        return LineSpec(self.length_m, self.r_per_m, self.l_per_m, self.c_per_m, self.loss_mode)

    def terms(self) -> TerminationSpec:
        return TerminationSpec(self.z0_ohm, self.zl_ohm)

    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.n_samples, self.dt_s)

    @property
    def band(self):
        if self.band_lo_hz <= 0 and math.isinf(self.band_hi_hz):
            return None
        return (self.band_lo_hz, self.band_hi_hz)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


_FLOAT = {
    "length_m", "r_per_m", "l_per_m", "c_per_m", "scan_step_m", "dt_s", "dt_sim_s",
    "band_lo_hz", "band_hi_hz", "inception_s", "sync_error_s", "wt_k",
}
_INT = {"n_samples", "n_seeds"}
_STR = {"loss_mode", "source_kind", "wt_wavelet"}
_IMPEDANCE = {"z0_ohm", "zl_ohm"}


def _float(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf"):
        return math.inf
    return float(t)


def _impedance(text: str):
    if text.strip().lower() == "open":
        return OPEN
    return _float(text)


def _convert(key: str, raw: str):
    if key in _FLOAT:
        return _float(raw)
    if key in _INT:
        return int(raw)
    if key in _STR:
        return raw.strip()
    if key in _IMPEDANCE:
        return _impedance(raw)
    if key == "snr_db":
        return _float(raw)
    if key == "seed":
        return None if raw.strip().lower() == "none" else int(raw)
    if key == "source_cutoff_hz":
        return None if raw.strip().lower() == "none" else _float(raw)
    if key == "xf_m":
        return tuple(_float(x) for x in raw.split(","))
    if key == "zf_ohm":
        return tuple(_impedance(x) for x in raw.split(","))
    if key == "methods":
        return tuple(x.strip().upper() for x in raw.split(","))
    raise ConfigError(f"unknown key {key!r}")


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    values = {}
    known = {f.name for f in fields(ExperimentConfig)}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as err:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {err}") from err
    return replace(base or ExperimentConfig(), **values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def _fmt(v) -> str:
    if v is OPEN:
        return "open"
    if v is None:
        return "none"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def format_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`."""
    return "".join(f"{f.name} = {_fmt(getattr(cfg, f.name))}\n" for f in fields(cfg))
