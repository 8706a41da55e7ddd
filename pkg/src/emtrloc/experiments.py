"""Batch runners that turn a configuration into CSV artifacts.

Acquisition model: the fault transient is synthesized analytically on the
fine ``dt_sim_s`` grid with a source band-limited below the acquisition
Nyquist frequency, delayed by ``inception_s``, transformed to time, and
sub-sampled to ``dt_s``. Noise is added per terminal from seeds derived with
``numpy.random.SeedSequence`` so every cell is reproducible on its own.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .emtr import NoLocalizationError, ScanGrid, emtr_profiles, locate
from .forward import (
    fault_source,
    terminal_spectra_faulted,
    terminal_spectrum_ref27,
)
from .line import FaultScenario
from .oracle import TdScenario, compare_spectra, simulate
from .signal import (
    FrequencyGrid,
    SampledRecord,
    add_awgn,
    decimate,
    delay,
    spectrum_of,
    waveform_of,
)
from .wavelet import DetectorConfig, NoArrivalError, OutOfLineError, detect_arrival, locate_two_ended

__all__ = [
    "acquire",
    "noisy_pair",
    "locate_pair",
    "HeatmapResult",
    "ErrorTable",
    "Fig8Result",
    "run_heatmap",
    "run_error_table",
    "run_sync_sweep",
    "run_fig8",
    "write_heatmap_csv",
    "write_error_table_csv",
    "write_sync_csv",
    "write_fig8_csv",
]

NO_LOC = "no-localization"


def _g(x: float) -> str:
    return f"{x:.17g}"


def _sim_factor(cfg: ExperimentConfig) -> int:
    m = cfg.dt_s / cfg.dt_sim_s
    if abs(m - round(m)) > 1e-9 * m or round(m) < 1:
        raise ConfigError(f"dt_s {cfg.dt_s} must be an integer multiple of dt_sim_s {cfg.dt_sim_s}")
    return int(round(m))


def acquire(cfg: ExperimentConfig, x_f: float, z_f) -> tuple[SampledRecord, SampledRecord]:
    """Noise-free terminal records on the acquisition grid."""
    m = _sim_factor(cfg)
    line, terms = cfg.line(), cfg.terms()
    fine = FrequencyGrid(cfg.n_samples * m, cfg.dt_sim_s)
    cutoff = cfg.source_cutoff_hz if cfg.source_cutoff_hz is not None else 0.5 / cfg.dt_s
    src = fault_source(cfg.source_kind, fine, cutoff)
    ts = terminal_spectra_faulted(line, terms, FaultScenario(x_f, z_f, cfg.source_kind), src)
    out = []
    for spec in (ts.u0, ts.ul):
        if cfg.inception_s:
            spec = delay(spec, cfg.inception_s)
        out.append(decimate(waveform_of(spec), m))
    return out[0], out[1]


def _seed(cfg: ExperimentConfig, key) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.seed, spawn_key=tuple(int(k) for k in key))


def noisy_pair(cfg: ExperimentConfig, u0: SampledRecord, ul: SampledRecord, key, tau: float = 0.0):
    """Add seeded noise to both records, then shift the right one by ``tau`` seconds."""
    if math.isfinite(cfg.snr_db):
        u0 = add_awgn(u0, cfg.snr_db, _seed(cfg, (*key, 0)))
        ul = add_awgn(ul, cfg.snr_db, _seed(cfg, (*key, 1)))
    if tau:
        ul = delay(ul, tau)
    return u0, ul


def _wt_locate(cfg: ExperimentConfig, u0: SampledRecord, ul: SampledRecord) -> float:
    det = DetectorConfig(wavelet=cfg.wt_wavelet, k=cfg.wt_k)
    t0 = detect_arrival(u0, det).t_arrival
    tl = detect_arrival(ul, det).t_arrival
    return locate_two_ended(t0, tl, cfg.line())


def _emtr_locations(cfg, method, pairs) -> list:
    """x_hat per record pair, or None where the profile gives no location."""
    line, terms = cfg.line(), cfg.terms()
    scan = ScanGrid.uniform(line.length_m, cfg.scan_step_m)
    u0s = [spectrum_of(p[0]) for p in pairs]
    uls = [spectrum_of(p[1]) for p in pairs] if method == "EMTR3" else None
    profiles = emtr_profiles(method, u0s, line, terms, scan, uls=uls, band=cfg.band)
    out = []
    for prof in profiles:
        try:
            out.append(locate(prof).x_hat)
        except NoLocalizationError:
            out.append(None)
    return out


def locate_pair(cfg: ExperimentConfig, method: str, u0: SampledRecord, ul: SampledRecord):
    """Single localization; returns (x_hat, detail) where detail is method-specific."""
    method = method.upper()
    if method == "WT":
        det = DetectorConfig(wavelet=cfg.wt_wavelet, k=cfg.wt_k)
        p0, pl = detect_arrival(u0, det), detect_arrival(ul, det)
        return locate_two_ended(p0.t_arrival, pl.t_arrival, cfg.line()), (p0, pl)
    line, terms = cfg.line(), cfg.terms()
    scan = ScanGrid.uniform(line.length_m, cfg.scan_step_m)
    uls = [spectrum_of(ul)] if method == "EMTR3" else None
    prof = emtr_profiles(
        method, [spectrum_of(u0)], line, terms, scan, uls=uls, band=cfg.band,
        ul_offset=ul.t0_offset - u0.t0_offset,
    )[0]
    return locate(prof).x_hat, prof


# heatmaps -------------------------------------------------------------------

@dataclass(frozen=True)
class HeatmapResult:
    method: str
    z_f: object
    x_true: np.ndarray
    scan: ScanGrid
    energy: np.ndarray  # rows normalized to a peak of 1
    extremum: np.ndarray  # scan position of the row's max (EMTR1) or min
    x_hat: list  # None where no location

    def errors_m(self) -> np.ndarray:
        target = np.array([np.nan if x is None else x for x in self.x_hat])
        return np.abs(target - self.x_true)


def run_heatmap(cfg: ExperimentConfig) -> HeatmapResult:
    if len(cfg.methods) != 1 or cfg.methods[0] == "WT" or len(cfg.zf_ohm) != 1:
        raise ConfigError("a heatmap needs exactly one EMTR method and one fault impedance")
    method, z_f = cfg.methods[0], cfg.zf_ohm[0]
    line, terms = cfg.line(), cfg.terms()
    scan = ScanGrid.uniform(line.length_m, cfg.scan_step_m)
    pairs = [noisy_pair(cfg, *acquire(cfg, x, z_f), key=(i, 0, 0)) for i, x in enumerate(cfg.xf_m)]
    u0s = [spectrum_of(p[0]) for p in pairs]
    uls = [spectrum_of(p[1]) for p in pairs] if method == "EMTR3" else None
    profiles = emtr_profiles(method, u0s, line, terms, scan, uls=uls, band=cfg.band)
    rows, ext, x_hat = [], [], []
    for prof in profiles:
        e = prof.energy
        rows.append(e / e.max() if e.max() > 0 else e)
        pick = np.argmax(e) if method == "EMTR1" else np.argmin(e)
        ext.append(scan.positions[pick])
        try:
            x_hat.append(locate(prof).x_hat)
        except NoLocalizationError:
            x_hat.append(None)
    return HeatmapResult(method, z_f, np.array(cfg.xf_m, float), scan, np.array(rows), np.array(ext), x_hat)


def write_heatmap_csv(path, res: HeatmapResult) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_f_m", "extremum_xprime_m", "x_hat_m"] + [_g(x) for x in res.scan.positions])
        for x, ex, xh, row in zip(res.x_true, res.extremum, res.x_hat, res.energy):
            w.writerow([_g(x), _g(ex), NO_LOC if xh is None else _g(xh)] + [_g(v) for v in row])


# error tables ---------------------------------------------------------------

@dataclass
class ErrorTable:
    """Per-seed absolute errors in km; NaN marks a failed localization."""

    x_f: tuple
    z_f: tuple
    methods: tuple
    n_seeds: int
    tau: float = 0.0
    errors_km: dict = field(default_factory=dict)  # (method, x_f, z_f) -> array over seeds

    def single(self, method, x_f, z_f) -> float:
        return float(self.errors_km[(method, x_f, z_f)][0])

    def median(self, method, x_f, z_f) -> float:
        e = self.errors_km[(method, x_f, z_f)]
        ok = e[np.isfinite(e)]
        return float(np.median(ok)) if ok.size else math.nan

    def failures(self, method, x_f, z_f) -> int:
        return int(np.count_nonzero(~np.isfinite(self.errors_km[(method, x_f, z_f)])))


def _errors(cfg: ExperimentConfig, tau: float, methods) -> ErrorTable:
    n_seeds = cfg.n_seeds if math.isfinite(cfg.snr_db) else 1
    table = ErrorTable(tuple(cfg.xf_m), tuple(cfg.zf_ohm), tuple(methods), n_seeds, tau)
    for j, z_f in enumerate(cfg.zf_ohm):
        pairs, owners = [], []
        for i, x_f in enumerate(cfg.xf_m):
            clean = acquire(cfg, x_f, z_f)
            for s in range(n_seeds):
                pairs.append(noisy_pair(cfg, *clean, key=(i, j, s), tau=tau))
                owners.append(x_f)
        for method in methods:
            if method == "WT":
                xs = []
                for u0, ul in pairs:
                    try:
                        xs.append(_wt_locate(cfg, u0, ul))
                    except (NoArrivalError, OutOfLineError):
                        xs.append(None)
            else:
                xs = _emtr_locations(cfg, method, pairs)
            for i, x_f in enumerate(cfg.xf_m):
                sel = [k for k, o in enumerate(owners) if o == x_f]
                table.errors_km[(method, x_f, z_f)] = np.array(
                    [math.nan if xs[k] is None else abs(xs[k] - x_f) / 1e3 for k in sel]
                )
    return table


def run_error_table(cfg: ExperimentConfig) -> ErrorTable:
    return _errors(cfg, 0.0, cfg.methods)


def _cell(v: float) -> str:
    return NO_LOC if not math.isfinite(v) else _g(v)


def write_error_table_csv(path, table: ErrorTable) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "x_f_m", "z_f_ohm", "error_km_single", "error_km_median", "n_seeds", "n_no_localization"])
        for z_f in table.z_f:
            for method in table.methods:
                for x_f in table.x_f:
                    w.writerow([
                        method, _g(x_f), str(z_f),
                        _cell(table.single(method, x_f, z_f)), _cell(table.median(method, x_f, z_f)),
                        table.n_seeds, table.failures(method, x_f, z_f),
                    ])


def run_sync_sweep(cfg: ExperimentConfig) -> tuple[ErrorTable, ErrorTable]:
    """Errors without and with the right-terminal clock offset ``sync_error_s``."""
    methods = [m for m in cfg.methods if m in ("EMTR3", "WT")]
    if not methods:
        raise ConfigError("the synchronization sweep compares EMTR3 and WT")
    return _errors(cfg, 0.0, methods), _errors(cfg, cfg.sync_error_s, methods)


def write_sync_csv(path, base: ErrorTable, shifted: ErrorTable) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([
            "method", "x_f_m", "z_f_ohm", "sync_error_s", "error_km_single", "error_km_median",
            "baseline_km_single", "baseline_km_median",
        ])
        for z_f in shifted.z_f:
            for method in shifted.methods:
                for x_f in shifted.x_f:
                    w.writerow([
                        method, _g(x_f), str(z_f), _g(shifted.tau),
                        _cell(shifted.single(method, x_f, z_f)), _cell(shifted.median(method, x_f, z_f)),
                        _cell(base.single(method, x_f, z_f)), _cell(base.median(method, x_f, z_f)),
                    ])


# terminal spectrum cross-check -------------------------------------------------

@dataclass(frozen=True)
class Fig8Result:
    freq_hz: np.ndarray
    thevenin: np.ndarray
    flawed: np.ndarray
    corrected: np.ndarray
    oracle: np.ndarray
    metrics: dict  # name -> SpectrumComparison against the oracle
    x_f: float
    length_m: float


def run_fig8(cfg: ExperimentConfig) -> Fig8Result:
    """Left-terminal amplitude spectra from three closed forms and the time-stepping oracle.

    The oracle runs on ``dt_s`` with no sub-sampling and snaps the geometry to
    whole time steps; the closed forms use the snapped geometry.
    """
    if len(cfg.xf_m) != 1 or len(cfg.zf_ohm) != 1:
        raise ConfigError("the spectrum cross-check takes one fault position and one impedance")
    line, terms = cfg.line(), cfg.terms()
    z_f = cfg.zf_ohm[0]
    td = TdScenario(line, terms, FaultScenario(cfg.xf_m[0], z_f, cfg.source_kind), cfg.n_samples * cfg.dt_s, cfg.dt_s)
    sim = simulate(td, output_dt=None)
    snapped = line.with_length(sim.length_m)
    fault = FaultScenario(sim.x_f, z_f, cfg.source_kind)
    src = fault_source(cfg.source_kind, sim.u0.grid)
    spectra = {
        "thevenin": terminal_spectra_faulted(snapped, terms, fault, src).u0,
        "flawed": terminal_spectrum_ref27(snapped, terms, fault, src, corrected=False),
        "corrected": terminal_spectrum_ref27(snapped, terms, fault, src, corrected=True),
    }
    band = (cfg.band_lo_hz, min(cfg.band_hi_hz, sim.u0.grid.nyquist_hz))
    metrics = {k: compare_spectra(s, sim.u0, band) for k, s in spectra.items()}
    f = sim.u0.grid.onesided_frequencies / (2 * np.pi)
    sel = (f >= band[0]) & (f <= band[1])
    sim_amp = np.abs(spectrum_of(sim.u0).onesided)
    return Fig8Result(
        f[sel],
        np.abs(spectra["thevenin"].onesided[sel]),
        np.abs(spectra["flawed"].onesided[sel]),
        np.abs(spectra["corrected"].onesided[sel]),
        sim_amp[sel],
        metrics,
        sim.x_f,
        sim.length_m,
    )


def write_fig8_csv(out_dir, res: Fig8Result) -> None:
    out_dir = Path(out_dir)
    with (out_dir / "fig8_spectra.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", "thevenin", "flawed", "corrected", "oracle"])
        for row in zip(res.freq_hz, res.thevenin, res.flawed, res.corrected, res.oracle):
            w.writerow([_g(v) for v in row])
    with (out_dir / "fig8_metrics.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variant", "rel_l2", "max_rel", "n_bins", "x_f_m", "length_m"])
        for k, m in res.metrics.items():
            w.writerow([k, _g(m.rel_l2), _g(m.max_rel), m.n_bins, _g(res.x_f), _g(res.length_m)])
