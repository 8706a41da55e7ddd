"""Sampled-signal substrate shared by every locator.

Conventions
-----------
* Spectra live on the full two-sided DFT grid (``numpy.fft.fft`` ordering),
  unscaled: ``X[k] = sum_n x[n] exp(-2j*pi*k*n/N)``.
* Time reversal is circular, ``r'[n] = r[(N - n) mod N]``, so that reversing a
  real record conjugates its DFT exactly, bin for bin.
* Energies are in signal-units**2 * samples; the frequency-domain form carries
  the ``1/N`` Parseval factor.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "FrequencyGrid",
    "SampledRecord",
    "Spectrum",
    "spectrum_of",
    "waveform_of",
    "time_reverse",
    "signal_energy",
    "add_awgn",
    "decimate",
    "delay",
    "hermitian_spectrum",
    "write_waveform_csv",
    "read_waveform_csv",
]

# Relative tolerance for the conjugate-symmetry check in waveform_of.
_SYMMETRY_RTOL = 1e-9


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FrequencyGrid:
    """Sampling grid: ``n_samples`` points spaced ``dt`` seconds apart."""

    n_samples: int
    dt: float

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 2 or self.n_samples % 2:
            raise ValueError(f"n_samples must be an even integer >= 2, got {self.n_samples}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def duration(self) -> float:
        return self.n_samples * self.dt

    @property
    def df(self) -> float:
        return 1.0 / self.duration

    @property
    def nyquist_hz(self) -> float:
        return 0.5 / self.dt

    @property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies of the two-sided grid, fft ordering (rad/s)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_samples, self.dt)

    @property
    def onesided_frequencies(self) -> np.ndarray:
        """Non-negative angular frequencies ``0 .. pi/dt`` (``N/2 + 1`` bins)."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n_samples, self.dt)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt


@dataclass(frozen=True)
class SampledRecord:
    values: np.ndarray
    grid: FrequencyGrid
    t0_offset: float = 0.0

    def __post_init__(self):
        vals = _frozen(self.values, float)
        if vals.ndim != 1 or vals.size != self.grid.n_samples:
            raise ValueError(f"record has {vals.size} samples, grid expects {self.grid.n_samples}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("record contains non-finite samples")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "t0_offset", float(self.t0_offset))

    @property
    def times(self) -> np.ndarray:
        return self.t0_offset + self.grid.times


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    grid: FrequencyGrid = field()

    def __post_init__(self):
        vals = _frozen(self.values, complex)
        if vals.ndim != 1 or vals.size != self.grid.n_samples:
            raise ValueError(f"spectrum has {vals.size} bins, grid expects {self.grid.n_samples}")
        object.__setattr__(self, "values", vals)

    @property
    def onesided(self) -> np.ndarray:
        return self.values[: self.grid.n_samples // 2 + 1]

    def is_hermitian(self, rtol: float = _SYMMETRY_RTOL) -> bool:
        x = self.values
        mirrored = np.conj(np.roll(x[::-1], 1))
        scale = max(np.max(np.abs(x)), np.finfo(float).tiny)
        return bool(np.max(np.abs(x - mirrored)) <= rtol * scale)

    def __mul__(self, other):
        if isinstance(other, Spectrum):
            _check_same_grid(self.grid, other.grid)
            return Spectrum(self.values * other.values, self.grid)
        return Spectrum(self.values * other, self.grid)

    __rmul__ = __mul__


def _check_same_grid(a: FrequencyGrid, b: FrequencyGrid):
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def hermitian_spectrum(onesided, grid: FrequencyGrid) -> Spectrum:
    """Build a real-signal spectrum from its non-negative-frequency bins.

    DC and Nyquist bins keep only their real part; negative-frequency bins are
    the conjugates of their positive partners.
    """
    pos = np.asarray(onesided, dtype=complex)
    n = grid.n_samples
    if pos.shape != (n // 2 + 1,):
        raise ValueError(f"expected {n // 2 + 1} one-sided bins, got {pos.shape}")
    full = np.empty(n, dtype=complex)
    full[: n // 2 + 1] = pos
    full[0] = pos[0].real
    full[n // 2] = pos[-1].real
    full[n // 2 + 1:] = np.conj(pos[1: n // 2][::-1])
    return Spectrum(full, grid)


def spectrum_of(record: SampledRecord) -> Spectrum:
    return Spectrum(np.fft.fft(record.values), record.grid)


def waveform_of(spectrum: Spectrum, t0_offset: float = 0.0) -> SampledRecord:
    """Real inverse DFT. Rejects spectra that do not describe a real signal."""
    if not spectrum.is_hermitian():
        raise ValueError("spectrum is not conjugate-symmetric; it does not describe a real record")
    return SampledRecord(np.fft.ifft(spectrum.values).real, spectrum.grid, t0_offset)


def time_reverse(record: SampledRecord) -> SampledRecord:
    return SampledRecord(np.roll(record.values[::-1], 1), record.grid, record.t0_offset)


def signal_energy(x: Union[SampledRecord, Spectrum]) -> float:
    """Parseval energy, identical for a record and its spectrum."""
    if isinstance(x, SampledRecord):
        return float(np.sum(x.values ** 2))
    if isinstance(x, Spectrum):
        return float(np.sum(np.abs(x.values) ** 2) / x.grid.n_samples)
    raise TypeError(f"expected SampledRecord or Spectrum, got {type(x).__name__}")


def add_awgn(record: SampledRecord, snr_db: float, seed) -> SampledRecord:
    """Add white Gaussian noise at ``snr_db`` relative to the record's mean-square.

    ``snr_db = math.inf`` disables noise and returns the record unchanged. The
    noise stream is fully determined by ``seed`` (an int or SeedSequence).
    """
    if math.isinf(snr_db) and snr_db > 0:
        return record
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite or +inf, got {snr_db}")
    power = float(np.mean(record.values ** 2))
    if power == 0.0:
        raise ValueError("SNR undefined for a zero-energy record")
    sigma = math.sqrt(power / 10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, record.grid.n_samples)
    return SampledRecord(record.values + noise, record.grid, record.t0_offset)


def decimate(record: SampledRecord, factor: int) -> SampledRecord:
    """Keep every ``factor``-th sample. No anti-alias filtering is applied."""
    if int(factor) != factor or factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    factor = int(factor)
    if record.grid.n_samples % factor:
        raise ValueError(f"factor {factor} does not divide {record.grid.n_samples} samples")
    if factor == 1:
        return record
    grid = FrequencyGrid(record.grid.n_samples // factor, record.grid.dt * factor)
    return SampledRecord(record.values[::factor], grid, record.t0_offset)


def delay(x: Union[SampledRecord, Spectrum], tau: float):
    """Circularly delay by ``tau`` seconds via the phase ramp ``exp(-j w tau)``.

    Integer-sample delays reduce to ``np.roll`` exactly. For fractional delays
    the Nyquist bin keeps only its real part.
    """
    if isinstance(x, SampledRecord):
        shift = tau / x.grid.dt
        if float(shift).is_integer():
            return SampledRecord(np.roll(x.values, int(shift)), x.grid, x.t0_offset)
        return waveform_of(delay(spectrum_of(x), tau), x.t0_offset)
    if isinstance(x, Spectrum):
        ramp = np.exp(-1j * x.grid.onesided_frequencies * tau)
        return hermitian_spectrum(x.onesided * ramp, x.grid)
    raise TypeError(f"expected SampledRecord or Spectrum, got {type(x).__name__}")


def write_waveform_csv(path, record: SampledRecord) -> None:
    """Two-column ``time_s,value`` CSV at 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "value"])
        for t, v in zip(record.times, record.values):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])


def read_waveform_csv(path) -> SampledRecord:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["time_s", "value"]:
        raise ValueError(f"{path}: expected header 'time_s,value'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two samples")
    t, v = data[:, 0], data[:, 1]
    t0 = t[0]
    dt = t[1] - t[0]
    expected = t0 + np.arange(t.size) * dt
    if not np.allclose(t, expected, rtol=1e-9, atol=1e-9 * abs(dt)):
        raise ValueError(f"{path}: time column is not uniformly sampled")
    return SampledRecord(v, FrequencyGrid(t.size, dt), t0)
