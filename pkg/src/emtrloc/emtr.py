"""Back-injection energy profiles and fault location extraction.

Each profile scans guessed fault positions ``x'`` and evaluates, per bin, a
kernel ``K(x', w)`` applied to the conjugated (time-reversed) terminal
spectrum. Energies use Parseval on the one-sided grid: interior bins count
twice, DC and Nyquist are dropped, and the total carries ``1/N``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .line import (
    OPEN,
    LineSpec,
    TerminationSpec,
    characteristic_impedance,
    propagation_constant,
    reflection_coefficient,
)
from .signal import Spectrum, delay

__all__ = [
    "ScanGrid",
    "EnergyProfile",
    "LocationResult",
    "NoLocalizationError",
    "emtr1_profile",
    "emtr2_profile",
    "emtr3_profile",
    "emtr_profiles",
    "locate",
]

METHODS = ("EMTR1", "EMTR2", "EMTR3")
_DEN_TOL = 1e-12
_FLAT_RTOL = 1e-9
# positions per kernel block; bounds memory at ~chunk * bins complex values
_CHUNK = 16


class NoLocalizationError(RuntimeError):
    """The profile has no distinguishable extremum."""

    def __init__(self, message, margin=1.0):
        super().__init__(message)
        self.margin = margin


@dataclass(frozen=True)
class ScanGrid:
    positions: np.ndarray
    step: float

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size == 0:
            raise ValueError("scan needs at least one position")
        if pos.size > 1 and np.any(np.diff(pos) <= 0):
            raise ValueError("scan positions must be strictly increasing")
        if not self.step > 0:
            raise ValueError("scan step must be positive")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def uniform(cls, length_m: float, step: float) -> "ScanGrid":
        """``0, step, 2*step, ...`` up to and including ``length_m``."""
        if not step > 0:
            raise ValueError("scan step must be positive")
        n = int(math.floor(length_m / step + 1e-9))
        pos = np.arange(n + 1) * step
        if length_m - pos[-1] > 1e-9 * length_m:
            pos = np.append(pos, length_m)
        else:
            pos[-1] = min(pos[-1], length_m)
        return cls(pos, step)


@dataclass(frozen=True)
class EnergyProfile:
    scan: ScanGrid
    energy: np.ndarray
    method: str
    skipped_bins: int
    length_m: float

    def __post_init__(self):
        e = np.array(self.energy, dtype=float)
        if e.shape != self.scan.positions.shape:
            raise ValueError("energy length does not match scan")
        if not np.all(np.isfinite(e)):
            raise ValueError("energy contains non-finite values")
        # round-off in the cross term can dip a hair below zero
        e = np.maximum(e, 0.0)
        e.setflags(write=False)
        object.__setattr__(self, "energy", e)
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class LocationResult:
    x_hat: float
    method: str
    criterion: str
    margin: float
    skipped_bins: int = 0


def _bins(spec: Spectrum, line: LineSpec, band):
    """Indices of one-sided bins that enter the energy sum, and their weights."""
    grid = spec.grid
    f = grid.onesided_frequencies / (2 * np.pi)
    keep = np.ones(f.size, dtype=bool)
    keep[0] = False
    keep[-1] = False
    if band is not None:
        lo, hi = band
        keep &= (f >= lo) & (f <= hi)
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        raise ValueError("no frequency bins inside the requested band")
    return idx, 2.0 / grid.n_samples


def _line_terms(line, terms, w):
    zc = characteristic_impedance(line, w)
    gamma = propagation_constant(line, w)
    rho0 = reflection_coefficient(terms.z0, zc)
    rhol = reflection_coefficient(terms.zl, zc)
    return zc, gamma, rho0, rhol


def _sq(z):
    return z.real * z.real + z.imag * z.imag


def _exp_chunks(gamma, scan: ScanGrid):
    """Yield ``(slice, exp(-gamma x), exp(+gamma x))`` over blocks of scan positions.

    On a uniform scan each block reuses one table of per-step phase factors,
    so only a single row of exponentials is evaluated per block.
    """
    pos = scan.positions
    steps = np.diff(pos)
    uniform = pos.size > 1 and np.allclose(steps, scan.step, rtol=1e-12, atol=0)
    if uniform:
        offs = np.arange(_CHUNK)[:, None] * scan.step
        down = np.exp(-gamma * offs)
        up = np.exp(gamma * offs)
    for s in range(0, pos.size, _CHUNK):
        sl = slice(s, min(s + _CHUNK, pos.size))
        n = sl.stop - sl.start
        if uniform:
            x0 = pos[0] + s * scan.step
            yield sl, np.exp(-gamma * x0) * down[:n], np.exp(gamma * x0) * up[:n]
        else:
            x = pos[sl, None]
            yield sl, np.exp(-gamma * x), np.exp(gamma * x)


def _stack(spectra, idx):
    grid = spectra[0].grid
    for sp in spectra:
        if sp.grid != grid:
            raise ValueError(f"grid mismatch: {grid} vs {sp.grid}")
    return np.stack([sp.onesided[idx] for sp in spectra], axis=1)


def emtr_profiles(
    method: str,
    u0s,
    line: LineSpec,
    terms: TerminationSpec,
    scan: ScanGrid,
    uls=None,
    band=None,
    ul_offset: float = 0.0,
) -> list:
    """Profiles for many records at once; the kernels are evaluated a single time.

    ``ul_offset`` is how many seconds later the right record's first sample
    was taken than the left one's; it is removed by delaying each ``ul``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    u0s = list(u0s)
    if not u0s:
        raise ValueError("no records to profile")
    if method == "EMTR1" and terms.z0 is OPEN:
        raise ValueError("the current criterion needs a finite source impedance z0")
    if method == "EMTR3":
        if uls is None:
            raise ValueError("the two-ended criterion needs right-terminal records")
        uls = list(uls)
        if len(uls) != len(u0s):
            raise ValueError("need one right record per left record")
        if ul_offset:
            uls = [delay(u, ul_offset) for u in uls]
    idx, weight = _bins(u0s[0], line, band)
    w = u0s[0].grid.onesided_frequencies[idx]
    _, gamma, rho0, rhol = _line_terms(line, terms, w)
    L = line.length_m

    if method == "EMTR1":
        bad = np.zeros(w.size, dtype=bool)
        for _, e, _ in _exp_chunks(gamma, scan):
            bad |= np.any(np.abs(1.0 + rho0 * e * e) < _DEN_TOL, axis=0)
    else:
        den = 2.0 * (1.0 - rho0 * rhol * np.exp(-2.0 * gamma * L))
        bad = np.abs(den) < _DEN_TOL
    ok = ~bad
    idx, gamma, rho0, rhol = idx[ok], gamma[ok], rho0[ok], rhol[ok]
    a0 = _stack(u0s, idx)
    p0 = _sq(a0)
    out = np.empty((len(u0s), scan.positions.size))

    if method == "EMTR1":
        g1 = (1.0 + rho0) / complex(terms.z0)
        for sl, e, _ in _exp_chunks(gamma, scan):
            out[:, sl] = (_sq(g1 * e / (1.0 + rho0 * e * e)) @ p0).T
    else:
        den = den[ok]
        e_l = np.exp(-gamma * L)
        # a(x) = pa e^{-gx} + qa e^{gx};  b(x) = pb e^{-gx} + qb e^{gx}
        pa = (1.0 - rho0) / den
        qa = pa * rhol * e_l * e_l
        if method == "EMTR2":
            for sl, e, ei in _exp_chunks(gamma, scan):
                out[:, sl] = (_sq(pa * e + qa * ei) @ p0).T
        else:
            qb = (1.0 - rhol) * e_l / den
            pb = qb * rho0
            al = _stack(uls, idx)
            pl = _sq(al)
            cross = np.conj(a0) * al
            for sl, e, ei in _exp_chunks(gamma, scan):
                ka = pa * e + qa * ei
                kb = pb * e + qb * ei
                # |a U0* - b UL*|^2 = |a|^2|U0|^2 + |b|^2|UL|^2 - 2 Re(a b* U0* UL)
                energy = _sq(ka) @ p0 + _sq(kb) @ pl - 2.0 * np.real((ka * np.conj(kb)) @ cross)
                out[:, sl] = energy.T
    skipped = int(np.count_nonzero(bad))
    return [EnergyProfile(scan, weight * e, method, skipped, L) for e in out]


def emtr1_profile(u0: Spectrum, line: LineSpec, terms: TerminationSpec, scan: ScanGrid, band=None) -> EnergyProfile:
    """Short-circuit branch current energy at each guessed position."""
    return emtr_profiles("EMTR1", [u0], line, terms, scan, band=band)[0]


def emtr2_profile(u0: Spectrum, line: LineSpec, terms: TerminationSpec, scan: ScanGrid, band=None) -> EnergyProfile:
    """Open-branch voltage energy with only the left record injected."""
    return emtr_profiles("EMTR2", [u0], line, terms, scan, band=band)[0]


def emtr3_profile(
    u0: Spectrum,
    ul: Spectrum,
    line: LineSpec,
    terms: TerminationSpec,
    scan: ScanGrid,
    band=None,
    ul_offset: float = 0.0,
) -> EnergyProfile:
    """Open-branch voltage energy with both records injected, the right one negated."""
    return emtr_profiles("EMTR3", [u0], line, terms, scan, uls=[ul], band=band, ul_offset=ul_offset)[0]


def _runner_up(values, best, pick):
    mask = np.ones(values.size, dtype=bool)
    mask[max(best - 1, 0):best + 2] = False
    if not mask.any():
        return None
    return pick(values[mask])


def locate(profile: EnergyProfile) -> LocationResult:
    """Argmax for the current criterion, mirrored argmin for the voltage ones.

    Raises :class:`NoLocalizationError` when the profile is flat or its
    extremum does not stand out from the runner-up.
    """
    e = profile.energy
    pos = profile.scan.positions
    top = float(np.max(e))
    if top == 0.0 or np.ptp(e) <= _FLAT_RTOL * top:
        raise NoLocalizationError(f"{profile.method}: flat energy profile")
    if profile.method == "EMTR1":
        best = int(np.argmax(e))  # first occurrence breaks ties
        other = _runner_up(e, best, np.max)
        margin = math.inf if other in (None, 0.0) else e[best] / other
        x_hat, criterion = float(pos[best]), "argmax"
    else:
        best = int(np.argmin(e))
        other = _runner_up(e, best, np.min)
        margin = math.inf if other is None or e[best] == 0.0 else other / e[best]
        x_hat, criterion = float(profile.length_m - pos[best]), "mirrored-argmin"
    if margin < 1.0 + _FLAT_RTOL:
        raise NoLocalizationError(f"{profile.method}: extremum not distinguishable (margin {margin:.12g})", margin)
    x_hat = min(max(x_hat, 0.0), profile.length_m)
    return LocationResult(x_hat, profile.method, criterion, float(margin), profile.skipped_bins)
