"""Forward-time terminal voltages produced by a fault source on the line.

Every synthesizer evaluates its transfer function on the non-negative
frequency bins of the grid and extends the result to a real-signal spectrum.
Lossy lines skip the DC bin (their characteristic impedance is singular
there); resonant bins are zeroed and reported in ``singular``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .line import (
    OPEN,
    FaultScenario,
    LineSpec,
    SingularFrequencyError,
    TerminationSpec,
    characteristic_impedance,
    mirrored,
    propagation_constant,
    reflection_coefficient,
    thevenin_collapse,
)
from .signal import FrequencyGrid, Spectrum, hermitian_spectrum

__all__ = [
    "TerminalSpectra",
    "fault_source",
    "terminal_spectrum_ideal",
    "terminal_spectra_faulted",
    "terminal_spectrum_ref27",
    "left_transfer",
]


@dataclass(frozen=True)
class TerminalSpectra:
    u0: Spectrum
    ul: Spectrum
    scenario: FaultScenario
    singular: np.ndarray  # one-sided bool mask of zeroed bins

    def __post_init__(self):
        if self.u0.grid != self.ul.grid:
            raise ValueError("u0 and ul must share a grid")


def fault_source(kind: str, grid: FrequencyGrid, cutoff_hz: float | None = None) -> Spectrum:
    """Fault source spectrum.

    ``step_1_over_jw`` is ``1/(j w)`` with the DC pole replaced by 0;
    ``dirac_impulse`` is flat. ``cutoff_hz`` band-limits the source by zeroing
    every bin at or above that frequency.
    """
    w = grid.onesided_frequencies
    if kind == "step_1_over_jw":
        x = np.zeros(w.size, dtype=complex)
        x[1:] = 1.0 / (1j * w[1:])
    elif kind == "dirac_impulse":
        x = np.ones(w.size, dtype=complex)
    else:
        raise ValueError(f"unknown source kind {kind!r}")
    if cutoff_hz is not None:
        x[w / (2 * np.pi) >= cutoff_hz] = 0.0
    return hermitian_spectrum(x, grid)


def _evaluable(line: LineSpec, grid: FrequencyGrid) -> np.ndarray:
    w = grid.onesided_frequencies
    mask = np.ones(w.size, dtype=bool)
    if line.loss_mode == "lossy":
        mask[0] = False
    return mask


def _sweep(transfer, line: LineSpec, grid: FrequencyGrid):
    """Evaluate ``transfer(omega)`` on the one-sided grid, dropping singular bins."""
    w = grid.onesided_frequencies
    active = _evaluable(line, grid)
    singular = np.zeros(w.size, dtype=bool)
    out = np.zeros(w.size, dtype=complex)
    while True:
        idx = np.flatnonzero(active & ~singular)
        try:
            out[idx] = transfer(w[idx])
            break
        except SingularFrequencyError as err:
            singular[idx[err.bins]] = True
    return out, singular


def _ideal_h(line, z0, x_f, w):
    zc = characteristic_impedance(line, w)
    gamma = propagation_constant(line, w)
    rho0 = reflection_coefficient(z0, zc)
    den = 1.0 + rho0 * np.exp(-2.0 * gamma * x_f)
    bad = np.abs(den) < 1e-12
    if np.any(bad):
        raise SingularFrequencyError("ideal transfer unbounded", np.flatnonzero(bad))
    return (1.0 + rho0) * np.exp(-gamma * x_f) / den


def terminal_spectrum_ideal(line: LineSpec, terms: TerminationSpec, x_f: float, u_f: Spectrum) -> Spectrum:
    """Left-terminal voltage for a zero-impedance fault driven by ``u_f``."""
    if not 0 < x_f < line.length_m:
        raise ValueError(f"fault position {x_f} m outside (0, {line.length_m}) m")
    h, _ = _sweep(lambda w: _ideal_h(line, terms.z0, x_f, w), line, u_f.grid)
    return hermitian_spectrum(h * u_f.onesided, u_f.grid)


def left_transfer(line: LineSpec, terms: TerminationSpec, scenario: FaultScenario, omega):
    """``U_0 / U_fs`` via the Thevenin reduction."""
    st = thevenin_collapse(line, terms, scenario, omega)
    if terms.z0 is OPEN:
        return st.u_eq_gain
    z0 = complex(terms.z0)
    return z0 / (z0 + st.z_eq) * st.u_eq_gain


def terminal_spectra_faulted(
    line: LineSpec, terms: TerminationSpec, scenario: FaultScenario, u_fs: Spectrum
) -> TerminalSpectra:
    """Voltages at both terminals for a fault branch ``z_f`` in series with ``u_fs``.

    The right-hand voltage comes from the same reduction applied to the
    mirrored network.
    """
    scenario.validate_for(line)
    grid = u_fs.grid
    h0, s0 = _sweep(lambda w: left_transfer(line, terms, scenario, w), line, grid)
    m_terms, m_scenario = mirrored(line, terms, scenario)
    hl, sl = _sweep(lambda w: left_transfer(line, m_terms, m_scenario, w), line, grid)
    singular = s0 | sl
    h0[singular] = 0.0
    hl[singular] = 0.0
    return TerminalSpectra(
        hermitian_spectrum(h0 * u_fs.onesided, grid),
        hermitian_spectrum(hl * u_fs.onesided, grid),
        scenario,
        singular,
    )


def _ref27_h(line, terms, scenario, w, corrected):
    st = thevenin_collapse(line, terms, scenario, w)
    if scenario.z_f is OPEN:
        return np.zeros(np.shape(w), dtype=complex)
    zf = complex(scenario.z_f)
    z_div = st.z_par_l if corrected else st.z_par
    u_f = z_div / (zf + z_div)
    zc = characteristic_impedance(line, w)
    gamma = propagation_constant(line, w)
    rho0 = reflection_coefficient(terms.z0, zc)
    x_f = scenario.x_f
    return (1.0 + rho0) * np.exp(-gamma * x_f) / (1.0 - st.rho_f * rho0 * np.exp(-2.0 * gamma * x_f)) * u_f


def terminal_spectrum_ref27(
    line: LineSpec, terms: TerminationSpec, scenario: FaultScenario, u_fs: Spectrum, corrected: bool
) -> Spectrum:
    """Left-terminal voltage from the fault-point voltage-divider formulation.

    With ``corrected=False`` the divider uses both line input impedances and
    the multiple reflections on ``[0, x_f]`` get counted twice. With
    ``corrected=True`` the divider sees ``Z_C || Z_in2`` and agrees with
    :func:`terminal_spectra_faulted`.
    """
    scenario.validate_for(line)
    h, _ = _sweep(lambda w: _ref27_h(line, terms, scenario, w, corrected), line, u_fs.grid)
    return hermitian_spectrum(h * u_fs.onesided, u_fs.grid)
