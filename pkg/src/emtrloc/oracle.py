"""Time-stepping reference simulator for the faulted line.

Each lossless line section is a Bergeron model: an integer-step delay with
characteristic-impedance history currents. Series resistance, when the line
is lossy, is lumped as R/4, R/2, R/4 around two half-length sections. The
node equations are linear with a constant conductance matrix, so it is
factored once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .line import OPEN, FaultScenario, LineSpec, TerminationSpec
from .signal import FrequencyGrid, SampledRecord, Spectrum, decimate, spectrum_of

__all__ = ["TdScenario", "SimResult", "SimulationError", "simulate", "compare_spectra", "SpectrumComparison"]


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class TdScenario:
    line: LineSpec
    terms: TerminationSpec
    fault: FaultScenario
    duration: float
    dt_sim: float = 1e-7

    def __post_init__(self):
        self.fault.validate_for(self.line)
        if not self.dt_sim > 0:
            raise ValueError("dt_sim must be positive")
        if self.duration < 4 * self.line.length_m / self.line.velocity:
            raise ValueError("duration must cover at least four one-way line transits")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt_sim))

    def section_steps(self) -> tuple[int, int]:
        """Integer delays of the two segments; even when losses are lumped."""
        hop = self.line.velocity * self.dt_sim
        quantum = 2 if self.line.r_effective > 0 else 1
        n1 = max(quantum, quantum * int(round(self.fault.x_f / hop / quantum)))
        n2 = max(quantum, quantum * int(round((self.line.length_m - self.fault.x_f) / hop / quantum)))
        return n1, n2


@dataclass(frozen=True)
class SimResult:
    u0: SampledRecord
    ul: SampledRecord
    x_f: float  # snapped fault distance actually simulated
    length_m: float  # snapped line length actually simulated
    steps: tuple[int, int]
    uf: SampledRecord | None = None  # fault-node voltage on the simulation grid


def _source(kind: str, n: int) -> np.ndarray:
    u = np.zeros(n)
    if kind == "step_1_over_jw":
        u[:] = 1.0
    elif kind == "dirac_impulse":
        u[0] = 1.0  # one-step pulse of area dt_sim * 1 V
    else:
        raise ValueError(f"unknown source kind {kind!r}")
    return u


class _Network:
    def __init__(self):
        self.n_nodes = 0
        self.g = []  # (a, b, conductance); b = -1 is ground
        self.sections = []  # (a, b, steps)

    def node(self) -> int:
        self.n_nodes += 1
        return self.n_nodes - 1

    def segment(self, a, b, steps, zc, r_total):
        if r_total == 0.0:
            self.sections.append((a, b, steps))
            return
        half = steps // 2
        a1, a2, b2, b1 = self.node(), self.node(), self.node(), self.node()
        self.g.append((a, a1, 4.0 / r_total))
        self.sections.append((a1, a2, half))
        self.g.append((a2, b2, 2.0 / r_total))
        self.sections.append((b2, b1, half))
        self.g.append((b1, b, 4.0 / r_total))


def simulate(scenario: TdScenario, output_dt: float | None = 1e-6) -> SimResult:
    """Terminal voltages of the faulted line, sampled every ``output_dt``.

    ``output_dt=None`` keeps the simulation step. Decimation is plain
    sub-sampling; the caller chooses a band that stays clear of aliasing.
    """
    line, terms, fault = scenario.line, scenario.terms, scenario.fault
    dt = scenario.dt_sim
    n1, n2 = scenario.section_steps()
    hop = line.velocity * dt
    zc = line.lossless_zc
    r = line.r_effective

    net = _Network()
    left, mid, right = net.node(), net.node(), net.node()
    net.segment(left, mid, n1, zc, r * n1 * hop)
    net.segment(mid, right, n2, zc, r * n2 * hop)
    if terms.z0 is not OPEN:
        net.g.append((left, -1, 1.0 / _real_ohm(terms.z0, "z0")))
    if terms.zl is not OPEN:
        net.g.append((right, -1, 1.0 / _real_ohm(terms.zl, "zl")))

    n_steps = scenario.n_steps
    u_src = _source(fault.source_kind, n_steps)
    clamp = fault.z_f is not OPEN and complex(fault.z_f) == 0
    if not clamp and fault.z_f is not OPEN:
        g_f = 1.0 / _real_ohm(fault.z_f, "z_f")
        net.g.append((mid, -1, g_f))
    else:
        g_f = 0.0

    n = net.n_nodes
    G = np.zeros((n, n))
    for a, b, g in net.g:
        G[a, a] += g
        if b >= 0:
            G[b, b] += g
            G[a, b] -= g
            G[b, a] -= g
    sec_a = np.array([s[0] for s in net.sections])
    sec_b = np.array([s[1] for s in net.sections])
    sec_n = np.array([s[2] for s in net.sections])
    y = 1.0 / zc
    for a, b in zip(sec_a, sec_b):
        G[a, a] += y
        G[b, b] += y

    unknown = np.array([i for i in range(n) if not (clamp and i == mid)])
    G_uu = G[np.ix_(unknown, unknown)]
    G_uk = G[unknown, mid] if clamp else None
    solve = np.linalg.inv(G_uu)

    ring = int(sec_n.max())
    hist_a = np.zeros((len(sec_n), ring))
    hist_b = np.zeros((len(sec_n), ring))
    rows = np.arange(len(sec_n))
    v0 = np.empty(n_steps)
    vl = np.empty(n_steps)
    vf = np.empty(n_steps)
    v = np.zeros(n)
    inj = np.zeros(n)
    for t in range(n_steps):
        slot_a = (t % sec_n)
        ha = hist_a[rows, slot_a]
        hb = hist_b[rows, slot_a]
        inj[:] = 0.0
        np.add.at(inj, sec_a, -ha)
        np.add.at(inj, sec_b, -hb)
        if clamp:
            v[mid] = u_src[t]
            v[unknown] = solve @ (inj[unknown] - G_uk * u_src[t])
        else:
            inj[mid] += g_f * u_src[t]
            v[:] = solve @ inj
        va, vb = v[sec_a], v[sec_b]
        i_ab = va * y + ha
        i_ba = vb * y + hb
        hist_a[rows, slot_a] = -vb * y - i_ba
        hist_b[rows, slot_a] = -va * y - i_ab
        v0[t] = v[left]
        vl[t] = v[right]
        vf[t] = v[mid]
        if not (math.isfinite(v0[t]) and math.isfinite(vl[t])):
            raise SimulationError(f"non-finite terminal voltage at step {t}")

    grid = FrequencyGrid(n_steps, dt)
    u0, ul = SampledRecord(v0, grid), SampledRecord(vl, grid)
    if output_dt is not None:
        factor = output_dt / dt
        if abs(factor - round(factor)) > 1e-9 * factor:
            raise ValueError(f"output_dt {output_dt} is not a multiple of dt_sim {dt}")
        u0, ul = decimate(u0, int(round(factor))), decimate(ul, int(round(factor)))
    return SimResult(u0, ul, n1 * hop, (n1 + n2) * hop, (n1, n2), SampledRecord(vf, grid))


def _real_ohm(z, name) -> float:
    zc = complex(z)
    if zc.imag != 0 or zc.real <= 0:
        raise ValueError(f"{name} must be a positive resistance in the time-domain model, got {z}")
    return zc.real


@dataclass(frozen=True)
class SpectrumComparison:
    rel_l2: float
    max_rel: float
    n_bins: int


def compare_spectra(analytic: Spectrum, simulated: SampledRecord, band) -> SpectrumComparison:
    """Amplitude-spectrum mismatch over ``band = (f_lo, f_hi)`` Hz.

    ``rel_l2`` is ``||S| - |A||_2 / ||A||_2``; ``max_rel`` is the largest
    per-bin amplitude gap divided by the largest analytic amplitude.
    """
    if analytic.grid != simulated.grid:
        raise ValueError(f"grid mismatch: {analytic.grid} vs {simulated.grid}")
    lo, hi = band
    grid = analytic.grid
    if not 0 <= lo < hi <= grid.nyquist_hz:
        raise ValueError(f"band {band} must lie inside [0, {grid.nyquist_hz}] Hz")
    f = grid.onesided_frequencies / (2 * np.pi)
    sel = (f >= lo) & (f <= hi)
    a = np.abs(analytic.onesided[sel])
    s = np.abs(spectrum_of(simulated).onesided[sel])
    gap = np.abs(s - a)
    return SpectrumComparison(
        float(np.linalg.norm(gap) / np.linalg.norm(a)),
        float(gap.max() / a.max()),
        int(sel.sum()),
    )
