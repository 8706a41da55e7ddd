"""Per-frequency model of a single-conductor line with lumped terminations.

All functions broadcast over numpy arrays of angular frequency. Impedances
may be given as the :data:`OPEN` sentinel for an infinite impedance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "OPEN",
    "Impedance",
    "LineSpec",
    "TerminationSpec",
    "FaultScenario",
    "TheveninStage",
    "SingularFrequencyError",
    "propagation_constant",
    "characteristic_impedance",
    "reflection_coefficient",
    "input_impedance",
    "thevenin_collapse",
    "mirrored",
]

# Threshold below which a reflection denominator counts as resonant.
SINGULAR_TOL = 1e-12


class _Open:
    """Infinite impedance. Compare with ``is OPEN``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "OPEN"

    def __reduce__(self):
        return (_Open, ())


OPEN = _Open()
Impedance = Union[complex, float, _Open]


class SingularFrequencyError(ArithmeticError):
    """A resonance makes an input impedance unbounded at some frequency bins."""

    def __init__(self, message, bins=None):
        super().__init__(message)
        self.bins = bins


def _check_impedance(z, name):
    if z is OPEN:
        return
    if not np.isfinite(complex(z)):
        raise ValueError(f"{name} must be finite or OPEN, got {z}")
    if complex(z).real < 0:
        raise ValueError(f"{name} must have a non-negative real part, got {z}")


@dataclass(frozen=True)
class LineSpec:
    length_m: float
    r_per_m: float
    l_per_m: float
    c_per_m: float
    loss_mode: str = "lossless"

    def __post_init__(self):
        if not self.length_m > 0:
            raise ValueError("line length must be positive")
        if not (self.l_per_m > 0 and self.c_per_m > 0):
            raise ValueError("per-unit-length L and C must be positive")
        if self.r_per_m < 0:
            raise ValueError("per-unit-length R must be non-negative")
        if self.loss_mode not in ("lossless", "lossy"):
            raise ValueError(f"loss_mode must be 'lossless' or 'lossy', got {self.loss_mode!r}")

    @classmethod
    def table2(cls, length_m: float = 100e3, loss_mode: str = "lossy") -> "LineSpec":
        """Overhead-line constants: 1.60 uH/m, 10.54 pF/m, 0.036 mOhm/m."""
        return cls(length_m, 0.036e-3, 1.60e-6, 10.54e-12, loss_mode)

    @property
    def velocity(self) -> float:
        """Lossless propagation speed 1/sqrt(LC), m/s."""
        return 1.0 / math.sqrt(self.l_per_m * self.c_per_m)

    @property
    def lossless_zc(self) -> float:
        return math.sqrt(self.l_per_m / self.c_per_m)

    @property
    def r_effective(self) -> float:
        return self.r_per_m if self.loss_mode == "lossy" else 0.0

    def with_length(self, length_m: float) -> "LineSpec":
        return LineSpec(length_m, self.r_per_m, self.l_per_m, self.c_per_m, self.loss_mode)


@dataclass(frozen=True)
class TerminationSpec:
    z0: Impedance
    zl: Impedance

    def __post_init__(self):
        _check_impedance(self.z0, "z0")
        _check_impedance(self.zl, "zl")

    def swapped(self) -> "TerminationSpec":
        return TerminationSpec(self.zl, self.z0)


@dataclass(frozen=True)
class FaultScenario:
    x_f: float
    z_f: Impedance = 0.0
    source_kind: str = "step_1_over_jw"

    def __post_init__(self):
        _check_impedance(self.z_f, "z_f")
        if self.source_kind not in ("step_1_over_jw", "dirac_impulse"):
            raise ValueError(f"unknown source kind {self.source_kind!r}")

    def validate_for(self, line: LineSpec):
        if not 0 < self.x_f < line.length_m:
            raise ValueError(f"fault position {self.x_f} m outside (0, {line.length_m}) m")


def mirrored(line: LineSpec, terms: TerminationSpec, scenario: FaultScenario):
    """The same network seen from the right-hand end."""
    return terms.swapped(), FaultScenario(line.length_m - scenario.x_f, scenario.z_f, scenario.source_kind)


def propagation_constant(line: LineSpec, omega):
    w = np.asarray(omega, dtype=float)
    if line.loss_mode == "lossless":
        return 1j * w * math.sqrt(line.l_per_m * line.c_per_m)
    # principal sqrt has Re >= 0
    return np.sqrt((line.r_per_m + 1j * w * line.l_per_m) * (1j * w * line.c_per_m))


def characteristic_impedance(line: LineSpec, omega):
    w = np.asarray(omega, dtype=float)
    if line.loss_mode == "lossless":
        return np.full(w.shape, complex(line.lossless_zc))
    if np.any(w == 0):
        raise ValueError("lossy characteristic impedance is singular at DC; exclude omega = 0")
    return np.sqrt((line.r_per_m + 1j * w * line.l_per_m) / (1j * w * line.c_per_m))


def reflection_coefficient(z_term: Impedance, z_c):
    zc = np.asarray(z_c, dtype=complex)
    if z_term is OPEN:
        return np.ones_like(zc)
    zt = complex(z_term)
    den = zt + zc
    if np.any(den == 0):
        raise ValueError("degenerate termination: z_term == -z_c")
    return (zt - zc) / den


def _line_input(zc, gamma, seg_length, rho, bins_label="omega"):
    e = rho * np.exp(-2.0 * gamma * seg_length)
    den = 1.0 - e
    bad = np.abs(den) < SINGULAR_TOL
    if np.any(bad):
        raise SingularFrequencyError(
            f"input impedance unbounded at {int(np.count_nonzero(bad))} {bins_label} bin(s)",
            np.flatnonzero(bad),
        )
    return zc * (1.0 + e) / den


def input_impedance(line: LineSpec, seg_length: float, z_term: Impedance, omega):
    """Impedance seen into ``seg_length`` metres of line terminated by ``z_term``."""
    if not 0 <= seg_length <= line.length_m:
        raise ValueError(f"segment length {seg_length} outside [0, {line.length_m}]")
    w = np.asarray(omega, dtype=float)
    if seg_length == 0:
        if z_term is OPEN:
            return OPEN
        return np.full(w.shape, complex(z_term))
    zc = characteristic_impedance(line, w)
    gamma = propagation_constant(line, w)
    return _line_input(zc, gamma, seg_length, reflection_coefficient(z_term, zc))


def _parallel(a, b):
    if a is OPEN:
        return b
    if b is OPEN:
        return a
    return a * b / (a + b)


@dataclass(frozen=True)
class TheveninStage:
    """Network reduction seen from the left terminal, per frequency bin.

    ``u_fr_gain`` and ``u_eq_gain`` are ratios to the fault source voltage.
    The ``z_in1``, ``z_par`` and ``z_par_l`` fields feed the
    node-voltage variants in :mod:`emtrloc.forward`.
    """

    z_in2: np.ndarray
    z_par2: np.ndarray
    rho_f: np.ndarray
    z_eq: np.ndarray
    u_fr_gain: np.ndarray
    u_eq_gain: np.ndarray
    z_in1: np.ndarray
    z_par: np.ndarray
    z_par_l: np.ndarray


def thevenin_collapse(line: LineSpec, terms: TerminationSpec, scenario: FaultScenario, omega) -> TheveninStage:
    scenario.validate_for(line)
    w = np.asarray(omega, dtype=float)
    x_f, z_f = scenario.x_f, scenario.z_f
    zc = characteristic_impedance(line, w)
    gamma = propagation_constant(line, w)

    z_in2 = _line_input(zc, gamma, line.length_m - x_f, reflection_coefficient(terms.zl, zc))
    z_in1 = _line_input(zc, gamma, x_f, reflection_coefficient(terms.z0, zc))

    if z_f is OPEN:
        z_par2 = z_in2
        u_fr_gain = np.zeros_like(z_in2)
    else:
        zf = complex(z_f)
        z_par2 = zf * z_in2 / (zf + z_in2)
        u_fr_gain = z_in2 / (z_in2 + zf)

    rho_f = (z_par2 - zc) / (z_par2 + zc)
    e =rho_f * np.exp(-2.0 * gamma * x_f)
    den = 1.0 - e
    bad = np.abs(den) < SINGULAR_TOL
    if np.any(bad):
        raise SingularFrequencyError("Thevenin impedance unbounded", np.flatnonzero(bad))
    z_eq = zc * (1.0 + e) / den
    u_eq_gain = np.exp(-gamma * x_f) * (1.0 - rho_f) / den * u_fr_gain

    return TheveninStage(
        z_in2=z_in2,
        z_par2=np.asarray(z_par2, dtype=complex),
        rho_f=rho_f,
        z_eq=z_eq,
        u_fr_gain=u_fr_gain,
        u_eq_gain=u_eq_gain,
        z_in1=z_in1,
        z_par=_parallel(z_in1, z_in2),
        z_par_l=_parallel(zc, z_in2),
    )
