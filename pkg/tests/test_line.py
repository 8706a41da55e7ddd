import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import nodal_terminal_voltages
from emtrloc.forward import left_transfer
from emtrloc.line import (
    OPEN,
    FaultScenario,
    LineSpec,
    SingularFrequencyError,
    TerminationSpec,
    characteristic_impedance,
    input_impedance,
    mirrored,
    propagation_constant,
    reflection_coefficient,
    thevenin_collapse,
)

W = 2 * np.pi * np.array([1e3, 12.5e3, 77e3, 310e3])


def test_reference_line_constants():
    line = LineSpec.table2()
    # 1 / sqrt(1.60e-6 * 10.54e-12) and sqrt(1.60e-6 / 10.54e-12), worked by hand
    assert math.isclose(line.velocity, 2.4351e8, rel_tol=1e-4)
    assert math.isclose(line.lossless_zc, 389.62, rel_tol=1e-4)
    assert line.length_m == 100e3 and line.loss_mode == "lossy"


def test_linespec_validation():
    with pytest.raises(ValueError):
        LineSpec(0.0, 0, 1e-6, 1e-11)
    with pytest.raises(ValueError):
        LineSpec(1.0, -1, 1e-6, 1e-11)
    with pytest.raises(ValueError):
        LineSpec(1.0, 0, 1e-6, 1e-11, "dispersive")
    with pytest.raises(ValueError):
        TerminationSpec(-5.0, 1.0)
    with pytest.raises(ValueError):
        FaultScenario(1.0, z_f=complex(math.inf))


def test_lossless_gamma_is_imaginary(short_line):
    g = propagation_constant(short_line, W)
    assert np.all(g.real == 0)
    assert np.allclose(g.imag, W / short_line.velocity)


def test_lossy_gamma_and_zc(long_line):
    g = propagation_constant(long_line, W)
    zc = characteristic_impedance(long_line, W)
    z = long_line.r_per_m + 1j * W * long_line.l_per_m
    y = 1j * W * long_line.c_per_m
    assert np.all(g.real > 0)
    assert np.allclose(g * g, z * y)
    assert np.allclose(zc * zc, z / y)
    with pytest.raises(ValueError):
        characteristic_impedance(long_line, [0.0])


def test_reflection_coefficient_limits():
    assert reflection_coefficient(OPEN, [400.0])[0] == 1
    assert reflection_coefficient(0.0, [400.0])[0] == -1
    assert reflection_coefficient(400.0, [400.0])[0] == 0
    with pytest.raises(ValueError):
        reflection_coefficient(-400.0 + 0j, [400.0 + 0j])


@pytest.mark.parametrize("z_term", [0.0, 50.0, 1e5, OPEN])
@pytest.mark.parametrize("loss_mode", ["lossless", "lossy"])
def test_input_impedance_matches_abcd(z_term, loss_mode):
    line = LineSpec.table2(20e3, loss_mode)
    d = 7.3e3
    zc = characteristic_impedance(line, W)
    g = propagation_constant(line, W)
    a, b, c = np.cosh(g * d), zc * np.sinh(g * d), np.sinh(g * d) / zc
    ref = a / c if z_term is OPEN else (a * z_term + b) / (c * z_term + a)
    got = input_impedance(line, d, z_term, W)
    assert np.allclose(got, ref, rtol=1e-10)


def test_input_impedance_zero_length():
    line = LineSpec.table2(20e3, "lossless")
    assert input_impedance(line, 0.0, OPEN, W) is OPEN
    assert np.all(input_impedance(line, 0.0, 75.0, W) == 75.0)


def test_quarter_wave_open_line_is_singular():
    line = LineSpec.table2(20e3, "lossless")
    # open stub: Z_in = -j Z_C cot(beta d), infinite where beta d = k pi
    w = np.array([2 * np.pi * line.velocity / (2 * 20e3)])
    with pytest.raises(SingularFrequencyError):
        input_impedance(line, 20e3, OPEN, w)


@pytest.mark.parametrize("z_f", [1.0, 100.0, 300.0, 1000.0])
@pytest.mark.parametrize("loss_mode", ["lossless", "lossy"])
def test_thevenin_matches_nodal_oracle(z_f, loss_mode):
    line = LineSpec.table2(100e3, loss_mode)
    terms = TerminationSpec(1e5, 1e5)
    sc = FaultScenario(37.5e3, z_f)
    u0_ref, ul_ref = nodal_terminal_voltages(line, terms, sc, W)
    assert np.allclose(left_transfer(line, terms, sc, W), u0_ref, rtol=1e-10, atol=0)
    m_terms, m_sc = mirrored(line, terms, sc)
    assert np.allclose(left_transfer(line, m_terms, m_sc, W), ul_ref, rtol=1e-10, atol=0)


@given(
    x_frac=st.floats(0.02, 0.98),
    z_f=st.floats(0.5, 5e3),
    z0=st.floats(10.0, 1e6),
    zl=st.floats(10.0, 1e6),
)
def test_thevenin_matches_nodal_oracle_property(x_frac, z_f, z0, zl):
    line = LineSpec.table2(50e3, "lossy")
    terms = TerminationSpec(z0, zl)
    sc = FaultScenario(x_frac * line.length_m, z_f)
    u0_ref, _ = nodal_terminal_voltages(line, terms, sc, W)
    got = left_transfer(line, terms, sc, W)
    assert np.allclose(got, u0_ref, rtol=1e-8, atol=1e-14)


def test_open_fault_injects_nothing():
    line = LineSpec.table2(20e3, "lossless")
    st_ = thevenin_collapse(line, TerminationSpec(1e5, 1e5), FaultScenario(5e3, OPEN), W)
    assert np.all(st_.u_eq_gain == 0)


def test_fault_outside_line_rejected():
    line = LineSpec.table2(20e3, "lossless")
    with pytest.raises(ValueError):
        thevenin_collapse(line, TerminationSpec(1e5, 1e5), FaultScenario(20e3, 1.0), W)
