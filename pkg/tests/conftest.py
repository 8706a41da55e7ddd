import numpy as np
import pytest
from hypothesis import settings

from emtrloc.line import OPEN, FaultScenario, LineSpec, TerminationSpec
from emtrloc.line import characteristic_impedance, propagation_constant

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def nodal_terminal_voltages(line, terms, scenario, omega):
    """Reference solution: three-node admittance matrix with a Norton fault branch.

    Independent of the reflection-coefficient algebra: each line section enters
    through its short-circuit admittance parameters.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    zc = characteristic_impedance(line, w)
    g = propagation_constant(line, w)
    x, L = scenario.x_f, line.length_m
    v0 = np.empty(w.size, complex)
    vl = np.empty(w.size, complex)
    for k in range(w.size):
        Y = np.zeros((3, 3), complex)
        for a, b, d in ((0, 1, x), (1, 2, L - x)):
            ys = 1.0 / (zc[k] * np.tanh(g[k] * d))
            ym = -1.0 / (zc[k] * np.sinh(g[k] * d))
            Y[a, a] += ys
            Y[b, b] += ys
            Y[a, b] += ym
            Y[b, a] += ym
        for node, z in ((0, terms.z0), (2, terms.zl)):
            if z is not OPEN:
                Y[node, node] += 1.0 / complex(z)
        rhs = np.zeros(3, complex)
        zf = complex(scenario.z_f)
        if zf == 0:
            # fault node held at the source voltage
            sol = np.linalg.solve(Y[np.ix_([0, 2], [0, 2])], -Y[[0, 2], 1] * 1.0)
            v0[k], vl[k] = sol
            continue
        Y[1, 1] += 1.0 / zf
        rhs[1] = 1.0 / zf
        v = np.linalg.solve(Y, rhs)
        v0[k], vl[k] = v[0], v[2]
    return v0, vl


@pytest.fixture
def short_line():
    return LineSpec.table2(20e3, "lossless")


@pytest.fixture
def long_line():
    return LineSpec.table2(100e3, "lossy")


@pytest.fixture
def hv_terms():
    return TerminationSpec(1e5, 1e5)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
