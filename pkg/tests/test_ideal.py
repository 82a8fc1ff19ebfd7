from __future__ import annotations

import math

import numpy as np
import pytest

from cavitysense import validation
from cavitysense.analytic import ideal
from cavitysense.core import InsensitiveWorkingPoint, SystemParams, sensitivity_from_moments


def params(N=10, alpha=4.0, chi=1.0):
    return SystemParams.from_chi(N, chi, alpha)


def test_qfi_at_zero_time_is_vacuum_value():
    assert ideal.ideal_qfi(params(), 0.0).value == 4.0


def test_qfi_statevector_cross_check():
    p = params(6, 2.5)
    for x in (0.05, 0.2, 0.6):
        assert ideal.ideal_qfi(p, x).value == pytest.approx(validation.statevector_qfi(6, 2.5, x), rel=1e-9)


def test_qfi_revival_odd_n():
    p = params(3, 2.0)
    assert ideal.ideal_qfi(p, math.pi).value == pytest.approx(4 + 16 * 4.0, abs=1e-9)


def test_qfi_short_time_extra():
    p = params(100, 10.0)
    r = ideal.ideal_qfi(p, 1e-4)
    assert r.value == pytest.approx(r.extras["short_time"], rel=1e-6)


def test_sensitivity_short_time_limit():
    p = params(51, 15.0)
    r = ideal.ideal_sensitivity(p, 1e-4)
    assert r.value == pytest.approx(r.approx, rel=1e-6)
    assert r.flags == ()


def test_sensitivity_closed_equals_assembly():
    p = params(51, 15.0)
    for x in (0.01, 0.1, 0.2):
        closed = ideal.ideal_sensitivity(p, x).value
        asm = sensitivity_from_moments(ideal.ideal_moments(p, x, 0.0), math.pi / 2)
        assert closed == pytest.approx(asm, rel=1e-9)


def test_sensitivity_matches_simulation_small_system():
    p = params(4, 3.0)
    x = 0.2
    assert validation.simulated_sensitivity(p, x) == pytest.approx(
        ideal.ideal_sensitivity(p, x).value, rel=1e-6)


def test_sensitivity_diverges_at_full_revival():
    # sin(pi) is 1e-16 in floating point, so the value is huge rather than infinite
    assert ideal.ideal_sensitivity(params(4, 2.0), 2 * math.pi).value > 1e25
    with pytest.raises(InsensitiveWorkingPoint):
        ideal.ideal_sensitivity(params(4, 2.0), 0.0)


def test_x_quadrature_never_beats_sql():
    p = params(20, 5.0)
    for x in np.linspace(0, 1, 11):
        assert ideal.ideal_sensitivity(p, x, observable="X").value >= 0.25


def test_direct_measurement_at_zero_time():
    r = ideal.direct_measurement_noqfi(params(), 0.0, math.pi / 3)
    assert r.variance == pytest.approx(1.0)
    assert r.delta_beta_sq == pytest.approx(1 / math.cos(math.pi / 3) ** 2)
