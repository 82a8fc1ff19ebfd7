from __future__ import annotations

import math

import numpy as np
import pytest

from cavitysense.core import (InsensitiveWorkingPoint, MomentSet, NumericFailure, ProtocolConfig,
                              ProtocolVariant, SystemParams, auto_phi, coherent_spin_state,
                              log_coherent_coefficients, m_values, metrological_gain, normalize_phi,
                              sensitivity_from_moments, spin_operators, spin_variance)


def test_m_values_descending():
    assert list(m_values(3)) == [1.5, 0.5, -0.5, -1.5]


def test_n2_coherent_state_frozen():
    # |+x> for N = 2 is (1/2, 1/sqrt(2), 1/2) in the Dicke basis
    v = coherent_spin_state(2)
    assert np.allclose(v, [0.5, 1 / math.sqrt(2), 0.5], atol=1e-15)


def test_coherent_state_is_sx_eigenvector():
    N = 7
    sx, _, _ = spin_operators(N)
    v = coherent_spin_state(N)
    assert np.allclose(sx @ v, N / 2 * v, atol=1e-12)


def test_log_coefficients_large_n_normalized():
    lc = log_coherent_coefficients(10 ** 6)
    total = np.exp(2 * lc).sum()
    assert abs(total - 1) < 1e-10


def test_polar_state_matches_minus_z():
    v = coherent_spin_state(5, (math.pi, 0.0))
    assert abs(abs(v[-1]) - 1) < 1e-12


def test_commutator():
    sx, sy, sz = spin_operators(4)
    assert np.allclose(sx @ sy - sy @ sx, 1j * sz, atol=1e-12)


@pytest.mark.parametrize("d,expected", [(0.25, 0.0), (0.025, 10.0), (1 / 400, 20.0)])
def test_metrological_gain_examples(d, expected):
    assert metrological_gain(d) == pytest.approx(expected, abs=1e-12)


def test_metrological_gain_rejects_nonpositive():
    with pytest.raises(ValueError):
        metrological_gain(0.0)


def test_normalize_phi():
    assert normalize_phi(0.0) == math.pi
    assert normalize_phi(-math.pi / 2) == pytest.approx(math.pi / 2)
    assert normalize_phi(3 * math.pi / 2) == pytest.approx(math.pi / 2)


def test_system_params_validation():
    with pytest.raises(ValueError):
        SystemParams(N=0)
    with pytest.raises(ValueError):
        SystemParams(N=3, kappa=-1)
    p = SystemParams(N=4, g=2.0, alpha=4.0)
    assert p.chi() == 0.5
    with pytest.raises(ValueError):
        p.chi(ProtocolVariant.DISPERSIVE)


def test_from_chi_roundtrip():
    for v in ProtocolVariant:
        p = SystemParams.from_chi(10, 0.3, 5.0, variant=v, delta_c=2.0)
        assert p.chi(v) == pytest.approx(0.3, rel=1e-14)


def test_protocol_config_rejects_phi_zero():
    with pytest.raises(ValueError):
        ProtocolConfig(1.0, 1.0, phi=0.0)


def test_moment_set_bounds():
    with pytest.raises(NumericFailure):
        MomentSet(2, splus=2.0, splus_sq=0, spm=1.0)


def test_sensitivity_from_moments_coherent_state():
    # coherent +x state, rotated about z by d(beta): slope N/2, var(S_y) = N/4 -> 1/N
    N = 10
    m = MomentSet(N, splus=N / 2, splus_sq=N * (N - 1) / 4, spm=N * (N + 1) / 4,
                  d_splus=1j * N / 2)
    assert auto_phi(m) == pytest.approx(math.pi / 2)
    assert spin_variance(m, math.pi / 2) == pytest.approx(N / 4)
    assert sensitivity_from_moments(m) == pytest.approx(1 / N)


def test_zero_slope_is_insensitive():
    m = MomentSet(2, splus=1.0, splus_sq=0.5, spm=1.5)
    with pytest.raises(InsensitiveWorkingPoint):
        sensitivity_from_moments(m, math.pi / 2)
