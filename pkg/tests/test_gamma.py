from __future__ import annotations

import math

import pytest

from cavitysense import validation
from cavitysense.analytic import gamma
from cavitysense.core import ProtocolVariant, SystemParams

RES, DISP = ProtocolVariant.RESONANT, ProtocolVariant.DISPERSIVE


def ref(N=10 ** 4):
    return validation.ref_params(kappa=0.0, gamma=validation.REF_GAMMA, N=N)


def test_closed_form_equals_gaussian_assembly():
    p = ref()
    for tau in (1e-7, 1e-6, 7e-6):
        for phi in (math.pi / 2, 1.0, 2.5):
            closed = gamma.gamma_sensitivity(p, tau, phi).value
            asm = gamma.gamma_sensitivity_assembled(p, tau, phi)
            assert closed == pytest.approx(asm, rel=1e-8)


def test_zero_gamma_recovers_ideal_short_time():
    p = validation.ref_params(kappa=0.0, gamma=0.0)
    tau = 1e-8
    r = gamma.gamma_sensitivity(p, tau)
    assert r.value == pytest.approx(r.approx, rel=1e-4)
    assert r.approx == pytest.approx(1 / (4 * p.alpha ** 2 * p.N * p.chi() ** 2 * tau ** 2))


def test_dispersive_spm_minus_sz():
    N = 10 ** 4
    p = SystemParams.from_chi(N, 1.0, 100.0, gamma=0.1, variant=DISP)
    tau = 0.02
    m = gamma.gamma_moments(p, tau, 0.0, DISP)
    assert m.spm - m.sz == pytest.approx(N / 2 + N * (N - 1) / 4 * math.exp(-4 * 0.1 * tau))


def test_optimum_and_penalty():
    p = ref()
    assert gamma.gamma_optimal_time(p) == pytest.approx(1 / (3 * p.gamma))
    assert gamma.gamma_penalty(1.0, 0.0) == 1.0
    assert gamma.gamma_penalty(p.gamma, gamma.gamma_optimal_time(p)) == pytest.approx(math.e ** 2)


def test_figure_of_merit():
    p = ref(100)
    assert gamma.figure_of_merit(p) == pytest.approx(11e3 * 10 / 7.5e3)


def test_flags():
    p = SystemParams.from_chi(4, 1.0, 2.0, gamma=0.1, kappa=0.2)
    assert set(gamma.gamma_flags(p, 10.0)) == {"chi_over_gamma_not_small", "gamma_tau_not_small",
                                               "kappa_ignored"}


def test_rejects_phi_outside_range():
    with pytest.raises(ValueError):
        gamma.gamma_sensitivity(ref(), 1e-6, 0.0)
    with pytest.raises(ValueError):
        gamma.gamma_sensitivity(ref(), 1e-6, 4.0)


def test_cosine_weights_close_to_gaussian_at_large_n():
    p = ref(10 ** 4)
    a = gamma.gamma_sensitivity_assembled(p, 1e-6, weights="gaussian")
    b = gamma.gamma_sensitivity_assembled(p, 1e-6, weights="cosine")
    assert a == pytest.approx(b, rel=1e-3)


def test_slope_against_per_spin_lindblad_resonant():
    assert validation.gamma_slope_oracle(RES, N=3, alpha=1.5) < 0.05


def test_dispersive_gaussian_weights_reject_large_gamma_tau():
    from cavitysense.core import NumericFailure
    p = SystemParams.from_chi(50, 1.0, 3.0, gamma=1.0, variant=DISP)
    with pytest.raises(NumericFailure):
        gamma.gamma_moments(p, 0.5, 0.0, DISP)
