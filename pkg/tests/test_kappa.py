from __future__ import annotations

import math

import pytest

from cavitysense import simulator as S
from cavitysense.analytic import ideal, kappa
from cavitysense.core import ProtocolConfig, SystemParams


def test_loss_function_series_matches_direct():
    for a, b in ((0.3, 0.3), (0.1, 0.45), (0.49, 0.2)):
        direct = math.exp(-a) * (2 * a + math.exp(-b) + (b - a) * math.exp(-b)) - 1
        assert kappa.loss_function(a, b) == pytest.approx(direct, rel=1e-9, abs=1e-15)


def test_loss_function_leading_order():
    # equal arms: e^{-a}(2a + e^{-a}) - 1 = -a^3/3 + O(a^4)
    a = 1e-3
    assert kappa.loss_function(a, a) == pytest.approx(-(a ** 3) / 3, rel=1e-2)


def test_moments_against_lindblad():
    p = SystemParams.from_chi(2, 1.0, 1.5, kappa=0.7)
    cfg = ProtocolConfig(0.3, 0.4, beta=0.05)
    run = S.run_protocol(p, cfg, backend="lindblad")
    m = kappa.kappa_moments(p, 0.3, 0.4, 0.05)
    assert abs(m.splus - run.moments.splus) < 1e-7
    assert abs(m.splus_sq - run.moments.splus_sq) < 1e-7


def test_zero_kappa_reduces_to_ideal():
    p = SystemParams.from_chi(51, 1.0, 15.0)
    r = kappa.kappa_sensitivity(p, 0.05)
    assert r.value == ideal.ideal_sensitivity(p, 0.05).value
    assert "kappa_zero" in r.flags


def test_closed_form_matches_assembly_in_regime():
    p = SystemParams(N=10 ** 6, g=2 * math.pi * 11e3, kappa=2 * math.pi * 150e3, alpha=1e4)
    t = 1e-9
    assert kappa.kappa_sensitivity(p, t).value == pytest.approx(
        kappa.kappa_sensitivity_assembled(p, t), rel=1e-6)


def test_optimum_frozen():
    p = SystemParams(N=10 ** 6, g=2 * math.pi * 11e3, kappa=2 * math.pi * 150e3, alpha=1e4)
    t, d = kappa.kappa_optimum(p)
    chi = p.chi()
    assert t == pytest.approx((3 / (p.kappa * chi ** 2 * p.N * p.alpha ** 2)) ** (1 / 3), rel=1e-14)
    assert t == pytest.approx(8.734438811559813e-08, rel=1e-12)
    assert d == pytest.approx(0.02058003660271939, rel=1e-12)


def test_short_form_minimum_is_optimum():
    p = SystemParams(N=10 ** 4, g=1e4, kappa=1e3, alpha=1e3)
    t, d = kappa.kappa_optimum(p)
    assert kappa.kappa_sensitivity_short(p, t) == pytest.approx(d, rel=1e-12)
    assert kappa.kappa_sensitivity_short(p, 1.1 * t) > d
    assert kappa.kappa_sensitivity_short(p, 0.9 * t) > d


def test_mean_spin_azimuth_symmetric_vs_asymmetric():
    p = SystemParams(N=10 ** 6, g=2 * math.pi * 11e3, kappa=2 * math.pi * 150e3, alpha=1e4)
    a0 = kappa.mean_spin_azimuth(p, 85e-9, 85e-9)
    a1 = kappa.mean_spin_azimuth(p, 85e-9, 120e-9)
    assert math.isfinite(a0) and math.isfinite(a1)
    assert a1 != a0
