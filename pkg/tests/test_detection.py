from __future__ import annotations

import math

import pytest

from cavitysense import validation
from cavitysense.analytic import detection
from cavitysense.core import SystemParams


def test_degradation_factor():
    N = 10 ** 6
    assert detection.degradation_factor(N, math.pi / 2, math.sqrt(N) / 4) == pytest.approx(1.25)
    assert detection.degradation_factor(N, math.pi / 6, 0.0) == 1.0


def test_ideal_regime_zero_noise_is_short_time_ideal():
    p = validation.ref_params(kappa=0.0)
    tau = 1e-9
    d = detection.detection_noise_sensitivity(p, tau, math.pi / 2, 0.0)
    base = 1 / (4 * p.N * p.alpha ** 2 * p.chi() ** 2 * tau ** 2)
    assert d == pytest.approx(base, rel=1e-4)


def test_kappa_regime_zero_noise_matches_short_form():
    from cavitysense.analytic import kappa
    p = validation.ref_params()
    tau = 85e-9
    d = detection.detection_noise_sensitivity(p, tau, math.pi / 2, 0.0, "kappa")
    # (N - 1 + 1) / N = 1 at phi = pi/2
    assert d == pytest.approx(kappa.kappa_sensitivity_short(p, tau), rel=1e-12)


def test_rejects_bad_inputs():
    p = validation.ref_params()
    with pytest.raises(ValueError):
        detection.detection_noise_sensitivity(p, 1e-7, 0.0, 1.0)
    with pytest.raises(ValueError):
        detection.detection_noise_sensitivity(p, 1e-7, 1.0, -1.0)
    with pytest.raises(ValueError):
        detection.detection_noise_sensitivity(p, 1e-7, 1.0, 1.0, regime="other")


def test_robustness_report():
    p = SystemParams(N=10 ** 6, g=2 * math.pi * 11e3, alpha=1e4)
    r = detection.robustness_report(p, 1e-9)
    assert r.threshold == pytest.approx(500.0)
    assert r.gain_loss_db[0] == pytest.approx(10 * math.log10(1 + 4 * r.sigmas[0] ** 2 / p.N), rel=1e-6)
    i = list(r.sigmas).index(min(r.sigmas, key=lambda s: abs(s - r.threshold)))
    assert 2.0 < r.gain_loss_db[i] < 4.0
