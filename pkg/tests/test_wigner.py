from __future__ import annotations

import math

import numpy as np
import pytest

from cavitysense import validation
from cavitysense.analytic import wigner


def test_single_coherent_state_is_gaussian():
    g = wigner.wigner_cat([(1.0, 1.5 + 0.5j)], (-2, 5), (-3, 4), 0.05)
    i = np.argmin(np.abs(g.im - 0.5))
    j = np.argmin(np.abs(g.re - 1.5))
    assert g.W[i, j] == pytest.approx(2 / math.pi)
    zeta = g.re[None, :] + 1j * g.im[:, None]
    assert np.allclose(g.W, 2 / math.pi * np.exp(-2 * np.abs(zeta - (1.5 + 0.5j)) ** 2), atol=1e-15)
    assert g.integral() == pytest.approx(1.0, abs=1e-9)
    assert g.min_value() >= 0


def test_cat_against_parity_and_quadrature_oracles():
    comps = [(1, 1.0 + 0j), (0.7j, -0.5 + 0.8j), (0.4, 0.3 - 1.0j)]
    z = np.array([0.2 + 0.1j, -0.4 + 0.5j, 1.0 - 0.3j, 0.0])
    g = wigner.wigner_cat(comps, (-1, 1.2), (-1, 1), 0.1)
    ours = np.array([g.W[np.argmin(np.abs(g.im - p.imag)), np.argmin(np.abs(g.re - p.real))] for p in z])
    assert np.max(np.abs(validation.wigner_parity(comps, z) - ours)) < 1e-10
    assert np.max(np.abs(validation.wigner_quadrature(comps, z) - ours)) < 1e-10


def test_spin_boson_cat_has_negative_fringes():
    comps = wigner.spin_boson_cat_components(10, 4.0, 0.55 / math.sqrt(10))
    g = wigner.wigner_cat(comps, (-8, 8), (-8, 8), 0.05)
    assert g.min_value() < -1e-3
    assert g.integral() == pytest.approx(1.0, abs=1e-9)
    assert wigner.count_sign_changes(g.W) > 0


def test_zero_time_has_no_fringes():
    comps = wigner.spin_boson_cat_components(10, 4.0, 0.0)
    g = wigner.wigner_cat(comps, (-2, 8), (-4, 4), 0.1)
    assert wigner.count_sign_changes(g.W) == 0


def test_limits_and_flags():
    with pytest.raises(ValueError):
        wigner.wigner_cat([])
    with pytest.raises(ValueError):
        wigner.wigner_cat([(1, 0)] * (wigner.MAX_COMPONENTS + 1))
    g = wigner.wigner_cat([(1, 0)], (-1, 1), (-1, 1), 0.25)
    assert "grid_too_coarse" in g.flags


def test_coherent_overlap():
    assert abs(wigner.coherent_overlap(1.0, 1.0)) == pytest.approx(1.0)
    assert abs(wigner.coherent_overlap(0, 2.0)) == pytest.approx(math.exp(-2))
