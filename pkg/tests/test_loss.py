from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.sparse.linalg import expm_multiply

from cavitysense import simulator as S
from cavitysense import validation
from cavitysense.analytic import ideal, loss
from cavitysense.core import SystemParams


def test_spin_density_against_lindblad():
    assert validation.loss_density_oracle(3, 1.5, 2.0, 0.3) < 1e-6


def test_spin_density_is_a_state():
    p = SystemParams.from_chi(30, 1.0, 5.0, kappa=3.0)
    rho = loss.loss_spin_density(p, 0.2)
    assert abs(np.trace(rho.data) - 1) < 1e-12
    assert rho.min_eigenvalue() > -1e-12


def test_zero_loss_qfi_matches_ideal():
    p = SystemParams.from_chi(20, 1.0, 3.0)
    for t in (0.05, 0.3):
        r = loss.qfi_with_loss(None, p, t)
        assert r.value == pytest.approx(ideal.ideal_qfi(p, t).value, rel=1e-9)


def test_gaussian_matches_eigen_at_large_n():
    p = validation.fig5_params(73.0, N=400)
    t = 0.5 * loss.qfi_loss_optimum(p).t_opt
    e = loss.qfi_with_loss(None, p, t, "eigendecomposition").value
    g = loss.qfi_with_loss(None, p, t, "gaussian_analytic").value
    assert g == pytest.approx(e, rel=1e-3)


def test_gaussian_forced_to_eigen_below_100():
    p = SystemParams.from_chi(50, 1.0, 10.0, kappa=1.0)
    r = loss.qfi_with_loss(None, p, 0.01, "gaussian_analytic")
    assert r.extras["method"] == "eigendecomposition"
    assert "gaussian_requires_N_ge_100" in r.flags


def test_eigen_path_size_cap():
    p = SystemParams.from_chi(10 ** 5, 1.0, 10.0, kappa=1.0)
    with pytest.raises(ValueError):
        loss.qfi_with_loss(None, p, 0.01, "eigendecomposition")


def test_optimum_closed_form_and_flags():
    p = validation.fig5_params(73.0)
    o = loss.qfi_loss_optimum(p)
    chi, N, a2, k = p.chi(), p.N, p.alpha ** 2, p.kappa
    assert o.t_opt == pytest.approx((6 / (chi ** 2 * a2 * k * N)) ** (1 / 3))
    assert o.flags == ()
    weak = validation.fig5_params(0.5)
    assert "dissipation_too_strong" in loss.qfi_loss_optimum(weak).flags
    strong = SystemParams.from_chi(100, 1.0, 2.0, kappa=1e-6)
    r = loss.qfi_loss_optimum(strong)
    assert "saturated" in r.flags and r.qfi_opt == 4 + 8 * 4.0


def test_short_gaussian_form_above_gaussian():
    p = validation.fig5_params(73.0)
    for t in np.geomspace(1e-6, 1e-3, 7):
        assert loss.qfi_gaussian_short(p, t) >= loss.qfi_gaussian(p, t) - 1e-12


def test_dying_cat_coherence_against_lindblad():
    a1, a2, k, t = 2.0 + 0.5j, -1.0 + 1.5j, 0.8, 0.4
    n_max = 60
    space = S.Space(1, n_max)
    a = space.a()
    L = S.liouvillian(0 * a, [math.sqrt(k) * a])
    v1, v2 = S.coherent_fock(a1, n_max), S.coherent_fock(a2, n_max)
    rho0 = np.outer(v1, v2.conj())
    rho = expm_multiply(L, rho0.reshape(-1, order="F") * 1.0, start=0, stop=t, num=2)[-1]
    rho = rho.reshape(n_max + 1, n_max + 1, order="F")
    e = math.exp(-k * t / 2)
    b1, b2 = S.coherent_fock(a1 * e, n_max), S.coherent_fock(a2 * e, n_max)
    c = loss.cat_coherence(loss.DyingCatSpec(a1, a2, k, t))
    # |a1><a2| -> <a2|a1>/<a2^t|a1^t> |a1^t><a2^t|, i.e. c_t times the rescaled dyad
    assert np.max(np.abs(rho - c * np.outer(b1, b2.conj()))) < 1e-10


def test_dying_cat_qfi_initial_value():
    spec = loss.DyingCatSpec(3j, -3j, 0.1, 0.0)
    assert loss.dying_cat_qfi(spec).value == pytest.approx(4 + 4 * 36)
    with pytest.raises(ValueError):
        loss.dying_cat_qfi(loss.DyingCatSpec(0.1, -0.1, 0.1, 0.0))
