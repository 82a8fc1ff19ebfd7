from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from cavitysense.kernels import (SeriesNotConverged, bessel_j, bessel_j_all, bessel_j_symmetric,
                                 cos_pow, finite_difference_slope, jacobi_anger_sum, log_binom_half,
                                 log_cos_pow, logsumexp_stream)


def test_bessel_frozen_values():
    assert bessel_j(1, 1.0) == pytest.approx(0.4400505857449335, rel=1e-14)
    assert bessel_j(2, 2j) == pytest.approx(-0.6889484476987382, rel=1e-13)


@pytest.mark.parametrize("z", [0.3 + 0.1j, 0.99, 1.5 - 2j, 7.0, 25 + 3j, 120.0, -40j])
def test_bessel_against_mpmath(z):
    vals = bessel_j_all(60, z)
    for n in (0, 1, 5, 17, 60):
        ref = complex(mpmath.besselj(n, mpmath.mpc(z.real if isinstance(z, complex) else z,
                                                   z.imag if isinstance(z, complex) else 0)))
        scale = max(abs(ref), 1e-300)
        if abs(ref) > 1e-250:
            assert abs(vals[n] - ref) / scale < 1e-11, (n, vals[n], ref)


def test_bessel_negative_orders():
    orders, j = bessel_j_symmetric(3, 2.5)
    assert list(orders) == [-3, -2, -1, 0, 1, 2, 3]
    assert j[0] == pytest.approx(-j[-1])
    assert j[1] == pytest.approx(j[-2])


def test_bessel_domain():
    with pytest.raises(OverflowError):
        bessel_j_all(3, 2e4)
    with pytest.raises(ValueError):
        bessel_j_all(3, complex("nan"))
    assert bessel_j_all(2, 0)[0] == 1


def test_log_binom_half_against_mpmath():
    n = 1001
    k = np.array([0, 1, 250, 500, 1000, 1001])
    got = log_binom_half(n, k)
    for kk, g in zip(k, got):
        ref = float(mpmath.log(mpmath.binomial(n, int(kk))) - n * mpmath.log(2))
        assert g == pytest.approx(ref, abs=1e-12)


def test_cos_pow_sign_and_value():
    assert cos_pow(math.pi, 3) == pytest.approx(-1.0)
    assert cos_pow(0.1, 1e6) == pytest.approx(math.exp(1e6 * math.log(math.cos(0.1))), rel=1e-10)
    mag, sign = log_cos_pow(2.0, 3)
    assert sign == -1 and mag == pytest.approx(3 * math.log(abs(math.cos(2.0))))


def test_logsumexp_stream():
    chunks = [np.array([1000.0, 1000.0]), np.array([-np.inf])]
    assert logsumexp_stream(chunks) == pytest.approx(1000 + math.log(2))


def test_jacobi_anger_identity():
    # sum_n i^n J_n(x) e^{i n theta} = e^{i x cos theta}
    x, th = 12.3, 0.7
    r = jacobi_anger_sum(x, lambda n: np.exp(1j * n * th))
    assert abs(r.value - np.exp(1j * x * math.cos(th))) < 1e-12


def test_jacobi_anger_derivative():
    x, th = 5.0, 0.4
    r = jacobi_anger_sum(x, lambda n: np.exp(1j * n * th), derivative=True)
    exact = 1j * math.cos(th) * np.exp(1j * x * math.cos(th))
    assert abs(r.derivative - exact) < 1e-12


def test_jacobi_anger_margin_too_small():
    with pytest.raises(SeriesNotConverged):
        jacobi_anger_sum(50.0, lambda n: np.ones(n.shape), margin=0)


def test_finite_difference_slope():
    s = finite_difference_slope(math.sin, 0.3)
    assert s.value == pytest.approx(math.cos(0.3), rel=1e-12)
    assert s.error < 1e-10
