"""Time-reversal readout with photon loss: moments, sensitivity and optimum."""

from __future__ import annotations

import math

import numpy as np

from ..core import MomentSet, ProtocolVariant, SystemParams, sensitivity_from_moments
from ..kernels import cos_pow, jacobi_anger_sum
from .results import SensitivityResult

RES = ProtocolVariant.RESONANT


def cexpm1(z: complex) -> complex:
    """e^z - 1 for complex z without cancellation."""
    x, y = z.real, z.imag
    re = math.expm1(x) * math.cos(y) - 2 * math.sin(y / 2) ** 2
    return complex(re, math.exp(x) * math.sin(y))


def eta(kappa: float, chi: float, m: int, tau: float) -> complex:
    """i chi m / (kappa + i chi m) * (exp(-kappa tau - i chi m tau) - 1)."""
    mu = 1j * chi * m
    if kappa == 0 and m == 0:
        return 0j
    return mu / (kappa + mu) * cexpm1(-(kappa + mu) * tau)


def _moment(N, m, alpha, beta, chi, kappa, tau1, tau2):
    m0 = math.prod(range(N - m + 1, N + 1)) / 2 ** m
    e2 = eta(kappa, chi, m, tau2)
    e1 = eta(kappa, chi, m, tau1)
    rot = complex(-kappa * tau1, m * chi * tau1)
    expo = alpha ** 2 * (e2 * np.exp(rot) + e1.conjugate()) + e2 * beta ** 2
    pref = np.exp(expo)
    dpref = 2 * e2 * beta * pref
    c = -2j * e2 * alpha * np.exp(complex(-kappa * tau1 / 2, m * chi * tau1 / 2))
    half = chi * tau1 / 2
    res = jacobi_anger_sum(c * beta, lambda n: cos_pow(n * half, N - m), derivative=True)
    val = m0 * pref * res.value
    dval = m0 * (dpref * res.value + pref * res.derivative * c)
    return complex(val), complex(dval)


def kappa_moments(params: SystemParams, tau1: float, tau2: float, beta: float,
                  variant=RES) -> MomentSet:
    """Spin moments at the end of the protocol with cavity decay during both arms."""
    chi = params.chi(variant)
    N, alpha, kappa = params.N, params.alpha, params.kappa
    s1, d1 = _moment(N, 1, alpha, beta, chi, kappa, tau1, tau2)
    if N >= 2:
        s2, d2 = _moment(N, 2, alpha, beta, chi, kappa, tau1, tau2)
    else:
        s2, d2 = 0j, 0j
    return MomentSet(N, s1, s2, N * (N + 1) / 4, 0.0, d1, d2, 0.0, 0.0)


def mean_spin_azimuth(params: SystemParams, tau1: float, tau2: float, variant=RES) -> float:
    """Azimuth of the mean spin at beta = 0 (residual rotation from unequal arms)."""
    m = kappa_moments(params, tau1, tau2, 0.0, variant)
    return math.atan2(m.splus.imag, m.splus.real)


def loss_function(kt1: float, kt2: float) -> float:
    """e^{-a}[2a + e^{-b} + (b - a) e^{-b}] - 1 with a = kappa tau1, b = kappa tau2."""
    a, b = kt1, kt2
    if max(a, b) > 0.5:
        return math.exp(-a) * (2 * a + math.exp(-b) + (b - a) * math.exp(-b)) - 1
    # power series; orders one and two collapse to -(a - b)^2 / 2
    s = a + b
    total = -0.5 * (a - b) ** 2
    for k in range(3, 40):
        term = (2 * (-1) ** (k - 1) * a ** k / math.factorial(k - 1)
                + (-s) ** k / math.factorial(k)
                + (b - a) * (-s) ** (k - 1) / math.factorial(k - 1))
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total


def kappa_sensitivity(params: SystemParams, tau1: float, tau2: float | None = None,
                      variant=RES, contrast_power=2) -> SensitivityResult:
    """Closed-form (delta beta)^2 for S_y readout, valid for chi sqrt(N) tau << 1.

    The contrast factor is e^{-p X} with X = chi^2 alpha^2 f / kappa^2; p = 2
    agrees with the full moment assembly, p = 1 is kept for comparison.
    """
    if tau2 is None:
        tau2 = tau1
    chi = params.chi(variant)
    N, alpha, kappa = params.N, params.alpha, params.kappa
    if kappa == 0:
        from .ideal import ideal_sensitivity
        res = ideal_sensitivity(params, tau1, variant=variant)
        return SensitivityResult(res.value, res.approx, res.flags + ("kappa_zero",))
    f = loss_function(kappa * tau1, kappa * tau2)
    X = chi ** 2 * alpha ** 2 * f / kappa ** 2
    em = math.expm1(4 * X)
    noise = (2 + em) / (8 * N) - em / 8
    denom = chi ** 2 * alpha ** 2 * (math.expm1(-kappa * tau2) / kappa) ** 2
    value = noise * math.exp(kappa * tau1) * math.exp(-contrast_power * X) / denom
    tau = 0.5 * (tau1 + tau2)
    approx = kappa_sensitivity_short(params, tau, variant)
    flags = []
    if math.sqrt(N) * chi * max(tau1, tau2) > 0.1:
        flags.append("chi_sqrtN_tau_not_small")
    if kappa * max(tau1, tau2) > 0.1:
        flags.append("kappa_tau_not_small")
    return SensitivityResult(value, approx, tuple(flags))


def kappa_sensitivity_short(params: SystemParams, tau: float, variant=RES) -> float:
    """1/(4 N alpha^2 chi^2 tau^2) + kappa tau / 6."""
    chi = params.chi(variant)
    return 1 / (4 * params.N * params.alpha ** 2 * chi ** 2 * tau ** 2) + params.kappa * tau / 6


def kappa_optimum(params: SystemParams, variant=RES) -> tuple[float, float]:
    """(t_opt, (delta beta)^2_opt) of the short-time loss formula."""
    chi = params.chi(variant)
    q = params.kappa * chi ** 2 * params.N * params.alpha ** 2
    if q <= 0:
        raise ValueError("optimum requires kappa > 0")
    t_opt = (3 / q) ** (1 / 3)
    db_opt = 0.25 * (3 * params.kappa ** 2 / (chi ** 2 * params.N * params.alpha ** 2)) ** (1 / 3)
    return t_opt, db_opt


def kappa_sensitivity_assembled(params: SystemParams, tau1: float, tau2: float | None = None,
                                phi="auto", sigma_det=0.0, variant=RES) -> float:
    """(delta beta)^2 from the full moment expressions at beta = 0."""
    if tau2 is None:
        tau2 = tau1
    m = kappa_moments(params, tau1, tau2, 0.0, variant)
    return sensitivity_from_moments(m, phi, sigma_det)
