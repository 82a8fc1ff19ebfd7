"""Dissipation-free regime: QFI, time-reversal moments and sensitivities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import InsensitiveWorkingPoint, MomentSet, ProtocolVariant, SystemParams
from ..kernels import cos_pow, jacobi_anger_sum, log_cos_pow
from .results import QfiResult, SensitivityResult

RES = ProtocolVariant.RESONANT


def _one_minus_cos_pow(theta, n):
    # 1 - cos(theta)^n without cancellation near theta = 0
    mag, sign = log_cos_pow(theta, n)
    if sign > 0:
        return -math.expm1(mag)
    return 1.0 - sign * math.exp(mag)


def ideal_qfi(params: SystemParams, t: float, variant=RES) -> QfiResult:
    """F_Q = 4 + 8 alpha^2 (1 - cos(chi t)^N) of the spin-boson cat."""
    chi = params.chi(variant)
    N, a2 = params.N, params.alpha ** 2
    value = 4 + 8 * a2 * _one_minus_cos_pow(chi * t, N)
    flags = ()
    if params.kappa > 0 or params.gamma > 0:
        flags = ("dissipation_ignored",)
    extras = {
        "short_time": 4 + 4 * N * chi ** 2 * a2 * t ** 2,
        "saturation": 4 + 8 * a2,
    }
    return QfiResult(value, "ideal", flags, extras)


def _moment(N, m, alpha, beta, chi_tau, weight_power):
    # <(S+)^m> at the end of the symmetric protocol and its beta-derivative
    m0 = math.prod(range(N - m + 1, N + 1)) / 2 ** m if m <= N else 0.0
    if m0 == 0:
        return 0j, 0j
    rot = complex(math.cos(m * chi_tau) - 1, -math.sin(m * chi_tau))
    pref = np.exp(beta ** 2 * rot)
    dpref = 2 * beta * rot * pref
    c = -4 * alpha * math.sin(m * chi_tau / 2)
    half = chi_tau / 2
    res = jacobi_anger_sum(c * beta, lambda n: cos_pow(n * half, weight_power), derivative=True)
    val = m0 * pref * res.value
    dval = m0 * (dpref * res.value + pref * res.derivative * c)
    return complex(val), complex(dval)


def ideal_moments(params: SystemParams, tau: float, beta: float, variant=RES) -> MomentSet:
    """Spin moments after forward evolution, displacement and reversal."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    chi = params.chi(variant)
    N, alpha = params.N, params.alpha
    s1, d1 = _moment(N, 1, alpha, beta, chi * tau, N - 1)
    if N >= 2:
        s2, d2 = _moment(N, 2, alpha, beta, chi * tau, N - 2)
    else:
        s2, d2 = 0j, 0j
    return MomentSet(N, s1, s2, N * (N + 1) / 4, 0.0, d1, d2, 0.0, 0.0)


def ideal_sensitivity(params: SystemParams, tau: float, observable="S_phi",
                      variant=RES) -> SensitivityResult:
    """Closed-form (delta beta)^2 at beta = 0 for an equatorial spin projection or the X quadrature."""
    chi = params.chi(variant)
    N, alpha = params.N, params.alpha
    x = chi * tau
    if observable == "X":
        mag, sign = log_cos_pow(x / 2, 2 * N)
        if sign == 0:
            raise InsensitiveWorkingPoint("X-quadrature signal vanishes")
        return SensitivityResult(0.25 * math.exp(-mag), 0.25 * math.exp(N * x * x / 4))
    if observable != "S_phi":
        raise ValueError("observable must be 'S_phi' or 'X'")
    if tau <= 0:
        raise InsensitiveWorkingPoint("tau must be positive for the spin readout")
    s = math.sin(x / 2)
    mag, sign = log_cos_pow(x / 2, N - 1)
    if s == 0 or sign == 0 or abs(s) < 1e-300:
        raise InsensitiveWorkingPoint("chi*tau at a multiple of pi: sensitivity diverges")
    value = math.exp(-2 * mag) / (16 * alpha ** 2 * N * s * s)
    approx = 1 / (4 * N * alpha ** 2 * chi ** 2 * tau ** 2)
    flags = () if math.sqrt(N) * x < 0.1 else ("short_time_form_invalid",)
    return SensitivityResult(value, approx, flags)


@dataclass(frozen=True)
class QuadratureReadout:
    mean: float
    variance: float
    slope: float
    delta_beta_sq: float


def direct_measurement_noqfi(params: SystemParams, t: float, phi: float,
                             variant=RES) -> QuadratureReadout:
    """Quadrature X^phi readout right after the displacement (no reversal)."""
    chi = params.chi(variant)
    N, a2 = params.N, params.alpha ** 2
    x = chi * t
    c_half = float(cos_pow(x / 2, N))
    c_full = float(cos_pow(x, N))
    c_half2 = float(cos_pow(x / 2, 2 * N))
    mean = params.alpha * c_half * math.cos(phi)
    var = 1 + 2 * a2 * ((c_full - c_half2) * math.cos(2 * phi) + 1 - c_half2)
    slope = math.cos(phi)
    db = var / slope ** 2 if slope != 0 else math.inf
    return QuadratureReadout(mean, var, slope, db)

