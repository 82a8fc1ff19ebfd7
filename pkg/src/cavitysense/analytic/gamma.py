"""Spontaneous emission during the time-reversal protocol (resonant and dispersive variants)."""

from __future__ import annotations

import math

import numpy as np

from ..core import MomentSet, NumericFailure, ProtocolVariant, SystemParams, sensitivity_from_moments
from ..kernels import cos_pow, jacobi_anger_sum
from .results import SensitivityResult

RES = ProtocolVariant.RESONANT
DISP = ProtocolVariant.DISPERSIVE


def _entanglement_exponent(b, m, variant, gamma, chi, N, tau):
    # e^{gamma chi^2 (...) N tau^3 / ...} factors multiplying each Bessel order
    s = gamma * chi ** 2 * N * tau ** 3
    if variant == RES:
        return s * b * b / 24
    if m == 1:
        return s * (5 * b * b + 8 * b + 6) / 12
    return s * (5 * b * b + 16 * b + 24) / 12


def _moment(N, m, alpha, beta, chi, gamma, tau, variant, weights):
    m0 = math.prod(range(N - m + 1, N + 1)) / 2 ** m
    decay = 3 if variant == RES else 2
    rot = complex(math.cos(m * chi * tau) - 1, -math.sin(m * chi * tau))
    pref = m0 * math.exp(-decay * m * gamma * tau) * np.exp(beta ** 2 * rot)
    dpref_factor = 2 * beta * rot
    c = -4 * alpha * math.sin(m * chi * tau / 2)

    if weights == "gaussian":
        # net b^2 coefficient of the combined exponent must be negative for the series to converge
        lead = gamma * chi ** 2 * N * tau ** 3 * (1 / 24 if variant == RES else 5 / 12)
        if lead >= N * chi ** 2 * tau ** 2 / 8:
            raise NumericFailure("Gaussian Bessel weights do not decay (gamma tau too large)")

    def weight(b):
        b = np.asarray(b, dtype=float)
        expo = _entanglement_exponent(b, m, variant, gamma, chi, N, tau)
        if weights == "gaussian":
            return np.exp(expo - N * b * b * chi ** 2 * tau ** 2 / 8)
        return np.exp(expo) * cos_pow(b * chi * tau / 2, N - m)

    res = jacobi_anger_sum(c * beta, weight, derivative=True)
    val = pref * res.value
    dval = pref * (dpref_factor * res.value + res.derivative * c)
    return complex(val), complex(dval)


def gamma_flags(params: SystemParams, tau: float, variant=RES) -> tuple[str, ...]:
    chi = params.chi(variant)
    flags = []
    if params.gamma > 0 and chi / params.gamma > 0.3:
        flags.append("chi_over_gamma_not_small")
    if params.gamma * tau > 0.5:
        flags.append("gamma_tau_not_small")
    if params.kappa > 0:
        flags.append("kappa_ignored")
    return tuple(flags)


def gamma_moments(params: SystemParams, tau: float, beta: float, variant=RES,
                  weights="gaussian") -> MomentSet:
    """Spin moments after the symmetric protocol with per-spin emission at rate gamma.

    ``weights="gaussian"`` uses e^{-N b^2 chi^2 tau^2 / 8} per Bessel order, as in the
    large-N evaluation; ``"cosine"`` keeps the exact cos(b chi tau / 2)^{N-m} factor.
    """
    if params.gamma < 0:
        raise ValueError("gamma must be >= 0")
    if weights not in ("gaussian", "cosine"):
        raise ValueError("weights must be 'gaussian' or 'cosine'")
    variant = ProtocolVariant(variant)
    chi = params.chi(variant)
    N, alpha, g = params.N, params.alpha, params.gamma
    s1, d1 = _moment(N, 1, alpha, beta, chi, g, tau, variant, weights)
    if N >= 2:
        s2, d2 = _moment(N, 2, alpha, beta, chi, g, tau, variant, weights)
    else:
        s2, d2 = 0j, 0j
    if variant == RES:
        spm = N / 2 + N * (N - 1) / 4 * math.exp(-6 * g * tau)
        sz = 0.0
    else:
        # S+S- and S_z separately; their difference is N/2 + N(N-1) e^{-4 gamma tau} / 4
        e4 = math.exp(-4 * g * tau)
        spm = N * (N + 1) / 4 * e4
        sz = -N / 2 * -math.expm1(-4 * g * tau)
    return MomentSet(N, s1, s2, spm, sz, d1, d2, 0.0, 0.0,
                     sz_source="conserved" if variant == RES else "decay")


def gamma_sensitivity(params: SystemParams, tau: float, phi: float = math.pi / 2,
                      variant=RES) -> SensitivityResult:
    """(delta beta)^2 at beta = 0 for S_phi readout with spontaneous emission.

    Resonant: the exact closed form of the Gaussian-weight assembly,
    e^{N chi^2 tau^2/4 - gamma chi^2 N tau^3/12} (e^{6 gamma tau} - cos^2 phi)
    / (16 N alpha^2 sin^2(chi tau/2) sin^2 phi); ``approx`` holds the short-time
    form e^{6 gamma tau} / (4 alpha^2 N chi^2 tau^2) at phi = pi/2. Dispersive
    uses the moment assembly.
    """
    if phi <= 0 or phi > math.pi:
        raise ValueError("phi must lie in (0, pi]")
    if math.sin(phi) == 0 or abs(math.sin(phi)) < 1e-15:
        raise ValueError("phi = 0 or pi is not a working point")
    if tau <= 0:
        raise ValueError("tau must be positive")
    variant = ProtocolVariant(variant)
    chi = params.chi(variant)
    N, a2, g = params.N, params.alpha ** 2, params.gamma
    flags = gamma_flags(params, tau, variant)
    approx = (math.exp(6 * g * tau) - math.cos(phi) ** 2) / (
        4 * a2 * N * chi ** 2 * tau ** 2 * math.sin(phi) ** 2)
    if variant == RES:
        s = math.sin(chi * tau / 2)
        expo = N * chi ** 2 * tau ** 2 / 4 - g * chi ** 2 * N * tau ** 3 / 12
        value = math.exp(expo) * (math.exp(6 * g * tau) - math.cos(phi) ** 2) / (
            16 * N * a2 * s * s * math.sin(phi) ** 2)
    else:
        value = sensitivity_from_moments(gamma_moments(params, tau, 0.0, variant), phi)
    return SensitivityResult(value, approx, flags)


def gamma_sensitivity_assembled(params: SystemParams, tau: float, phi="auto",
                                variant=RES, weights="gaussian", sigma_det=0.0) -> float:
    return sensitivity_from_moments(gamma_moments(params, tau, 0.0, variant, weights), phi, sigma_det)


def gamma_optimal_time(params: SystemParams) -> float:
    """t_opt = 1 / (3 gamma) of the short-time resonant form."""
    if params.gamma <= 0:
        raise ValueError("optimum requires gamma > 0")
    return 1 / (3 * params.gamma)


def gamma_penalty(gamma: float, t: float) -> float:
    """Multiplicative sensitivity penalty e^{6 gamma t} from single-particle decay."""
    return math.exp(6 * gamma * t)


def figure_of_merit(params: SystemParams) -> float:
    """g sqrt(N) / gamma."""
    return params.g * math.sqrt(params.N) / params.gamma
