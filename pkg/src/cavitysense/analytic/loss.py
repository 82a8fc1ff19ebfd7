"""Photon-loss decoherence of the resource state: dying cat, reduced spin state and QFI."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from ..core import NumericFailure, ProtocolVariant, SystemParams, log_coherent_coefficients, m_values
from .results import QfiResult

RES = ProtocolVariant.RESONANT


# ---------------------------------------------------------------------------
# Two-component bosonic cat under photon loss


@dataclass(frozen=True)
class DyingCatSpec:
    alpha1: complex
    alpha2: complex
    kappa: float
    t: float


def cat_coherence(spec: DyingCatSpec) -> complex:
    """Coefficient c_t multiplying |alpha1^t><alpha2^t| after pure loss."""
    a1, a2, k, t = spec.alpha1, spec.alpha2, spec.kappa, spec.t
    em = math.expm1(-k * t)
    # |c_t| = |<a2|a1>|^(1 - e^{-kappa t})
    return complex(np.exp((abs(a1) ** 2 + abs(a2) ** 2) / 2 * em - a1 * np.conj(a2) * em))


def dying_cat_qfi(spec: DyingCatSpec) -> QfiResult:
    """QFI for displacements along x of a lossy two-component cat (near-orthogonal branches)."""
    d = spec.alpha1 - spec.alpha2
    if abs(d) ** 2 < -math.log(1e-6):
        raise ValueError("branches overlap too much (|<a1|a2>|^2 >= 1e-6)")
    kt = spec.kappa * spec.t
    value = 4 + 4 * d.imag ** 2 * math.exp(-kt) * math.exp(-spec.kappa * abs(d) ** 2 * spec.t)
    flags = () if kt < 0.1 else ("kappa_t_not_small",)
    return QfiResult(value, "dying_cat", flags)


def dying_cat_scaling(chi: float, N: int, alpha: float, kappa: float) -> float:
    """Heuristic optimum scale (chi^2 N alpha^2 / kappa^2)^(1/3) of F_Q - 4."""
    return (chi ** 2 * N * alpha ** 2 / kappa ** 2) ** (1 / 3)


# ---------------------------------------------------------------------------
# Reduced spin state


@dataclass(frozen=True)
class SpinDensityMatrix:
    data: np.ndarray

    def __post_init__(self):
        r = self.data
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValueError("density matrix must be square")
        scale = max(1.0, float(np.max(np.abs(r))))
        if np.max(np.abs(r - r.conj().T)) > 1e-12 * scale:
            raise NumericFailure("density matrix not Hermitian")
        if abs(np.trace(r).real - 1) > 1e-12:
            raise NumericFailure(f"trace {np.trace(r).real} != 1")

    @property
    def N(self):
        return self.data.shape[0] - 1

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data)[0])


def loss_exponent(z, t, kappa, chi, alpha):
    """f(z, t) for spin-projection differences z (array)."""
    z = np.asarray(z, dtype=float)
    a2 = alpha ** 2
    mu = -1j * chi * z
    out = np.zeros(z.shape, dtype=complex)
    nz = z != 0
    if kappa == 0:
        return out
    # kappa a^2 (1 - e^{-(kappa + mu) t}) / (kappa + mu) + a^2 (e^{-kappa t} - 1)
    k_mu = kappa + mu[nz]
    out[nz] = -kappa * a2 * np.expm1(-k_mu * t) / k_mu + a2 * math.expm1(-kappa * t)
    return out


def loss_spin_density(params: SystemParams, t: float, variant=RES) -> SpinDensityMatrix:
    """Reduced spin state of the lossy resource state, interaction frame.

    rho_{mn} = c_m c_n exp f(n - m, t) with m, n the S_z eigenvalues.
    """
    chi = params.chi(variant)
    N = params.N
    logc = log_coherent_coefficients(N)
    m = m_values(N)
    z = m[None, :] - m[:, None]
    f = loss_exponent(z, t, params.kappa, chi, params.alpha)
    rho = np.exp(logc[:, None] + logc[None, :] + f)
    rho = 0.5 * (rho + rho.conj().T)
    return SpinDensityMatrix(rho)


# ---------------------------------------------------------------------------
# QFI with loss


def _remove_linear_phase(rho: np.ndarray) -> np.ndarray:
    # rotation about S_z that cancels the phase linear in n - m
    N = rho.shape[0] - 1
    if N < 1:
        return rho
    m = m_values(N)
    k = N // 2
    c1 = np.angle(rho[k, k + 1]) if abs(rho[k, k + 1]) > 0 else 0.0
    # rho[k, k+1] carries phase c1 * (m[k+1] - m[k]) = -c1
    z = m[None, :] - m[:, None]
    return rho * np.exp(1j * c1 * z)


def _qfi_eigen(rho: np.ndarray, t, chi, alpha, kappa, floor=1e-14, support=1e-32):
    rho = _remove_linear_phase(rho)
    o = -2 * np.sin(chi * m_values(rho.shape[0] - 1) * t)
    # Dicke levels with population below `support` cannot carry eigenvalue weight above the floor
    keep = np.nonzero(rho.diagonal().real > support)[0]
    sl = slice(keep[0], keep[-1] + 1)
    rho, o = rho[sl, sl], o[sl]
    lam, V = np.linalg.eigh(rho)
    lam = np.clip(lam, 0, None)
    O = V.conj().T @ (o[:, None] * V)
    s = lam[:, None] + lam[None, :]
    d = (lam[:, None] - lam[None, :]) ** 2
    mask = s > floor
    total = float(np.sum(d[mask] / s[mask] * np.abs(O[mask]) ** 2))
    return 4 + 2 * alpha ** 2 * math.exp(-kappa * t) * total


def qfi_gaussian(params: SystemParams, t: float, variant=RES) -> float:
    """Large-N Gaussian evaluation of the lossy QFI."""
    chi = params.chi(variant)
    N, a2, k = params.N, params.alpha ** 2, params.kappa
    num = 4 * chi ** 2 * N * a2 * t ** 2 * math.exp(-k * t)
    if k == 0:
        return 4 + num
    # 1 - e^{-x}(1 + x + x^2/2) is the regularized lower incomplete gamma P(3, x)
    den = 1 + 2 * chi ** 2 * a2 * N / k ** 2 * gammainc(3, k * t)
    return 4 + num / den


def qfi_gaussian_short(params: SystemParams, t: float, variant=RES) -> float:
    """kappa t << 1 limit of the Gaussian evaluation."""
    chi = params.chi(variant)
    N, a2, k = params.N, params.alpha ** 2, params.kappa
    return 4 + 4 * N * a2 * chi ** 2 * t ** 2 / (1 + N * chi ** 2 * k * a2 * t ** 3 / 3)


def qfi_with_loss(rho: SpinDensityMatrix | None, params: SystemParams, t: float,
                  method="eigendecomposition", variant=RES) -> QfiResult:
    """QFI of the lossy spin-boson state, from the reduced spin state or the Gaussian formula."""
    chi = params.chi(variant)
    N = params.N
    flags = []
    if method == "gaussian_analytic" and N < 100:
        method = "eigendecomposition"
        flags.append("gaussian_requires_N_ge_100")
    if method == "eigendecomposition":
        if N > 10 ** 4:
            raise ValueError("eigendecomposition path limited to N <= 1e4")
        if rho is None:
            rho = loss_spin_density(params, t, variant)
        try:
            value = _qfi_eigen(rho.data, t, chi, params.alpha, params.kappa)
        except np.linalg.LinAlgError as exc:
            raise NumericFailure("eigendecomposition failed") from exc
        return QfiResult(value, "kappa", tuple(flags), {"method": "eigendecomposition"})
    if method != "gaussian_analytic":
        raise ValueError("method must be 'eigendecomposition' or 'gaussian_analytic'")
    if not chi * math.sqrt(N) < params.kappa:
        flags.append("chi_sqrtN_not_below_kappa")
    if not chi * math.sqrt(N) * t < 1:
        flags.append("chi_sqrtN_t_not_small")
    value = qfi_gaussian(params, t, variant)
    extras = {"method": "gaussian_analytic", "short_kappa_t": qfi_gaussian_short(params, t, variant)}
    return QfiResult(value, "kappa", tuple(flags), extras)


@dataclass(frozen=True)
class LossOptimum:
    t_opt: float
    qfi_opt: float
    window: tuple[float, float, float]
    flags: tuple[str, ...]


def qfi_loss_optimum(params: SystemParams, variant=RES) -> LossOptimum:
    """Closed-form optimal time and QFI with the validity window kappa/alpha << chi sqrt(N) << kappa alpha^2."""
    if params.kappa <= 0:
        raise ValueError("optimum requires kappa > 0")
    chi = params.chi(variant)
    N, a2, k = params.N, params.alpha ** 2, params.kappa
    t_opt = (6 / (chi ** 2 * a2 * k * N)) ** (1 / 3)
    f_opt = 4 + 4 * (4 * chi ** 2 * a2 * N / (3 * k ** 2)) ** (1 / 3)
    lo, mid, hi = k / params.alpha, chi * math.sqrt(N), k * a2
    flags = []
    if mid <= lo:
        flags.append("dissipation_too_strong")
    if mid >= hi:
        flags.append("saturated")
        f_opt = 4 + 8 * a2
    return LossOptimum(t_opt, f_opt, (lo, mid, hi), tuple(flags))
