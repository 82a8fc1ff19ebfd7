"""Domain types, Dicke-basis spin algebra and the moment-to-sensitivity assembly.

Basis convention: index k = 0..N of a spin vector corresponds to S_z = N/2 - k.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .kernels import log_binom_half


class InsensitiveWorkingPoint(ArithmeticError):
    """The signal slope vanishes, so (delta beta)^2 diverges."""


class NumericFailure(RuntimeError):
    """A numerical routine failed to deliver a trustworthy value."""


class ProtocolVariant(enum.Enum):
    DISPERSIVE = "dispersive"
    RESONANT = "resonant"


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of one scenario. All rates are angular (rad/s)."""

    N: int
    g: float = 0.0
    delta_c: float = 0.0
    kappa: float = 0.0
    gamma: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("atom number N must be a positive integer")
        for name in ("kappa", "gamma", "alpha"):
            v = getattr(self, name)
            if not v >= 0:
                raise ValueError(f"{name} must be >= 0, got {v}")

    @classmethod
    def from_chi(cls, N, chi, alpha, kappa=0.0, gamma=0.0,
                 variant=ProtocolVariant.RESONANT, delta_c=None):
        """Build parameters that realize a given dispersive coupling chi."""
        if variant is ProtocolVariant.RESONANT:
            return cls(N=N, g=chi * alpha, delta_c=0.0, kappa=kappa, gamma=gamma, alpha=alpha)
        if delta_c is None:
            delta_c = 1.0
        g = math.sqrt(abs(chi * delta_c) / 2)
        return cls(N=N, g=g, delta_c=math.copysign(abs(delta_c), chi * delta_c),
                   kappa=kappa, gamma=gamma, alpha=alpha)

    def chi(self, variant=ProtocolVariant.RESONANT) -> float:
        if variant is ProtocolVariant.RESONANT:
            if self.alpha == 0:
                raise ValueError("resonant coupling g/alpha undefined for alpha = 0")
            return self.g / self.alpha
        if self.delta_c == 0:
            raise ValueError("dispersive coupling 2g^2/delta_c undefined for delta_c = 0")
        return 2 * self.g ** 2 / self.delta_c

    def resonant_valid(self, factor=10.0) -> bool:
        return self.alpha ** 2 >= factor * self.N

    def dispersive_valid(self, factor=10.0) -> bool:
        d = abs(self.delta_c)
        return d >= factor * self.g * math.sqrt(self.N) and d >= factor * self.g * self.alpha


@dataclass(frozen=True)
class ProtocolConfig:
    tau1: float
    tau2: float
    beta: float = 0.0
    phi: float = math.pi / 2
    sigma_det: float = 0.0
    variant: ProtocolVariant = ProtocolVariant.RESONANT

    def __post_init__(self):
        if self.tau1 < 0 or self.tau2 < 0:
            raise ValueError("evolution times must be >= 0")
        if not (0 < self.phi <= math.pi):
            raise ValueError("measurement angle must lie in (0, pi]; phi = 0 is excluded")
        if self.sigma_det < 0:
            raise ValueError("detection noise must be >= 0")


@dataclass(frozen=True)
class MomentSet:
    """Sufficient statistics for equatorial spin measurements and their beta-derivatives."""

    N: int
    splus: complex
    splus_sq: complex
    spm: float
    sz: float = 0.0
    d_splus: complex = 0j
    d_splus_sq: complex = 0j
    d_spm: float = 0.0
    d_sz: float = 0.0
    sz_source: str = "conserved"

    def __post_init__(self):
        tol = 1e-9 * max(1.0, self.N)
        if abs(self.splus) > self.N / 2 + tol:
            raise NumericFailure(f"|<S+>| = {abs(self.splus)} exceeds N/2")
        if not (-tol <= self.spm <= self.N * (self.N + 1) / 4 + tol * self.N):
            raise NumericFailure(f"<S+S-> = {self.spm} outside collective-spin bounds")


@dataclass(frozen=True)
class GainCurve:
    times: np.ndarray
    delta_beta_sq: np.ndarray
    gain_db: np.ndarray = field(init=False)
    qfi: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "gain_db", metrological_gain(self.delta_beta_sq))


# ---------------------------------------------------------------------------
# Spin algebra


def _check_n(N):
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    return int(N)


def m_values(N: int) -> np.ndarray:
    """S_z eigenvalues in basis order (descending)."""
    N = _check_n(N)
    return N / 2 - np.arange(N + 1)


def splus_matrix(N: int, sparse=False):
    N = _check_n(N)
    s = N / 2
    m = m_values(N)
    # <m+1|S+|m> at row k-1, column k
    off = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    mat = sp.diags(off, 1, shape=(N + 1, N + 1), format="csr")
    return mat if sparse else mat.toarray()


def spin_operators(N: int, sparse=False):
    """(S_x, S_y, S_z) in the Dicke basis."""
    sp_ = splus_matrix(N, sparse=sparse)
    sm = sp_.conj().T
    sx = 0.5 * (sp_ + sm)
    sy = -0.5j * (sp_ - sm)
    sz = sp.diags(m_values(N), 0, format="csr")
    if not sparse:
        sz = sz.toarray()
    return sx, sy, sz


def log_coherent_coefficients(N: int) -> np.ndarray:
    """log c_m for the +x coherent spin state (all c_m > 0)."""
    N = _check_n(N)
    return 0.5 * log_binom_half(N)


def coherent_spin_state(N: int, axis="+x") -> np.ndarray:
    """Spin coherent state vector.

    ``axis`` is ``'+x'``, ``'-z'``, ``'+z'`` or a (polar, azimuth) pair.
    """
    N = _check_n(N)
    if axis == "+x":
        return np.exp(log_coherent_coefficients(N)).astype(complex)
    if axis == "-z":
        v = np.zeros(N + 1, dtype=complex)
        v[-1] = 1
        return v
    if axis == "+z":
        v = np.zeros(N + 1, dtype=complex)
        v[0] = 1
        return v
    theta, phi = axis
    k = np.arange(N + 1)
    # |theta, phi> = sum_k sqrt(C(N,k)) cos(theta/2)^(N-k) sin(theta/2)^k e^{i k phi}
    lb = log_binom_half(N) + N * math.log(2.0)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    with np.errstate(divide="ignore"):
        logmag = 0.5 * lb + (N - k) * np.log(abs(c)) + k * np.log(abs(s))
    sign = np.sign(c) ** (N - k) * np.sign(s) ** k
    return sign * np.exp(logmag) * np.exp(1j * k * phi)


# ---------------------------------------------------------------------------
# Sensitivity assembly


def normalize_phi(phi: float) -> float:
    """Map an angle onto (0, pi]; S_phi and S_{phi+pi} give the same sensitivity."""
    p = math.fmod(phi, math.pi)
    if p <= 0:
        p += math.pi
    return p


def auto_phi(m: MomentSet) -> float:
    """Measurement angle orthogonal to the mean-spin azimuth."""
    return normalize_phi(math.atan2(m.splus.imag, m.splus.real) + math.pi / 2)


def spin_signal(m: MomentSet, phi: float) -> tuple[float, float]:
    """<S_phi> and its beta-derivative."""
    e = np.exp(-1j * phi)
    return float((e * m.splus).real), float((e * m.d_splus).real)


def spin_variance(m: MomentSet, phi: float) -> float:
    e2 = np.exp(-2j * phi)
    second = (2 * (e2 * m.splus_sq).real + 2 * m.spm - 2 * m.sz) / 4
    mean = (np.exp(-1j * phi) * m.splus).real
    return float(second - mean ** 2)


def sensitivity_from_moments(m: MomentSet, phi="auto", sigma_det: float = 0.0) -> float:
    """(delta beta)^2 for a measurement of S_phi with Gaussian detection noise."""
    if isinstance(phi, str):
        if phi != "auto":
            raise ValueError("phi must be a number or 'auto'")
        phi = auto_phi(m)
    if phi == 0:
        raise ValueError("phi = 0 is excluded")
    _, slope = spin_signal(m, phi)
    var = spin_variance(m, phi) + sigma_det ** 2
    if slope == 0 or not math.isfinite(var / slope ** 2):
        raise InsensitiveWorkingPoint("signal slope vanishes; sensitivity diverges")
    return var / slope ** 2


def metrological_gain(delta_beta_sq):
    """Gain over the standard quantum limit in dB: -10 log10(4 (delta beta)^2)."""
    d = np.asarray(delta_beta_sq, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("(delta beta)^2 must be positive")
    g = -10 * np.log10(4 * d)
    return float(g) if g.ndim == 0 else g
