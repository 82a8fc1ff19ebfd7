"""Numerical kernels: Bessel functions of complex argument, log-domain
binomial weights, Jacobi-Anger sums and finite-difference slopes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_RESCALE = 1e200
_SERIES_RADIUS = 1.0


class SeriesNotConverged(ArithmeticError):
    """Truncated series tail exceeds the requested tolerance."""


@dataclass(frozen=True)
class TruncatedSeriesResult:
    value: complex
    terms_used: int
    tail_bound: float
    derivative: complex | None = None


# ---------------------------------------------------------------------------
# Bessel functions


def _bessel_series(nmax: int, z: complex) -> np.ndarray:
    # J_n(z) = (z/2)^n sum_k (-z^2/4)^k / (k! (n+k)!) for small |z|
    out = np.zeros(nmax + 1, dtype=complex)
    q = -0.25 * z * z
    lead = 1.0 + 0j
    for n in range(nmax + 1):
        if n > 0:
            lead *= 0.5 * z / n
        if lead == 0:
            break
        term = lead
        acc = term
        for k in range(1, 60):
            term = term * q / (k * (n + k))
            acc += term
            if abs(term) <= 1e-17 * abs(acc):
                break
        out[n] = acc
    return out


def _start_order(nmax: int, az: float) -> int:
    top = max(nmax, az)
    m = int(top + 30 + 12 * math.sqrt(top) + 1)
    return m + (m % 2)


def _bessel_miller(nmax: int, z: complex) -> np.ndarray:
    # Downward recurrence from a high start order. Normalization uses the
    # generating function e^{-iz} = J_0 + 2 sum (-i)^n J_n (or its conjugate
    # partner), whose magnitude tracks the growth of J_n for complex z.
    m = _start_order(nmax, abs(z))
    vals = np.zeros(m + 2, dtype=complex)
    vals[m] = 1e-300
    two_over_z = 2.0 / z
    for k in range(m, 0, -1):
        vals[k - 1] = k * two_over_z * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > _RESCALE:
            vals /= _RESCALE
    if z.imag >= 0:
        unit, target = -1j, np.exp(-1j * z)
    else:
        unit, target = 1j, np.exp(1j * z)
    phases = unit ** np.arange(m + 1)
    total = vals[0] + 2.0 * np.sum(phases[1:] * vals[1 : m + 1])
    return vals[: nmax + 1] * (target / total)


def bessel_j_all(nmax: int, z: complex) -> np.ndarray:
    """J_0(z), ..., J_nmax(z) for a single complex argument."""
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    z = complex(z)
    if math.isnan(z.real) or math.isnan(z.imag):
        raise ValueError("NaN argument")
    if abs(z) >= 1e4:
        raise OverflowError(f"|z| = {abs(z):.3g} outside the supported domain |z| < 1e4")
    if z == 0:
        out = np.zeros(nmax + 1, dtype=complex)
        out[0] = 1.0
        return out
    if abs(z) < _SERIES_RADIUS:
        return _bessel_series(nmax, z)
    return _bessel_miller(nmax, z)


def bessel_j(n: int, z: complex) -> complex:
    """Bessel function of the first kind J_n(z), integer n, complex z."""
    n = int(n)
    vals = bessel_j_all(abs(n), z)
    v = complex(vals[abs(n)])
    if n < 0 and n % 2:
        v = -v
    return v


def bessel_j_symmetric(nmax: int, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """Orders -nmax..nmax and the matching J_n(z) values."""
    pos = bessel_j_all(nmax + 1, z)
    orders = np.arange(-nmax, nmax + 1)
    sign = np.where(orders % 2 == 0, 1.0, -1.0)
    full = np.where(orders >= 0, pos[np.abs(orders)], sign * pos[np.abs(orders)])
    return orders, full


# ---------------------------------------------------------------------------
# Log-domain helpers


def log_cos_pow(theta, p):
    """p * log|cos(theta)| and the sign of cos(theta)**p.

    Returns ``(-inf, 0)`` where the cosine vanishes. For non-integer ``p`` the
    sign is that of ``cos(theta)`` only when ``p`` is integral.
    """
    theta = np.asarray(theta, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("p must be non-negative")
    c = np.cos(theta)
    # accurate log|cos| near theta = 0
    small = np.abs(theta) < 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        logc = np.where(small, np.log1p(-2.0 * np.sin(0.5 * theta) ** 2),
                        np.log(np.abs(c)))
        mag = np.where(p == 0, 0.0, p * logc)
    odd = np.mod(np.rint(p), 2) == 1
    sign = np.where(c < 0, np.where(odd, -1.0, 1.0), 1.0)
    sign = np.where(np.isneginf(mag), 0.0, sign)
    if mag.ndim == 0:
        return float(mag), float(sign)
    return mag, sign


def cos_pow(theta, p):
    """cos(theta)**p via the log-domain route (real p, integer-sign aware)."""
    mag, sign = log_cos_pow(theta, p)
    return sign * np.exp(mag)


def logsumexp_stream(chunks) -> float:
    """Streaming log-sum-exp over an iterable of arrays."""
    running = -math.inf
    for arr in chunks:
        arr = np.asarray(arr, dtype=float)
        if arr.size == 0:
            continue
        m = float(np.max(arr))
        if m == -math.inf:
            continue
        s = m + math.log(float(np.sum(np.exp(arr - m))))
        hi, lo = max(running, s), min(running, s)
        running = hi + math.log1p(math.exp(lo - hi)) if lo > -math.inf else hi
    return running


def _stirlerr(n: np.ndarray) -> np.ndarray:
    # log(n!) - log(sqrt(2 pi n) (n/e)^n)
    n = np.asarray(n, dtype=float)
    out = np.empty_like(n)
    big = n > 15
    nb = n[big]
    nn = nb * nb
    s0, s1, s2, s3, s4 = 1 / 12, 1 / 360, 1 / 1260, 1 / 1680, 1 / 1188
    out[big] = (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / nb
    small = ~big
    for i in np.nonzero(small)[0]:
        v = n[i]
        if v == 0:
            out[i] = 0.0
        else:
            out[i] = math.lgamma(v + 1) - (v + 0.5) * math.log(v) + v - 0.5 * math.log(2 * math.pi)
    return out


def _bd0(x: np.ndarray, npv: float) -> np.ndarray:
    # x log(x/np) + np - x without cancellation
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    near = np.abs(x - npv) < 0.1 * (x + npv)
    xs = x[near]
    v = (xs - npv) / (xs + npv)
    s = (xs - npv) * v
    ej = 2 * xs * v
    v2 = v * v
    for j in range(1, 40):
        ej = ej * v2
        s = s + ej / (2 * j + 1)
        if np.all(np.abs(ej) <= 1e-18 * np.abs(s) + 1e-300):
            break
    out[near] = s
    far = ~near
    xf = x[far]
    with np.errstate(divide="ignore", invalid="ignore"):
        out[far] = np.where(xf == 0, npv, xf * np.log(xf / npv) + npv - xf)
    return out


def log_binom_half(n: int, k=None) -> np.ndarray:
    """log[binom(n, k) / 2^n] for k = 0..n (or the given k), saddle-point form.

    Accurate to ~1e-14 absolute for n up to 1e7, unlike gammaln differences.
    """
    if k is None:
        k = np.arange(n + 1)
    k = np.asarray(k, dtype=float)
    out = np.full(k.shape, n * -math.log(2.0))
    inner = (k > 0) & (k < n)
    ki = k[inner]
    half = 0.5 * n
    sn = _stirlerr(np.array([n]))[0]
    out[inner] = (sn - _stirlerr(ki) - _stirlerr(n - ki)
                  - _bd0(ki, half) - _bd0(n - ki, half)
                  + 0.5 * np.log(n / (2 * math.pi * ki * (n - ki))))
    return out


# ---------------------------------------------------------------------------
# Jacobi-Anger series


def ja_cutoff(x: complex, margin: float | None = None) -> int:
    ax = abs(x)
    if margin is None:
        margin = 40 + 10 * ax ** (1 / 3)
    return int(math.ceil(ax + margin))


def _tail_bound(x: complex, nmax: int) -> float:
    # |J_n(z)| <= |z/2|^n e^{|Im z|} / n!, summed geometrically beyond nmax
    ax = abs(x)
    n = nmax + 1
    if ax == 0:
        return 0.0
    logt = n * math.log(ax / 2) + abs(x.imag) - math.lgamma(n + 1)
    ratio = ax / 2 / (n + 1)
    if ratio >= 1:
        return math.inf
    return 2 * math.exp(logt) / (1 - ratio)


def jacobi_anger_sum(x: complex, weight: Callable[[np.ndarray], np.ndarray],
                     margin: float | None = None, tol: float = 1e-12,
                     derivative: bool = False) -> TruncatedSeriesResult:
    """sum_n i^n J_n(x) weight(n) over |n| <= |x| + margin.

    ``weight`` receives the integer order array and should be bounded by one in
    magnitude; larger weights inflate the reported tail bound accordingly. With ``derivative=True`` the x-derivative is carried along using
    J_n' = (J_{n-1} - J_{n+1}) / 2.
    """
    x = complex(x)
    nmax = ja_cutoff(x, margin)
    orders, jn = bessel_j_symmetric(nmax + 1, x)
    core = slice(1, -1)
    n = orders[core]
    w = np.asarray(weight(n), dtype=complex)
    phase = 1j ** (n % 4)
    value = complex(np.sum(phase * jn[core] * w))
    tail = _tail_bound(x, nmax) * max(1.0, float(np.max(np.abs(w))))
    scale = max(abs(value), 1.0)
    if tail > tol * scale:
        raise SeriesNotConverged(f"tail bound {tail:.3g} above tolerance at cutoff {nmax}")
    d = None
    if derivative:
        djn = 0.5 * (jn[:-2] - jn[2:])
        d = complex(np.sum(phase * djn * w))
    return TruncatedSeriesResult(value, int(n.size), tail, d)


# ---------------------------------------------------------------------------
# Finite differences


@dataclass(frozen=True)
class SlopeEstimate:
    value: float
    error: float


def finite_difference_slope(f: Callable[[float], float], beta0: float,
                            scale: float = 1.0) -> SlopeEstimate:
    """Fourth-order central difference with a Richardson error estimate."""

    def stencil(h):
        vals = [f(beta0 + s * h) for s in (-2, -1, 1, 2)]
        if not all(np.isfinite(vals)):
            raise ArithmeticError("non-finite function value in stencil")
        fm2, fm1, fp1, fp2 = vals
        return (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)

    h = 1e-3 * scale
    d1 = stencil(h)
    d2 = stencil(2 * h)
    return SlopeEstimate(d1, abs(d1 - d2) / 15)
