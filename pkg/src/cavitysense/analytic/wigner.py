"""Wigner function of superpositions of coherent states."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import log_coherent_coefficients, m_values

MAX_COMPONENTS = 1000
# a cell wider than a quarter of the vacuum width (sigma = 1/2) hides sub-vacuum fringes
MAX_STEP = 0.125
MAX_POINTS = 4 * 10 ** 7


@dataclass(frozen=True)
class WignerGrid:
    re: np.ndarray
    im: np.ndarray
    W: np.ndarray  # shape (len(im), len(re))
    step: float
    flags: tuple[str, ...] = ()

    @property
    def cell_area(self) -> float:
        return self.step ** 2

    def integral(self) -> float:
        return float(np.sum(self.W) * self.cell_area)

    def min_value(self) -> float:
        return float(np.min(self.W))


def make_axes(re_range, im_range, step):
    """Sample points (inclusive of both ends up to rounding) for a square-cell grid."""
    if step <= 0:
        raise ValueError("step must be positive")
    nre = int(round((re_range[1] - re_range[0]) / step)) + 1
    nim = int(round((im_range[1] - im_range[0]) / step)) + 1
    if nre < 1 or nim < 1:
        raise ValueError("grid ranges must satisfy min <= max")
    if nre * nim > MAX_POINTS:
        raise ValueError(f"grid of {nre} x {nim} points exceeds {MAX_POINTS}")
    return re_range[0] + step * np.arange(nre), im_range[0] + step * np.arange(nim)


def coherent_overlap(b: complex, a: complex) -> complex:
    """<b|a>."""
    return complex(np.exp(-abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + np.conj(b) * a))


def cat_norm(weights, amps) -> float:
    w = np.asarray(weights, dtype=complex)
    a = np.asarray(amps, dtype=complex)
    G = np.exp(-np.abs(a)[None, :] ** 2 / 2 - np.abs(a)[:, None] ** 2 / 2 + np.conj(a)[:, None] * a[None, :])
    return float(np.real(np.conj(w) @ G @ w))


def _dyad(zeta, a, b):
    # Wigner function of |a><b| times pi/2: <b|a> exp(-2 (zeta* - b*)(zeta - a))
    e = -2 * (np.conj(zeta) - np.conj(b)) * (zeta - a) - abs(a) ** 2 / 2 - abs(b) ** 2 / 2 + np.conj(b) * a
    return np.exp(e)


def wigner_cat(components, re_range=None, im_range=None, step=0.05) -> WignerGrid:
    """W(zeta) of sum_j w_j |a_j>, normalized with the overlap-aware norm.

    ``components`` is a sequence of (weight, amplitude) pairs.
    """
    comps = list(components)
    if not comps:
        raise ValueError("at least one component required")
    if len(comps) > MAX_COMPONENTS:
        raise ValueError(f"at most {MAX_COMPONENTS} components supported")
    w = np.array([c[0] for c in comps], dtype=complex)
    a = np.array([c[1] for c in comps], dtype=complex)
    if re_range is None or im_range is None:
        pad = 3.0
        re_range = re_range or (float(a.real.min()) - pad, float(a.real.max()) + pad)
        im_range = im_range or (float(a.imag.min()) - pad, float(a.imag.max()) + pad)
    re, im = make_axes(re_range, im_range, step)
    zeta = re[None, :] + 1j * im[:, None]
    total = np.zeros(zeta.shape)
    K = len(a)
    for j in range(K):
        total += (abs(w[j]) ** 2 * _dyad(zeta, a[j], a[j])).real
        for k in range(j + 1, K):
            # the (k, j) dyad is the complex conjugate of (j, k)
            total += 2 * (w[j] * np.conj(w[k]) * _dyad(zeta, a[j], a[k])).real
    W = 2 / math.pi * total / cat_norm(w, a)
    flags = ("grid_too_coarse",) if step > MAX_STEP else ()
    return WignerGrid(re, im, W, step, flags)


def spin_boson_cat_components(N: int, alpha: float, chi_t: float):
    """Components c_m |alpha e^{-i chi m t}> of the bosonic analogue of the spin-boson cat."""
    c = np.exp(log_coherent_coefficients(N))
    m = m_values(N)
    return list(zip(c, alpha * np.exp(-1j * chi_t * m)))


def count_sign_changes(W: np.ndarray, tol: float = 1e-6) -> int:
    """Sign changes along rows and columns, ignoring values within tol of zero."""
    s = np.where(W > tol, 1, np.where(W < -tol, -1, 0))
    n = 0
    for arr in (s, s.T):
        for row in arr:
            nz = row[row != 0]
            n += int(np.sum(nz[1:] != nz[:-1]))
    return n
