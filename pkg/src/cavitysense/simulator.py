"""Exact small-system dynamics on collective-spin (or per-spin) x truncated Fock space.

Joint vectors are spin-major: index = spin_index * (n_max + 1) + photon_number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from .core import (MomentSet, NumericFailure, ProtocolConfig, SystemParams,
                   coherent_spin_state, spin_operators, splus_matrix)

DEFAULT_MAX_BYTES = 4 * 2 ** 30
DEFAULT_LEAKAGE = 1e-8
MAX_PER_SPIN = 6


class TruncationLeakage(NumericFailure):
    """Population reached the top of the truncated Fock space."""


class MemoryCapExceeded(MemoryError):
    pass


def default_nmax(alpha: float) -> int:
    return int(math.ceil(alpha ** 2 + 10 * alpha + 20))


# ---------------------------------------------------------------------------
# Hamiltonian and jump specifications


@dataclass(frozen=True)
class TavisCummings:
    g: float
    delta_c: float = 0.0


@dataclass(frozen=True)
class DispersiveEffective:
    """-delta_c a^dag a + (chi/2) S+S- + chi a^dag a S_z, terms switchable."""

    chi: float
    spm_term: bool = True
    delta_term: bool = True
    delta_c: float = 0.0


@dataclass(frozen=True)
class ResonantEffective:
    """g sqrt(nbar) (1 - c) S_x + g n S_x / sqrt(nbar), with c = (N+1)/(2 nbar) if enabled."""

    g: float
    nbar: float
    correction: bool = False


def dispersive_coupling(chi: float) -> DispersiveEffective:
    """Bare chi a^dag a S_z."""
    return DispersiveEffective(chi, spm_term=False, delta_term=False)


@dataclass(frozen=True)
class JumpSet:
    photon_loss: float = 0.0
    spin_emission: float = 0.0
    rotated_emission: float = 0.0


# ---------------------------------------------------------------------------
# Operator space


@dataclass(frozen=True)
class Space:
    """Spin (collective Dicke or per-spin) tensored with a truncated Fock space."""

    N: int
    n_max: int
    per_spin: bool = False

    @property
    def spin_dim(self):
        return 2 ** self.N if self.per_spin else self.N + 1

    @property
    def fock_dim(self):
        return self.n_max + 1

    @property
    def dim(self):
        return self.spin_dim * self.fock_dim

    def a(self):
        return sp.diags(np.sqrt(np.arange(1, self.fock_dim)), 1, format="csr")

    def number(self):
        return sp.diags(np.arange(self.fock_dim, dtype=float), 0, format="csr")

    def on_spin(self, op):
        return sp.kron(sp.csr_matrix(op), sp.identity(self.fock_dim), format="csr")

    def on_fock(self, op):
        return sp.kron(sp.identity(self.spin_dim), sp.csr_matrix(op), format="csr")

    def single_spin(self, i):
        """(s_x, s_y, s_z) of spin i in the per-spin space."""
        if not self.per_spin:
            raise ValueError("single-spin operators need the per-spin space")
        sx = np.array([[0, 0.5], [0.5, 0]])
        sy = np.array([[0, -0.5j], [0.5j, 0]])
        sz = np.array([[0.5, 0], [0, -0.5]])
        out = []
        for s in (sx, sy, sz):
            op = sp.identity(1, format="csr")
            for j in range(self.N):
                op = sp.kron(op, s if j == i else sp.identity(2), format="csr")
            out.append(op)
        return tuple(out)

    def collective(self):
        """(S_x, S_y, S_z) on the spin factor only."""
        if not self.per_spin:
            return spin_operators(self.N, sparse=True)
        ops = [sp.csr_matrix((self.spin_dim, self.spin_dim), dtype=complex) for _ in range(3)]
        for i in range(self.N):
            for k, s in enumerate(self.single_spin(i)):
                ops[k] = ops[k] + s
        return tuple(ops)

    def splus(self):
        sx, sy, _ = self.collective()
        return sp.csr_matrix(sx + 1j * sy)


def _check_cap(nbytes, cap):
    if nbytes > cap:
        raise MemoryCapExceeded(f"requires ~{nbytes / 2**20:.1f} MiB, cap is {cap / 2**20:.1f} MiB")


def build_hamiltonian(spec, space: Space, max_bytes=DEFAULT_MAX_BYTES):
    """Sparse Hermitian Hamiltonian on the joint space."""
    _check_cap(6 * space.dim * 24, max_bytes)
    sx, sy, sz = space.collective()
    a = space.a()
    n = space.number()
    if isinstance(spec, TavisCummings):
        sp_ = sx + 1j * sy
        sm = sp_.conj().T
        H = spec.g * (sp.kron(sm, a.T) + sp.kron(sp_, a)) - spec.delta_c * space.on_fock(n)
    elif isinstance(spec, DispersiveEffective):
        H = spec.chi * sp.kron(sz, n)
        if spec.spm_term:
            sp_ = sx + 1j * sy
            H = H + 0.5 * spec.chi * space.on_spin(sp_ @ sp_.conj().T)
        if spec.delta_term and spec.delta_c != 0:
            H = H - spec.delta_c * space.on_fock(n)
    elif isinstance(spec, ResonantEffective):
        scale = 1.0
        if spec.correction:
            scale = 1 - (space.N + 1) / (2 * spec.nbar)
        rt = math.sqrt(spec.nbar)
        H = spec.g * rt * scale * space.on_spin(sx) + (spec.g / rt) * sp.kron(sx, n)
    else:
        raise TypeError(f"unknown Hamiltonian spec {spec!r}")
    return sp.csr_matrix(H, dtype=complex)


def build_jumps(jumps: JumpSet, space: Space):
    """Collapse operators. Per-spin channels require the per-spin space."""
    ops = []
    if jumps.photon_loss > 0:
        ops.append(math.sqrt(jumps.photon_loss) * space.on_fock(space.a()))
    if jumps.spin_emission > 0 or jumps.rotated_emission > 0:
        if not space.per_spin or space.N > MAX_PER_SPIN:
            raise ValueError(f"per-spin channels need the per-spin space with N <= {MAX_PER_SPIN}")
        for i in range(space.N):
            sx, sy, sz = space.single_spin(i)
            if jumps.spin_emission > 0:
                # sigma^- = s_x - i s_y
                ops.append(math.sqrt(2 * jumps.spin_emission) * space.on_spin(sx - 1j * sy))
            if jumps.rotated_emission > 0:
                g = jumps.rotated_emission
                # coupling axis (z) carries twice the weight of the transverse axes
                ops.append(math.sqrt(2 * g) * space.on_spin(sz))
                ops.append(math.sqrt(g) * space.on_spin(sx))
                ops.append(math.sqrt(g) * space.on_spin(sy))
    return ops


# ---------------------------------------------------------------------------
# States


@dataclass(frozen=True)
class JointState:
    space: Space
    data: np.ndarray
    is_dm: bool = False
    leakage_bound: float = DEFAULT_LEAKAGE
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        d = self.space.dim
        shape = (d, d) if self.is_dm else (d,)
        if self.data.shape != shape:
            raise ValueError(f"state shape {self.data.shape} does not match {shape}")

    @property
    def norm(self) -> float:
        if self.is_dm:
            return float(np.trace(self.data).real)
        return float(np.vdot(self.data, self.data).real)

    def photon_distribution(self) -> np.ndarray:
        s = self.space
        if self.is_dm:
            diag = np.diagonal(self.data).real
        else:
            diag = np.abs(self.data) ** 2
        return diag.reshape(s.spin_dim, s.fock_dim).sum(axis=0)

    @property
    def leakage(self) -> float:
        p = self.photon_distribution()
        top = max(1, int(math.ceil(0.05 * self.space.fock_dim)))
        return float(p[-top:].sum())

    def to_dm(self) -> "JointState":
        if self.is_dm:
            return self
        return replace(self, data=np.outer(self.data, self.data.conj()), is_dm=True)

    def expect(self, op) -> complex:
        if self.is_dm:
            return complex((op @ self.data).trace())
        return complex(np.vdot(self.data, op @ self.data))

    def spin_reduced(self) -> np.ndarray:
        s = self.space
        if self.is_dm:
            r = self.data.reshape(s.spin_dim, s.fock_dim, s.spin_dim, s.fock_dim)
            return np.einsum("anbn->ab", r)
        v = self.data.reshape(s.spin_dim, s.fock_dim)
        return v @ v.conj().T

    def fock_reduced(self) -> np.ndarray:
        s = self.space
        if self.is_dm:
            r = self.data.reshape(s.spin_dim, s.fock_dim, s.spin_dim, s.fock_dim)
            return np.einsum("anam->nm", r)
        v = self.data.reshape(s.spin_dim, s.fock_dim)
        return v.T @ v.conj()

    def check(self, tol=1e-10):
        if abs(self.norm - 1) > tol:
            raise NumericFailure(f"norm drifted to {self.norm}")
        if self.leakage > self.leakage_bound:
            raise TruncationLeakage(f"Fock leakage {self.leakage:.3g} above {self.leakage_bound:.3g}")
        return self


def coherent_fock(alpha: complex, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    if alpha == 0:
        v = np.zeros(n_max + 1, dtype=complex)
        v[0] = 1
        return v
    logmag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    v = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    return v / np.linalg.norm(v)


def product_state(space: Space, spin_vec, alpha: complex, leakage_bound=DEFAULT_LEAKAGE) -> JointState:
    spin_vec = np.asarray(spin_vec, dtype=complex)
    return JointState(space, np.kron(spin_vec, coherent_fock(alpha, space.n_max)),
                      leakage_bound=leakage_bound)


def per_spin_x_state(N: int) -> np.ndarray:
    plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
    v = np.ones(1, dtype=complex)
    for _ in range(N):
        v = np.kron(v, plus)
    return v


# ---------------------------------------------------------------------------
# Propagation


def _is_diagonal(H) -> bool:
    H = sp.csr_matrix(H)
    coo = H.tocoo()
    return bool(np.all(coo.row == coo.col))


def evolve_unitary(state: JointState, H, t: float, tol: float = 1e-9,
                   check_leakage=True) -> JointState:
    """exp(-i H t) applied to a pure state or density matrix."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return state
    if _is_diagonal(H):
        ph = np.exp(-1j * t * H.diagonal())
        if state.is_dm:
            data = ph[:, None] * state.data * ph.conj()[None, :]
        else:
            data = ph * state.data
    else:
        A = -1j * t * sp.csc_matrix(H)
        if state.is_dm:
            half = expm_multiply(A, state.data)
            data = expm_multiply(A, half.conj().T).conj().T
        else:
            data = expm_multiply(A, state.data)
    out = replace(state, data=data)
    if abs(out.norm - 1) > max(tol, 1e-10) * 10:
        raise NumericFailure(f"norm drift {out.norm - 1:.3g} during unitary step")
    if check_leakage:
        out.check(tol=1e-8)
    return out


def liouvillian(H, jumps):
    """Column-stacked superoperator: vec(A X B) = (B^T kron A) vec(X)."""
    d = H.shape[0]
    eye = sp.identity(d, format="csr")
    H = sp.csr_matrix(H)
    L = -1j * (sp.kron(eye, H) - sp.kron(H.T, eye))
    for c in jumps:
        c = sp.csr_matrix(c)
        cdc = (c.conj().T @ c).tocsr()
        L = L + sp.kron(c.conj(), c) - 0.5 * sp.kron(eye, cdc) - 0.5 * sp.kron(cdc.T, eye)
    return sp.csc_matrix(L)


def evolve_lindblad(state: JointState, H, jumps, t: float, tol: float = 1e-9,
                    max_bytes=DEFAULT_MAX_BYTES, check_leakage=True) -> JointState:
    """Master-equation propagation of a density matrix."""
    if t < 0:
        raise ValueError("t must be >= 0")
    state = state.to_dm()
    if t == 0:
        return state
    d = state.space.dim
    _check_cap(d * d * 16 * 4, max_bytes)
    L = liouvillian(H, jumps)
    vec = state.data.reshape(-1, order="F")
    out = expm_multiply(L * t, vec).reshape(d, d, order="F")
    out = 0.5 * (out + out.conj().T)
    res = replace(state, data=out)
    if abs(res.norm - 1) > 1e-9:
        raise NumericFailure(f"trace drift {res.norm - 1:.3g} during Lindblad step")
    if check_leakage:
        res.check(tol=1e-9)
    return res


def min_eigenvalue(state: JointState) -> float:
    return float(np.linalg.eigvalsh(state.to_dm().data)[0])


def displace(state: JointState, beta: complex) -> JointState:
    """Exact exp(beta a^dag - beta* a) on the truncated Fock factor."""
    s = state.space
    a = s.a().toarray()
    D = la.expm(beta * a.T - np.conj(beta) * a)
    if state.is_dm:
        r = state.data.reshape(s.spin_dim, s.fock_dim, s.spin_dim, s.fock_dim)
        r = np.einsum("nm,ambk,lk->anbl", D, r, D.conj(), optimize=True)
        data = r.reshape(s.dim, s.dim)
    else:
        data = (state.data.reshape(s.spin_dim, s.fock_dim) @ D.T).reshape(-1)
    return replace(state, data=data)


# ---------------------------------------------------------------------------
# Protocol


@dataclass(frozen=True)
class ProtocolRun:
    state: JointState
    moments: MomentSet


def measured_moments(state: JointState, N: int) -> MomentSet:
    s = state.space
    Sp = s.on_spin(s.splus())
    _, _, sz = s.collective()
    Sz = s.on_spin(sz)
    splus = state.expect(Sp)
    splus_sq = state.expect(Sp @ Sp)
    spm = state.expect(Sp @ Sp.conj().T).real
    nan = float("nan")
    return MomentSet(N, splus, splus_sq, spm, state.expect(Sz).real,
                     complex(nan, nan), complex(nan, nan), nan, nan, "measured")


def run_protocol(params: SystemParams, config: ProtocolConfig, backend="unitary",
                 n_max=None, per_spin=False, spin_state=None, chi=None,
                 hamiltonian=None, jumps: JumpSet | None = None,
                 max_bytes=DEFAULT_MAX_BYTES, check_leakage=True) -> ProtocolRun:
    """Forward evolution, displacement, reversed evolution; returns the final state and moments.

    The coupling defaults to chi a^dag a S_z with chi from the configured variant.
    ``hamiltonian`` may be a callable sign -> spec to override it.
    """
    N = params.N
    if chi is None:
        chi = params.chi(config.variant)
    if n_max is None:
        n_max = default_nmax(params.alpha + abs(config.beta))
    space = Space(N, n_max, per_spin)
    if spin_state is None:
        spin_state = per_spin_x_state(N) if per_spin else coherent_spin_state(N, "+x")
    psi = product_state(space, spin_state, params.alpha)

    def ham(sign):
        spec = hamiltonian(sign) if hamiltonian else dispersive_coupling(sign * chi)
        return build_hamiltonian(spec, space, max_bytes)

    if backend == "unitary":
        st = evolve_unitary(psi, ham(+1), config.tau1, check_leakage=check_leakage)
        st = displace(st, config.beta)
        st = evolve_unitary(st, ham(-1), config.tau2, check_leakage=check_leakage)
    elif backend == "lindblad":
        if jumps is None:
            jumps = JumpSet(photon_loss=params.kappa)
        cops = build_jumps(jumps, space)
        st = evolve_lindblad(psi, ham(+1), cops, config.tau1, max_bytes=max_bytes,
                             check_leakage=check_leakage)
        st = displace(st, config.beta)
        st = evolve_lindblad(st, ham(-1), cops, config.tau2, max_bytes=max_bytes,
                             check_leakage=check_leakage)
    else:
        raise ValueError("backend must be 'unitary' or 'lindblad'")
    if check_leakage and st.leakage > st.leakage_bound:
        raise TruncationLeakage(f"Fock leakage {st.leakage:.3g} after displacement")
    return ProtocolRun(st, measured_moments(st, N))


def quadrature_y(space: Space):
    a = space.on_fock(space.a())
    return sp.csr_matrix(1j * (a.conj().T - a))


# ---------------------------------------------------------------------------
# Quantum Fisher information of mixed states


@dataclass(frozen=True)
class MixedQfi:
    value: float
    rank_used: int
    method: str


def qfi_mixed(rho, generator, lowrank=False, threshold=1e-12, floor=1e-14) -> MixedQfi:
    """2 sum (l_a - l_b)^2 / (l_a + l_b) |G_ab|^2, or its low-rank reduction."""
    rho = np.asarray(rho)
    G = generator.toarray() if sp.issparse(generator) else np.asarray(generator)
    try:
        lam, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("eigendecomposition failed") from exc
    lam = np.clip(lam, 0, None)
    if not lowrank:
        Gab = V.conj().T @ G @ V
        s = lam[:, None] + lam[None, :]
        d = (lam[:, None] - lam[None, :]) ** 2
        mask = s > floor
        val = 2 * np.sum(d[mask] / s[mask] * np.abs(Gab[mask]) ** 2)
        return MixedQfi(float(val), int(np.sum(lam > floor)), "full")
    keep = lam > threshold
    Vi, li = V[:, keep], lam[keep]
    Gi = Vi.conj().T @ G @ Vi
    s = li[:, None] + li[None, :]
    d = (li[:, None] - li[None, :]) ** 2
    inner = 2 * np.sum(d / s * np.abs(Gi) ** 2)
    # 4 sum_{b in I} l_b <b|G^dag (1 - P_I) G|b>
    GV = G @ Vi
    full = np.sum(np.abs(GV) ** 2, axis=0)
    proj = np.sum(np.abs(Gi) ** 2, axis=0)
    outer = 4 * np.sum(li * (full - proj))
    return MixedQfi(float(inner + outer), int(keep.sum()), "lowrank")
