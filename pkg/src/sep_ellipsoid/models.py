"""Three-qubit X states under dephasing and transverse-field Ising chains."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .qmat import hermitian, partial_trace

MAX_ISING_LENGTH = 16
_DEGENERACY_TOL = 1e-9


# ---------------------------------------------------------------------------
# X states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class XStateParams:
    """Diagonal (``a``, ``b``) and anti-diagonal (``c``) entries of a three-qubit X state.

    ``a[j]`` sits at basis index ``j``, ``b[j]`` at ``7 - j`` and ``c[j]``
    couples the two.
    """

    a: tuple
    b: tuple
    c: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        c = tuple(complex(v) for v in self.c)
        if not (len(a) == len(b) == len(c) == 4):
            raise ValueError("a, b and c must each have four entries")
        if min(a + b) < 0:
            raise ValueError("diagonal entries must be nonnegative")
        total = sum(a) + sum(b)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"trace is {total!r}, expected 1")
        for j in range(4):
            if abs(c[j]) ** 2 > a[j] * b[j] * (1 + 1e-12):
                raise ValueError(f"|c[{j}]|^2 > a[{j}] b[{j}]: block {j} is not positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)


REFERENCE_X_PARAMS = XStateParams(
    a=(1 / 8, 1 / 8, 1 / 32, 1 / 64),
    b=(1 / 8, 1 / 8, 7 / 32, 15 / 64),
    c=(1 / 12, 1 / 24, 1 / 24, 1 / 36),
)


def x_state(params: XStateParams) -> np.ndarray:
    rho = np.zeros((8, 8), dtype=complex)
    for j in range(4):
        rho[j, j] = params.a[j]
        rho[7 - j, 7 - j] = params.b[j]
        rho[j, 7 - j] = params.c[j]
        rho[7 - j, j] = np.conj(params.c[j])
    return rho


def dephase_x(params: XStateParams, p: float) -> XStateParams:
    """Independent-qubit dephasing: every ``c[j]`` is scaled by ``(1 - p)**1.5``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"dephasing parameter {p} outside [0, 1]")
    f = (1.0 - p) ** 1.5
    return replace(params, c=tuple(f * c for c in params.c))


def x_state_rdms(params: XStateParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a, b = params.a, params.b
    r1 = np.diag([a[0] + a[1] + a[2] + a[3], b[0] + b[1] + b[2] + b[3]]).astype(complex)
    r2 = np.diag([a[0] + a[1] + b[2] + b[3], b[0] + b[1] + a[2] + a[3]]).astype(complex)
    r3 = np.diag([a[0] + b[1] + a[2] + b[3], b[0] + a[1] + b[2] + a[3]]).astype(complex)
    return r1, r2, r3


def dephased_x_state(p: float, params: XStateParams = REFERENCE_X_PARAMS) -> np.ndarray:
    return x_state(dephase_x(params, p))


# ---------------------------------------------------------------------------
# Transverse-field Ising chain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsingSpec:
    """Chain ``H = -sum_i (X_i X_{i+1} - h Z_i)`` at temperature ``T`` (``T == 0``: ground state)."""

    L: int
    h: float
    periodic: bool = True
    T: float = 0.0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("chain length must be at least 2")
        if self.T < 0:
            raise ValueError("temperature must be nonnegative")


def _site_op(op, i, L):
    return sp.kron(sp.kron(sp.identity(2 ** i, format="csr"), op), sp.identity(2 ** (L - i - 1), format="csr"), format="csr")


def ising_hamiltonian(L: int, h: float, periodic: bool = True, max_length: int = MAX_ISING_LENGTH) -> sp.csr_matrix:
    """Sparse real-symmetric Ising Hamiltonian on ``L`` qubits.

    Conventions: ``Z|0> = |0>``, ``X`` has unit off-diagonals and site 0 is the
    most significant bit of the basis index.
    """
    if L < 2:
        raise ValueError("chain length must be at least 2")
    if L > max_length:
        raise ValueError(f"L={L} exceeds the cap of {max_length} sites")
    x = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    z = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]]))
    dim = 2 ** L
    H = sp.csr_matrix((dim, dim))
    bonds = L if (periodic and L > 2) else L - 1
    for i in range(bonds):
        H = H - _site_op(x, i, L) @ _site_op(x, (i + 1) % L, L)
    for i in range(L):
        H = H + h * _site_op(z, i, L)
    return H.tocsr()


def gibbs_state(H, T: float) -> np.ndarray:
    """``exp(-H/T)/Z`` from a full spectral decomposition; ``T == 0`` gives the ground-space projector."""
    if T < 0:
        raise ValueError("temperature must be nonnegative")
    Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
    w, v = np.linalg.eigh(hermitian(Hd))
    return _weighted_projector(w, v, _boltzmann_weights(w, T))


def _boltzmann_weights(w: np.ndarray, T: float) -> np.ndarray:
    if T == 0:
        p = (w - w[0] <= _DEGENERACY_TOL * max(1.0, abs(w[0]))).astype(float)
    else:
        p = np.exp(-(w - w[0]) / T)
    return p / p.sum()


def _weighted_projector(w, v, p):
    return (v * p) @ v.conj().T


@lru_cache(maxsize=8)
def _ising_spectrum(L: int, h: float, periodic: bool):
    """Full spectrum, diagonalizing the two sectors of ``prod_i Z_i`` separately."""
    H = ising_hamiltonian(L, h, periodic)
    dim = 2 ** L
    popcount = np.array([bin(i).count("1") for i in range(dim)])
    ws, vs = [], []
    for parity in (0, 1):
        idx = np.flatnonzero(popcount % 2 == parity)
        w, u = np.linalg.eigh(H[idx][:, idx].toarray())
        v = np.zeros((dim, idx.size))
        v[idx] = u
        ws.append(w)
        vs.append(v)
    w = np.concatenate(ws)
    v = np.concatenate(vs, axis=1)
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def _ising_ground_space(L: int, h: float, periodic: bool):
    if L <= 12:
        w, v = _ising_spectrum(L, h, periodic)
        p = _boltzmann_weights(w, 0.0)
        keep = p > 0
        return v[:, keep], p[keep]
    H = ising_hamiltonian(L, h, periodic)
    k = 4
    w, v = spla.eigsh(H, k=k, which="SA", tol=1e-12, v0=np.ones(H.shape[0]))
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    p = _boltzmann_weights(w, 0.0)
    keep = p > 0
    if keep.sum() == k:
        raise RuntimeError("ground-space degeneracy exceeds the number of computed eigenpairs")
    return v[:, keep], p[keep]


def _reduce_vectors(v: np.ndarray, p: np.ndarray, L: int, sites) -> np.ndarray:
    sites = list(sites)
    rest = [i for i in range(L) if i not in sites]
    n = v.shape[1]
    a = v.reshape((2,) * L + (n,))
    a = a.transpose(sites + rest + [L]).reshape(2 ** len(sites), -1)
    a = a * np.tile(np.sqrt(p), 2 ** len(rest))
    return (a @ a.conj().T).astype(complex)


def central_sites(L: int, n: int) -> list[int]:
    start = (L - n) // 2
    return list(range(start, start + n))


def ising_rdm(spec: IsingSpec, sites=None) -> np.ndarray:
    """Reduced density matrix of the Gibbs (or ground) state on ``sites``.

    ``sites`` may be an int ``n`` (the ``n`` central sites) or an explicit
    list of site indices; default is the three central sites.
    """
    if sites is None:
        sites = 3
    if isinstance(sites, (int, np.integer)):
        sites = central_sites(spec.L, int(sites))
    sites = sorted(int(s) for s in sites)
    if not sites or sites[0] < 0 or sites[-1] >= spec.L or len(set(sites)) != len(sites):
        raise ValueError(f"sites {sites} not within a chain of length {spec.L}")
    if spec.T == 0:
        v, p = _ising_ground_space(spec.L, spec.h, spec.periodic)
    else:
        w, v = _ising_spectrum(spec.L, spec.h, spec.periodic)
        p = _boltzmann_weights(w, spec.T)
        keep = p > 1e-300
        v, p = v[:, keep], p[keep]
    rdm = _reduce_vectors(v, p, spec.L, sites)
    return (rdm + rdm.conj().T) / 2


def ising_single_site_spectrum(L: int, h: float, periodic: bool = True) -> np.ndarray:
    """Ascending eigenvalues of the central single-site ground-state RDM."""
    return np.linalg.eigvalsh(ising_rdm(IsingSpec(L, h, periodic, 0.0), 1))


def ising_product_spectrum(single_site: np.ndarray, n: int = 3) -> np.ndarray:
    """Eigenvalues of ``rho_1^{(x) n}``, descending."""
    w = np.asarray(single_site, dtype=float)
    out = w
    for _ in range(n - 1):
        out = np.kron(out, w)
    return np.sort(out)[::-1]


def rdm_from_state(rho: np.ndarray, L: int, sites) -> np.ndarray:
    return partial_trace(rho, (2,) * L, sites)
