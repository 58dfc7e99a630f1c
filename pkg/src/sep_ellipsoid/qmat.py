"""Dense Hermitian linear algebra for small multipartite operators.

Matrices are plain ``numpy.ndarray`` objects.  Subsystem dimensions travel
alongside them as a tuple ``dims`` with ``prod(dims) == D``.  Subsystem 0 is
the slowest-varying index of the composite basis, i.e. the ordering produced
by ``numpy.kron``.  Subsystem indices in this package are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, NamedTuple, Sequence

import numpy as np

HERMITIAN_ATOL = 1e-8
PSD_ATOL = 1e-10
RANK_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when an operator does not match the declared subsystem dimensions."""


class NotPSDError(ValueError):
    """Raised when an operator expected to be positive semidefinite is not."""


def hermitian(x, dims: Sequence[int] | None = None, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Return ``(x + x^dagger)/2`` as a complex array, validating shape and asymmetry.

    Raises ``ValueError`` if ``x`` is not square or its anti-Hermitian part
    exceeds ``atol`` (absolute, entrywise), and ``DimensionError`` if ``dims``
    is given and does not multiply to the matrix dimension.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {x.shape}")
    asym = np.max(np.abs(x - x.conj().T), initial=0.0)
    if asym > atol:
        raise ValueError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    if dims is not None:
        check_dims(x, dims)
    return (x + x.conj().T) / 2


def check_dims(x: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionError(f"invalid subsystem dimensions {dims}")
    if int(np.prod(dims)) != x.shape[0]:
        raise DimensionError(f"dims {dims} do not match matrix dimension {x.shape[0]}")
    return dims


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more operators, first factor slowest."""
    if not ops:
        raise ValueError("kron needs at least one operator")
    return reduce(np.kron, (np.asarray(o, dtype=complex) for o in ops))


def _normalize_subset(subset: Iterable[int], m: int) -> list[int]:
    out = sorted(set(int(i) for i in subset))
    if any(i < 0 or i >= m for i in out):
        raise DimensionError(f"subsystem indices {out} out of range for {m} subsystems")
    return out


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not in ``keep``.

    The kept subsystems appear in ascending index order in the result.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = check_dims(rho, dims)
    m = len(dims)
    keep = _normalize_subset(keep, m)
    if not keep:
        raise DimensionError("keep must name at least one subsystem")
    drop = [i for i in range(m) if i not in keep]
    t = rho.reshape(dims + dims)
    # bra/ket pairs first, then trace over the dropped ones in one reshape
    perm = keep + drop + [m + i for i in keep] + [m + i for i in drop]
    dk = int(np.prod([dims[i] for i in keep]))
    dd = int(np.prod([dims[i] for i in drop])) if drop else 1
    t = t.transpose(perm).reshape(dk, dd, dk, dd)
    return np.einsum("arbr->ab", t)


def partial_transpose(rho: np.ndarray, dims: Sequence[int], subset: Iterable[int]) -> np.ndarray:
    """Transpose the subsystems listed in ``subset``."""
    rho = np.asarray(rho, dtype=complex)
    dims = check_dims(rho, dims)
    m = len(dims)
    perm = list(range(2 * m))
    for s in _normalize_subset(subset, m):
        perm[s], perm[m + s] = perm[m + s], perm[s]
    return rho.reshape(dims + dims).transpose(perm).reshape(rho.shape)


def permute_subsystems(x: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new subsystem ``j`` is old subsystem ``order[j]``."""
    x = np.asarray(x)
    dims = check_dims(x, dims)
    m = len(dims)
    order = [int(i) for i in order]
    if sorted(order) != list(range(m)):
        raise DimensionError(f"{order} is not a permutation of {m} subsystems")
    return x.reshape(dims + dims).transpose(order + [m + i for i in order]).reshape(x.shape)


class EigenSystem(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    rank_tol: float

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def rank_threshold(eigenvalues: np.ndarray, rank_tol: float = RANK_TOL) -> float:
    """Eigenvalues strictly above this threshold count towards the rank."""
    scale = np.max(np.abs(eigenvalues), initial=0.0)
    return rank_tol * scale if scale > 0 else rank_tol


def eigh(h: np.ndarray, rank_tol: float = RANK_TOL) -> EigenSystem:
    """Eigendecomposition with ascending eigenvalues and a numerical rank.

    Backed by LAPACK's divide-and-conquer Hermitian solver, which is
    deterministic for a fixed input on a fixed build.
    """
    h = np.asarray(h, dtype=complex)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"Hermitian eigensolver did not converge: {exc}") from exc
    rank = int(np.count_nonzero(w > rank_threshold(w, rank_tol)))
    return EigenSystem(w, v, rank, rank_tol)


def frobenius_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(x), "fro"))


@dataclass(frozen=True)
class GeneralizedPower:
    """``A^(-p)`` restricted to the support of ``A`` together with that support."""

    matrix: np.ndarray
    rank: int
    projector: np.ndarray


def _power_from_spectrum(w, v, p, rank_tol, scale):
    if np.min(w, initial=0.0) < -1e-8 * max(scale, 1e-300):
        raise NotPSDError(f"operator has eigenvalue {np.min(w):.3e}; not positive semidefinite")
    keep = w > rank_threshold(w, rank_tol)
    vk = v[:, keep]
    mat = (vk * w[keep] ** (-p)) @ vk.conj().T
    proj = vk @ vk.conj().T
    return GeneralizedPower(mat, int(keep.sum()), proj)


def gen_neg_power(a: np.ndarray, p: float, rank_tol: float = RANK_TOL) -> GeneralizedPower:
    """Generalized negative power: ``sum_i a_i^(-p) |a_i><a_i|`` over eigenvalues above tolerance.

    Parameters
    ----------
    a : ndarray
        Positive semidefinite operator.
    p : float
        Positive exponent.
    rank_tol : float
        Eigenvalues at or below ``rank_tol * max|a_i|`` are treated as zero.

    Returns
    -------
    GeneralizedPower
        ``matrix`` vanishes on the kernel of ``a``; ``projector`` is the
        orthogonal projector onto the retained eigenvectors and ``rank`` its
        dimension.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    a = np.asarray(a, dtype=complex)
    w, v = np.linalg.eigh(a)
    return _power_from_spectrum(w, v, p, rank_tol, frobenius_norm(a))


def project_full_rank(x: np.ndarray, projector_f: np.ndarray) -> np.ndarray:
    """``P_f X P_f``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != np.shape(projector_f):
        raise DimensionError(f"shape mismatch {x.shape} vs {np.shape(projector_f)}")
    return projector_f @ x @ projector_f


@dataclass(frozen=True)
class ProductState:
    """A tensor product ``factors[0] (x) factors[1] (x) ...`` of PSD operators.

    The factors need not have unit trace.  Validation happens at
    construction: each factor is Hermitian and PSD up to ``PSD_ATOL``.
    """

    factors: tuple

    def __init__(self, factors: Iterable[np.ndarray]):
        fs = []
        for f in factors:
            f = hermitian(f)
            lo = np.linalg.eigvalsh(f)[0]
            if lo < -PSD_ATOL:
                raise NotPSDError(f"product factor has eigenvalue {lo:.3e}")
            f.setflags(write=False)
            fs.append(f)
        if not fs:
            raise ValueError("a product state needs at least one factor")
        object.__setattr__(self, "factors", tuple(fs))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def assemble(self) -> np.ndarray:
        return kron(*self.factors)

    def eigensystem(self, rank_tol: float = RANK_TOL) -> EigenSystem:
        """Spectrum of the assembled operator built factor by factor.

        Eigenvalues are products of factor eigenvalues and eigenvectors are
        Kronecker products of factor eigenvectors, so no D x D
        diagonalization is needed.  Eigenvalues are returned ascending.
        """
        ws, vs = zip(*(np.linalg.eigh(f) for f in self.factors))
        w = reduce(np.kron, ws).real
        v = reduce(np.kron, vs)
        order = np.argsort(w, kind="stable")
        w, v = w[order], v[:, order]
        rank = int(np.count_nonzero(w > rank_threshold(w, rank_tol)))
        return EigenSystem(w, v, rank, rank_tol)

    def gen_neg_power(self, p: float, rank_tol: float = RANK_TOL) -> GeneralizedPower:
        es = self.eigensystem(rank_tol)
        return _power_from_spectrum(es.eigenvalues, es.eigenvectors, p, rank_tol, 1.0)

    def trace(self) -> float:
        return float(np.prod([np.trace(f).real for f in self.factors]))
