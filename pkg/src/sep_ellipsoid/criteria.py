"""Sufficient separability certificates built on separable ellipsoids.

Every criterion returns a :class:`CertificateOutcome`.  ``margin`` is the
criterion's left-hand side minus its right-hand side, so a negative margin
certifies.  An ``Inconclusive`` verdict never implies entanglement: the
radii ``c_m`` used here are lower bounds for ``m >= 3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qmat import (
    RANK_TOL,
    DimensionError,
    ProductState,
    frobenius_norm,
    hermitian,
    project_full_rank,
    rank_threshold,
)

CERTIFIED = "CertifiedSeparable"
INCONCLUSIVE = "Inconclusive"

SUPPORT_TOL = 1e-9
# margins within a few ulps of the boundary count as on the (closed) boundary
MARGIN_RTOL = 1e-12


@dataclass(frozen=True)
class CmBound:
    m: int
    dims: tuple
    value: float
    source: str  # BipartiteExact | QubitBound | QuditBound | Baseline


def c_m_bound(dims: Sequence[int]) -> CmBound:
    """Largest known lower bound on the separable-ball radius factor ``c_m``.

    ``c_2 = 1`` is exact for any bipartite dimensions.  For ``m >= 3`` equal
    qubits or equal qudits use the dedicated bounds, anything else falls back
    to the dimension-free ``2**(1 - m/2)``.
    """
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ValueError("dims must be nonempty")
    if any(d < 2 for d in dims):
        raise ValueError(f"every subsystem needs dimension >= 2, got {dims}")
    m = len(dims)
    if m < 2:
        raise ValueError("c_m needs at least two subsystems")
    if m == 2:
        return CmBound(m, dims, 1.0, "BipartiteExact")
    baseline = 2.0 ** (1 - m / 2)
    best, source = baseline, "Baseline"
    if len(set(dims)) == 1:
        d = dims[0]
        if d == 2:
            val, src = math.sqrt(54 / 17) * (2 / 3) ** (m / 2), "QubitBound"
        else:
            val, src = math.sqrt(d ** m / ((2 * d - 1) ** (m - 2) * (d * d - 1) + 1)), "QuditBound"
        if val > best:
            best, source = val, src
    return CmBound(m, dims, min(best, 1.0), source)


@dataclass
class CertificateOutcome:
    verdict: str
    criterion: str
    margin: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "criterion": self.criterion,
            "margin": _plain(self.margin),
            "diagnostics": {k: _plain(v) for k, v in self.diagnostics.items()},
        }


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int, bool, np.bool_)):
        return v.item() if hasattr(v, "item") else v
    return v


def _decide(margin: float, rhs: float, support_ok: bool = True) -> str:
    ok = support_ok and np.isfinite(margin) and margin <= MARGIN_RTOL * max(abs(rhs), 1.0)
    return CERTIFIED if ok else INCONCLUSIVE


def _check_rho(rho, D: int) -> np.ndarray:
    rho = hermitian(rho)
    if rho.shape[0] != D:
        raise DimensionError(f"state has dimension {rho.shape[0]}, reference has {D}")
    return rho


def ellipsoid_criterion(
    rho,
    prod: ProductState,
    rank_tol: float = RANK_TOL,
    support_tol: float | None = None,
    c: float | None = None,
) -> CertificateOutcome:
    """Is ``rho`` inside the separable ellipsoid centred on ``prod``?

    The tested quantity is ``|| prod^(-1/2) rho prod^(-1/2) - P_f ||_F``
    against ``c_m``, with generalized inverse powers when ``prod`` is
    singular.  In that case ``rho`` must also live on the support of
    ``prod``: ``||rho - P_f rho P_f||_F <= support_tol`` (default
    ``1e-9 * ||rho||_F``).
    """
    rho = _check_rho(rho, prod.dim)
    cm = c_m_bound(prod.dims).value if c is None else c
    gp = prod.gen_neg_power(0.5, rank_tol)
    delta = gp.matrix @ rho @ gp.matrix - gp.projector
    delta_norm = frobenius_norm(delta)
    leakage = frobenius_norm(rho - project_full_rank(rho, gp.projector))
    tol = SUPPORT_TOL * frobenius_norm(rho) if support_tol is None else support_tol
    support_ok = leakage <= tol
    margin = delta_norm - cm
    diag = {
        "delta_norm": delta_norm,
        "c_m": cm,
        "rank": gp.rank,
        "dim": prod.dim,
        "support_leakage": leakage,
        "support_tol": tol,
    }
    return CertificateOutcome(_decide(margin, cm, support_ok), "ellipsoid", margin, diag)


def ball_criterion(rho, prod: ProductState, c: float | None = None) -> CertificateOutcome:
    """Prior ball criterion ``||rho - prod||_F <= c_m * lambda_min(prod)``."""
    rho = _check_rho(rho, prod.dim)
    cm = c_m_bound(prod.dims).value if c is None else c
    es = prod.eigensystem()
    lam_min = float(es.eigenvalues[0])
    dist = frobenius_norm(rho - prod.assemble())
    diag = {"distance": dist, "lambda_min": lam_min, "c_m": cm, "rank": es.rank, "dim": prod.dim}
    if es.rank < prod.dim:
        diag["reason"] = "rank_deficient_reference"
        return CertificateOutcome(INCONCLUSIVE, "ball", dist, diag)
    radius = cm * lam_min
    margin = dist - radius
    diag["radius"] = radius
    return CertificateOutcome(_decide(margin, radius), "ball", margin, diag)


def trace_test(
    rho: np.ndarray,
    ref_inverse: np.ndarray,
    projector: np.ndarray,
    rank: int,
    cm: float,
    support_tol: float | None = None,
    criterion: str = "trace",
) -> CertificateOutcome:
    """Scaling-optimized test ``Tr[(rho R)^2] / Tr[rho R]^2 <= 1/(D_f - c^2)``.

    ``ref_inverse`` is the (generalized) inverse ``R`` of the reference, and
    ``projector``/``rank`` describe its support.  Used by every trace-type
    criterion in this module.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        m = rho @ ref_inverse
        t1 = float(np.trace(m).real)
        t2 = float(np.trace(m @ m).real)
    leakage = frobenius_norm(rho - project_full_rank(rho, projector))
    tol = SUPPORT_TOL * frobenius_norm(rho) if support_tol is None else support_tol
    rhs_den = rank - cm * cm
    diag = {"c_m": cm, "rank": rank, "dim": rho.shape[0], "support_leakage": leakage, "support_tol": tol}
    if not (np.isfinite(t1) and np.isfinite(t2)) or t1 <= 0:
        diag["reason"] = "nonpositive_trace" if t1 <= 0 else "overflow"
        return CertificateOutcome(INCONCLUSIVE, criterion, math.inf, diag)
    if rhs_den <= 0:
        # the ball of radius c around P_f already covers every ray in the support
        diag.update({"trace_ratio": t2 / (t1 * t1), "threshold": math.inf, "alpha": t1 / t2})
        verdict = CERTIFIED if leakage <= tol else INCONCLUSIVE
        return CertificateOutcome(verdict, criterion, -math.inf, diag)
    ratio = t2 / (t1 * t1)
    rhs = 1.0 / rhs_den
    margin = ratio - rhs
    diag.update({"trace_ratio": ratio, "threshold": rhs, "alpha": t1 / t2 if t2 > 0 else math.inf})
    return CertificateOutcome(_decide(margin, rhs, leakage <= tol), criterion, margin, diag)


def trace_criterion(
    rho,
    prod: ProductState,
    rank_tol: float = RANK_TOL,
    support_tol: float | None = None,
    c: float | None = None,
) -> CertificateOutcome:
    """Trace criterion around a (possibly singular) product reference.

    The diagnostics carry the optimal rescaling ``alpha = Tr[rho P^-1] /
    Tr[(rho P^-1)^2]`` for which ``alpha * rho`` sits deepest in the
    ellipsoid.
    """
    rho = _check_rho(rho, prod.dim)
    cm = c_m_bound(prod.dims).value if c is None else c
    gp = prod.gen_neg_power(1.0, rank_tol)
    return trace_test(rho, gp.matrix, gp.projector, gp.rank, cm, support_tol)


# ---------------------------------------------------------------------------
# Criteria around general (k-)separable operators
# ---------------------------------------------------------------------------

def _pivot_order(dec, rank_tol):
    """Term indices sorted by descending smallest eigenvalue, plus their eigensystems."""
    systems = [t.eigensystem(dec.dims, rank_tol) for t in dec.terms]
    order = sorted(range(len(systems)), key=lambda i: (-systems[i].eigenvalues[0], i))
    return order, systems


def _decomposition_test(rho, dec, pivot, rank_tol, support_tol, criterion, c_of_term):
    if not dec.terms:
        raise ValueError("empty decomposition")
    rho = _check_rho(rho, dec.dim)
    assembled = dec.assembled
    order, systems = _pivot_order(dec, rank_tol)
    if pivot is not None:
        if not 0 <= pivot < len(dec.terms):
            raise IndexError(f"pivot {pivot} out of range")
        order = [pivot]
    delta = rho - assembled
    best = None
    for i in order:
        term = dec.terms[i]
        es = systems[i]
        w, v = es.eigenvalues, es.eigenvectors
        keep = w > rank_threshold(w, rank_tol)
        vk = v[:, keep]
        inv = (vk / w[keep]) @ vk.conj().T
        proj = vk @ vk.conj().T
        # Delta + K_i = rho - sum_{j != i} K_j
        local = delta + term.operator(dec.dims)
        out = trace_test(local, inv, proj, int(keep.sum()), c_of_term(term), support_tol, criterion)
        out.diagnostics.update(
            {
                "pivot": i,
                "pivot_lambda_min": float(w[0]),
                "pivot_full_rank": bool(keep.all()),
                "delta_norm": frobenius_norm(delta),
            }
        )
        if out.certified:
            return out
        if best is None or _rank_key(out) < _rank_key(best):
            best = out
    return best


def _rank_key(out):
    d = out.diagnostics
    return (d["support_leakage"] > d["support_tol"], out.margin)


def neighborhood_criterion(
    rho,
    dec,
    pivot: int | None = None,
    rank_tol: float = RANK_TOL,
    support_tol: float | None = None,
) -> CertificateOutcome:
    """Full separability from a nearby separable operator ``K = sum_i K_i``.

    With ``Delta = rho - K`` some pivot term ``K_i`` must satisfy
    ``Tr[(Delta K_i^-1 + I)^2] / Tr[Delta K_i^-1 + I]^2 <= 1/(D_i - c_m^2)``.
    Singular pivots use generalized inverses and require ``Delta`` to live on
    their support.  Pivots are tried in order of decreasing smallest
    eigenvalue unless ``pivot`` is given; the first success is returned,
    otherwise the outcome with the smallest margin.
    """
    if dec.k != len(dec.dims):
        raise ValueError("full separability needs every term split into single subsystems")
    cm = c_m_bound(dec.dims).value
    return _decomposition_test(rho, dec, pivot, rank_tol, support_tol, "neighborhood", lambda t: cm)


def k_separability_criterion(
    rho,
    dec,
    k: int,
    pivot: int | None = None,
    rank_tol: float = RANK_TOL,
    support_tol: float | None = None,
) -> CertificateOutcome:
    """k-separability from a nearby k-separable operator; ``k = 2`` is biseparability.

    The radius for a pivot term is ``c_k`` evaluated on that term's block
    dimensions.  The criterion tag is ``"bisep"`` for ``k = 2``.
    """
    if not dec.terms:
        raise ValueError("empty decomposition")
    if any(len(t.partition.blocks) != k for t in dec.terms):
        raise ValueError(f"every term must be a product over exactly {k} blocks")
    name = "bisep" if k == 2 else ("neighborhood" if k == len(dec.dims) else f"{k}-sep")
    return _decomposition_test(
        rho,
        dec,
        pivot,
        rank_tol,
        support_tol,
        name,
        lambda t: c_m_bound(t.partition.block_dims(dec.dims)).value,
    )
