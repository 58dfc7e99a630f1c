"""Local search for nearby (k-)separable operators.

A candidate ``K = sum_j w_j^2 embed(G_j1 G_j1^+, G_j2 G_j2^+, ...)`` is
parameterized by unconstrained reals (each weight and the real/imaginary
parts of every complex ``G``), so every iterate is a valid decomposition by
construction.  The Frobenius residual is minimized with a trust-region
least-squares solver using an analytic Jacobian; restarts are independent and
seeded from a single ``SeedSequence``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .decomposition import PartitionSpec, SeparableDecomposition, Term
from .qmat import ProductState, frobenius_norm, hermitian, partial_trace


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for :func:`closest_separable_state`.

    ``terms`` is the number of free product terms ``u``.  ``max_iters`` caps
    residual evaluations per local run.  ``anchor_weights`` is the schedule
    of pivot weights tried by the anchored refinement in the certification
    pipeline.
    """

    terms: int = 8
    max_iters: int = 300
    restarts: int = 3
    seed: int = 0
    step_tolerance: float = 1e-12
    distance_tolerance: float = 1e-11
    anchor_weights: tuple = (0.5, 0.3, 0.15)
    jobs: int = 1

    def __post_init__(self):
        if self.terms < 1:
            raise ValueError("need at least one ansatz term")
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be positive")
        if self.step_tolerance <= 0 or self.distance_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if any(not 0 < w < 1 for w in self.anchor_weights):
            raise ValueError("anchor weights must lie in (0, 1)")


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("SEP_ELLIPSOID_JOBS", "1")))
    except ValueError:
        return 1


@dataclass
class ClosestSeparableResult:
    decomposition: SeparableDecomposition
    distance: float
    converged: bool
    initial_distance: float
    objective: float
    nfev: int
    restart_distances: list = field(default_factory=list)


class _Ansatz:
    def __init__(self, dims: Sequence[int], partitions: Sequence[PartitionSpec]):
        self.dims = tuple(dims)
        self.D = int(np.prod(self.dims))
        self.partitions = list(partitions)
        self.block_dims = [p.block_dims(self.dims) for p in self.partitions]
        self.size = sum(1 + sum(2 * d * d for d in bd) for bd in self.block_dims)
        iu = np.triu_indices(self.D)
        self._iu = iu
        self._scale = np.where(iu[0] == iu[1], 1.0, math.sqrt(2.0))

    def unpack(self, x):
        out, i = [], 0
        for bd in self.block_dims:
            w = x[i]
            i += 1
            gs = []
            for d in bd:
                n = d * d
                gs.append((x[i:i + n] + 1j * x[i + n:i + 2 * n]).reshape(d, d))
                i += 2 * n
            out.append((w, gs))
        return out

    def pack(self, terms) -> np.ndarray:
        parts = []
        for w, gs in terms:
            parts.append([w])
            for g in gs:
                parts.append(g.real.ravel())
                parts.append(g.imag.ravel())
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])

    def model(self, x) -> np.ndarray:
        K = np.zeros((self.D, self.D), dtype=complex)
        for (w, gs), part in zip(self.unpack(x), self.partitions):
            K += w * w * part.embed([g @ g.conj().T for g in gs], self.dims)
        return K

    def jacobian(self, x) -> np.ndarray:
        """``dK/dx_p`` stacked as an array of shape ``(size, D, D)``."""
        cols = []
        for (w, gs), part in zip(self.unpack(x), self.partitions):
            factors = [g @ g.conj().T for g in gs]
            cols.append((2 * w * part.embed(factors, self.dims))[None])
            for c, g in enumerate(gs):
                d = g.shape[0]
                basis = np.eye(d * d).reshape(d * d, d, d)
                # linear map from block operator c to the embedded product
                lin = np.stack(
                    [part.embed(factors[:c] + [e] + factors[c + 1:], self.dims).ravel() for e in basis],
                    axis=1,
                )
                gh = g.conj().T
                for unit in (1.0, 1j):
                    da = unit * basis @ gh
                    da = da + da.conj().transpose(0, 2, 1)
                    cols.append((w * w) * (lin @ da.reshape(d * d, -1).T).T.reshape(-1, self.D, self.D))
        return np.concatenate(cols, axis=0)

    def vec(self, m: np.ndarray) -> np.ndarray:
        """Real vector whose Euclidean norm equals the Frobenius norm of Hermitian ``m``."""
        sel = m[..., self._iu[0], self._iu[1]] * self._scale
        return np.concatenate([sel.real, sel.imag], axis=-1)

    def decomposition(self, x, anchor: Term | None = None) -> SeparableDecomposition:
        terms = [] if anchor is None else [anchor]
        for (w, gs), part in zip(self.unpack(x), self.partitions):
            factors = [g @ g.conj().T for g in gs]
            terms.append(Term(float(w * w), ProductState(factors), part))
        return SeparableDecomposition(self.dims, terms)


def natural_product_over(rho: np.ndarray, dims: Sequence[int], partition: PartitionSpec) -> list[np.ndarray]:
    """Block reduced states of ``rho``, each rescaled to trace ``Tr(rho)**(1/k)``."""
    tr = float(np.trace(rho).real)
    k = partition.k
    scale = tr ** (1.0 / k - 1.0) if tr > 0 else 1.0
    return [scale * partial_trace(rho, dims, b) for b in partition.blocks]


def _psd_sqrt(a):
    w, v = np.linalg.eigh(hermitian(a))
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def _initial_point(ans: _Ansatz, rho, target_trace, rng, natural_start: bool):
    u = len(ans.partitions)
    terms = []
    for j, (part, bd) in enumerate(zip(ans.partitions, ans.block_dims)):
        if natural_start and j == 0:
            factors = natural_product_over(rho, ans.dims, part)
            tr = np.prod([np.trace(f).real for f in factors])
            gs = [_psd_sqrt(f) for f in factors]
            w = math.sqrt(max(target_trace, 1e-12) * (1 - 1e-2) / max(tr, 1e-300)) if u > 1 else math.sqrt(target_trace / max(tr, 1e-300))
            terms.append((w, gs))
            continue
        gs = []
        for d in bd:
            g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            g /= math.sqrt(np.trace(g @ g.conj().T).real)
            gs.append(g)
        share = 1e-2 / max(u - 1, 1) if natural_start else 1.0 / u
        terms.append((math.sqrt(max(target_trace, 1e-12) * share), gs))
    return ans.pack(terms)


def _local_fit(args):
    dims, partitions, rho, anchor_op, weight_op, x0, cfg = args
    ans = _Ansatz(dims, partitions)
    target = rho - anchor_op if anchor_op is not None else rho

    if weight_op is None:
        def fun(x):
            return ans.vec(ans.model(x) - target)

        def jac(x):
            return ans.vec(ans.jacobian(x)).T
    else:
        def fun(x):
            return ans.vec(weight_op @ (ans.model(x) - target) @ weight_op)

        def jac(x):
            j = ans.jacobian(x)
            return ans.vec(weight_op @ j @ weight_op).T

    f0 = float(np.linalg.norm(fun(x0)))
    res = least_squares(
        fun,
        x0,
        jac=jac,
        method="trf",
        xtol=cfg.step_tolerance,
        ftol=cfg.step_tolerance,
        gtol=cfg.step_tolerance,
        max_nfev=cfg.max_iters,
    )
    return res.x, float(np.linalg.norm(res.fun)), f0, res.status > 0, int(res.nfev)


def _partitions_for(dims, partitions, u) -> list[PartitionSpec]:
    if isinstance(partitions, PartitionSpec):
        partitions = [partitions]
    partitions = list(partitions)
    if not partitions:
        raise ValueError("need at least one partition")
    for p in partitions:
        if p.m != len(dims):
            raise ValueError(f"partition {p} does not cover {len(dims)} subsystems")
    # round-robin distribution of terms over the allowed partitions
    return [partitions[j % len(partitions)] for j in range(u)]


def closest_separable_state(
    rho,
    dims: Sequence[int],
    partitions,
    cfg: OptimizerConfig | None = None,
    anchor: Term | None = None,
    weighted: bool = False,
) -> ClosestSeparableResult:
    """Search for ``K`` minimizing ``||rho - K||_F`` over ``u``-term (k-)separable operators.

    Parameters
    ----------
    rho : ndarray
        Target density matrix.
    dims : sequence of int
        Subsystem dimensions.
    partitions : PartitionSpec or sequence of PartitionSpec
        Allowed product structures; ansatz terms cycle through them.  A single
        all-singletons partition gives full separability.
    cfg : OptimizerConfig
        Ansatz size, iteration caps, restarts and seed.
    anchor : Term, optional
        A fixed term added to ``K`` and returned as term 0 of the
        decomposition.  Used to force one well-conditioned full-rank
        component.
    weighted : bool
        With an anchor, minimize ``||A^(-1/2) (rho - K) A^(-1/2)||_F`` with
        ``A`` the anchor operator instead of the plain Frobenius residual.
        This is the quantity the ellipsoid test around the anchor bounds.

    Returns
    -------
    ClosestSeparableResult
        Best decomposition over all restarts.  ``distance`` is always the
        Frobenius distance ``||rho - K||_F``; ``objective`` is the minimized
        quantity.  ``converged`` is False when the best run hit the iteration
        cap.

    Restart 0 starts from the natural product state (block reduced states
    over the first partition), the rest from random points.
    """
    cfg = cfg or OptimizerConfig()
    rho = hermitian(rho, dims)
    dims = tuple(dims)
    parts = _partitions_for(dims, partitions, cfg.terms)

    anchor_op = weight_op = None
    target_trace = float(np.trace(rho).real)
    if anchor is not None:
        anchor_op = anchor.operator(dims)
        target_trace -= float(np.trace(anchor_op).real)
        if weighted:
            es = anchor.eigensystem(dims)
            if es.rank < es.eigenvalues.size:
                raise ValueError("weighted objective needs a full-rank anchor")
            v = es.eigenvectors
            weight_op = (v / np.sqrt(es.eigenvalues)) @ v.conj().T

    ans = _Ansatz(dims, parts)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    base = rho if anchor_op is None else rho - anchor_op
    starts = [
        _initial_point(ans, base, target_trace, np.random.default_rng(s), natural_start=(i == 0))
        for i, s in enumerate(seeds)
    ]
    jobs = [(dims, parts, rho, anchor_op, weight_op, x0, cfg) for x0 in starts]

    n_workers = min(cfg.jobs, len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_local_fit, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_local_fit(job))
            if results[-1][1] <= cfg.distance_tolerance:
                break

    # first restart within tolerance, else the best; identical for any worker count
    hits = [i for i, r in enumerate(results) if r[1] <= cfg.distance_tolerance]
    best = hits[0] if hits else min(range(len(results)), key=lambda i: (results[i][1], i))
    x, obj, _, converged, _ = results[best]
    dec = ans.decomposition(x, anchor)
    distance = frobenius_norm(rho - dec.assembled)
    initial = frobenius_norm(rho - (ans.model(starts[0]) + (anchor_op if anchor_op is not None else 0)))
    return ClosestSeparableResult(
        decomposition=dec,
        distance=distance,
        converged=bool(converged or obj <= cfg.distance_tolerance),
        initial_distance=initial,
        objective=obj,
        nfev=sum(r[4] for r in results),
        restart_distances=[r[1] for r in results],
    )
