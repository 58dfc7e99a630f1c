"""End-to-end separability certification and threshold scans.

The pipeline tries references in order of cost:

1. the natural product state (tensor product of single-subsystem marginals)
   with the trace criterion, when full separability is asked for;
2. a locally optimized nearby separable (or k-separable) operator ``K`` with
   the neighborhood / k-separability criterion, pivoting over all terms;
3. anchored refinements, where one term is pinned to a scaled full-rank
   product of block marginals and the rest is fitted in the metric of the
   ellipsoid around it.

Every full-separability verdict is cross-checked against the PPT condition
on all bipartitions.
"""

from __future__ import annotations

import hashlib
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .criteria import (
    CERTIFIED,
    INCONCLUSIVE,
    CertificateOutcome,
    ball_criterion,
    ellipsoid_criterion,
    k_separability_criterion,
    neighborhood_criterion,
    trace_criterion,
)
from .decomposition import (
    PartitionSpec,
    SeparableDecomposition,
    Term,
    bipartitions,
    full_partition,
    k_partitions,
)
from .optimize import (
    ClosestSeparableResult,
    OptimizerConfig,
    closest_separable_state,
    natural_product_over,
)
from .qmat import ProductState, check_dims, hermitian, partial_transpose

NEGATIVITY_TOL = 1e-9
PPT, NPT = "PPT", "NPT"

__all__ = [
    "CertificationReport",
    "ClosestSeparableResult",
    "NoBracketError",
    "OptimizerConfig",
    "PartitionSpec",
    "ScanResult",
    "SeparableDecomposition",
    "certify",
    "closest_separable_state",
    "natural_product_state",
    "negativity",
    "negativities",
    "ppt_outcome",
    "state_digest",
    "threshold_scan",
]


def natural_product_state(rho, dims: Sequence[int]) -> ProductState:
    """Product of the single-subsystem marginals of ``rho``.

    Each factor is rescaled to trace ``Tr(rho)**(1/m)`` so the assembled
    product has the same trace as ``rho``.
    """
    rho = hermitian(rho, dims)
    return ProductState(natural_product_over(rho, dims, full_partition(len(dims))))


def negativity(rho, dims: Sequence[int], bipartition: PartitionSpec) -> float:
    """Sum of the absolute values of the negative eigenvalues of the partial transpose."""
    if bipartition.k != 2:
        raise ValueError(f"negativity needs a bipartition, got {bipartition.k} blocks")
    rho = hermitian(rho, dims)
    w = np.linalg.eigvalsh(partial_transpose(rho, dims, bipartition.blocks[0]))
    return float(np.clip(-w, 0.0, None).sum())


def negativities(rho, dims: Sequence[int]) -> dict[str, float]:
    return {str(b): negativity(rho, dims, b) for b in bipartitions(len(dims))}


def ppt_outcome(rho, dims: Sequence[int], tol: float = NEGATIVITY_TOL) -> CertificateOutcome:
    """PPT check over every bipartition, shaped like a certificate for scans.

    The verdict is ``"PPT"`` or ``"NPT"``; PPT is necessary for separability,
    not sufficient, so it never reads as ``CertifiedSeparable``.
    """
    neg = negativities(rho, dims)
    worst = max(neg.values())
    return CertificateOutcome(PPT if worst <= tol else NPT, "ppt", worst - tol, dict(neg))


def state_digest(rho: np.ndarray, dims: Sequence[int] | None = None) -> str:
    """SHA-256 of the exchange-format serialization of ``rho``."""
    from .io import dumps_matrix

    return hashlib.sha256(dumps_matrix(rho, dims).encode()).hexdigest()


@dataclass
class StageResult:
    name: str
    outcome: CertificateOutcome | None = None
    distance: float | None = None
    converged: bool | None = None
    note: str | None = None

    def to_dict(self) -> dict:
        d = {"name": self.name}
        if self.outcome is not None:
            d["outcome"] = self.outcome.to_dict()
        if self.distance is not None:
            d["distance"] = float(self.distance)
        if self.converged is not None:
            d["converged"] = bool(self.converged)
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class CertificationReport:
    input_digest: str
    dims: tuple
    k: int
    stages: list
    verdict: str
    criterion: str | None
    distance: float | None
    negativity: dict
    decomposition: SeparableDecomposition | None = None
    elapsed: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    def to_dict(self, timing: bool = False, decomposition: bool = False) -> dict:
        """Plain-data view; timing is left out by default so reports are reproducible byte for byte."""
        d = {
            "input_digest": self.input_digest,
            "dims": list(self.dims),
            "k": self.k,
            "verdict": self.verdict,
            "criterion": self.criterion,
            "distance": None if self.distance is None else float(self.distance),
            "negativity": {k: float(v) for k, v in self.negativity.items()},
            "stages": [s.to_dict() for s in self.stages],
        }
        if decomposition and self.decomposition is not None:
            d["decomposition"] = self.decomposition.to_dict()
        if timing:
            d["elapsed"] = {k: float(v) for k, v in self.elapsed.items()}
        return d


def _check_state(rho, dims):
    rho = hermitian(rho)
    dims = check_dims(rho, dims)
    if abs(np.trace(rho).real - 1) > 1e-8:
        raise ValueError(f"state has trace {np.trace(rho).real:.12g}, expected 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -1e-9:
        raise ValueError(f"state is not positive semidefinite (eigenvalue {lo:.3e})")
    return rho, dims


def _partitions(m: int, k: int) -> list[PartitionSpec]:
    if k == m:
        return [full_partition(m)]
    if k == 2:
        return bipartitions(m)
    return k_partitions(m, k)


def _decomposition_criterion(rho, dec, k, m):
    if k == m:
        return neighborhood_criterion(rho, dec)
    return k_separability_criterion(rho, dec, k)


def certify(
    rho,
    dims: Sequence[int],
    k: int | None = None,
    cfg: OptimizerConfig | None = None,
    negativity_tol: float = NEGATIVITY_TOL,
) -> CertificationReport:
    """Try to prove that ``rho`` is ``k``-separable (default: fully separable).

    Returns a report of every stage attempted.  The verdict is
    ``CertifiedSeparable`` only if some stage produced a certificate and, for
    full separability, ``rho`` is PPT across every bipartition.
    """
    cfg = cfg or OptimizerConfig()
    rho, dims = _check_state(rho, dims)
    m = len(dims)
    k = m if k is None else int(k)
    if not 2 <= k <= m:
        raise ValueError(f"k must lie in [2, {m}], got {k}")

    clock = time.perf_counter
    elapsed = {}
    t0 = clock()
    neg = negativities(rho, dims)
    npt = max(neg.values(), default=0.0) > negativity_tol
    stages: list[StageResult] = []
    best_distance = None
    best_dec = None
    winner = None

    if k == m:
        t = clock()
        out = trace_criterion(rho, natural_product_state(rho, dims))
        stages.append(StageResult("natural_product", out))
        elapsed["natural_product"] = clock() - t
        if out.certified:
            winner = out

    parts = _partitions(m, k)
    if winner is None and k == m and npt:
        stages.append(StageResult("optimizer", note="skipped: state is NPT, hence entangled"))
    elif winner is None:
        t = clock()
        res = closest_separable_state(rho, dims, parts, cfg)
        out = _decomposition_criterion(rho, res.decomposition, k, m)
        stages.append(StageResult("optimizer", out, res.distance, res.converged))
        elapsed["optimizer"] = clock() - t
        best_distance = res.distance
        if out.certified:
            winner, best_dec = out, res.decomposition
        else:
            best_dec = res.decomposition

        for weight in cfg.anchor_weights if winner is None else ():
            for part in parts:
                factors = natural_product_over(rho, dims, part)
                try:
                    anchor = Term(weight, ProductState(factors), part)
                    t = clock()
                    res = closest_separable_state(rho, dims, parts, cfg, anchor=anchor, weighted=True)
                except ValueError as exc:
                    stages.append(StageResult(f"anchored[{weight:g},{part}]", note=f"skipped: {exc}"))
                    continue
                out = _decomposition_criterion(rho, res.decomposition, k, m)
                name = f"anchored[{weight:g},{part}]"
                stages.append(StageResult(name, out, res.distance, res.converged))
                elapsed[name] = clock() - t
                if out.certified:
                    winner, best_dec = out, res.decomposition
                    break
            if winner is not None:
                break

    verdict = CERTIFIED if winner is not None else INCONCLUSIVE
    if verdict == CERTIFIED and k == m and npt:
        # unreachable for a sound criterion; kept as a hard guard
        verdict = INCONCLUSIVE
        stages.append(StageResult("soundness_guard", note="certificate rejected: state is NPT"))
        winner = None
    elapsed["total"] = clock() - t0
    return CertificationReport(
        input_digest=state_digest(rho, dims),
        dims=dims,
        k=k,
        stages=stages,
        verdict=verdict,
        criterion=None if winner is None else winner.criterion,
        distance=best_distance,
        negativity=neg,
        decomposition=best_dec,
        elapsed=elapsed,
    )


# ---------------------------------------------------------------------------
# Threshold scans
# ---------------------------------------------------------------------------

class NoBracketError(ValueError):
    """Both ends of a scan interval give the same verdict."""

    def __init__(self, message, probes):
        super().__init__(message)
        self.probes = probes


_PASSING = {CERTIFIED, PPT}


@dataclass
class Probe:
    param: float
    verdict: str
    margin: float
    criterion: str

    @property
    def passed(self) -> bool:
        return self.verdict in _PASSING


@dataclass
class ScanResult:
    threshold: float
    probes: list
    certified_side: str  # "upper" or "lower"
    monotone: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("param,verdict,margin,criterion\n")
        for p in sorted(self.probes, key=lambda p: p.param):
            buf.write(f"{p.param!r},{p.verdict},{p.margin!r},{p.criterion}\n")
        return buf.getvalue()


def criterion_for(name: str, dims: Sequence[int], cfg: OptimizerConfig | None = None) -> Callable:
    """Map a selector name to ``rho -> CertificateOutcome``.

    ``ellipsoid``, ``trace`` and ``ball`` use the state's natural product as
    reference; ``ppt`` checks all bipartitions; ``pipeline`` and ``bisep``
    run :func:`certify` for full separability and biseparability.
    """
    dims = tuple(dims)
    simple = {"ellipsoid": ellipsoid_criterion, "trace": trace_criterion, "ball": ball_criterion}
    if name in simple:
        fn = simple[name]
        return lambda rho: fn(rho, natural_product_state(rho, dims))
    if name == "ppt":
        return lambda rho: ppt_outcome(rho, dims)
    if name in ("pipeline", "bisep"):
        k = len(dims) if name == "pipeline" else 2

        def run(rho):
            rep = certify(rho, dims, k, cfg)
            margins = [s.outcome.margin for s in rep.stages if s.outcome is not None]
            return CertificateOutcome(rep.verdict, name, min(margins, default=float("inf")))

        return run
    raise ValueError(f"unknown criterion {name!r}")


def threshold_scan(
    family: Callable[[float], np.ndarray],
    interval: tuple[float, float],
    criterion: Callable[[np.ndarray], CertificateOutcome],
    bisect_tol: float = 1e-3,
    jobs: int = 1,
) -> ScanResult:
    """Locate where ``criterion`` starts to pass along a one-parameter family.

    The verdict is assumed monotone in the parameter.  The interval ends
    must disagree, otherwise :class:`NoBracketError` is raised.  Returns the
    parameter on the passing side of the final bracket, so the returned
    value always passes.  With ``jobs > 1`` each round probes ``jobs``
    evenly spaced interior points concurrently.  Post hoc, ``monotone``
    reports whether verdicts and margins are consistent along the
    parameter.
    """
    lo, hi = map(float, interval)
    if not lo < hi:
        raise ValueError("interval must satisfy lo < hi")
    if bisect_tol <= 0:
        raise ValueError("bisect_tol must be positive")
    probes: list[Probe] = []

    def probe(x):
        out = criterion(family(x))
        return Probe(x, out.verdict, float(out.margin), out.criterion)

    ends = [probe(lo), probe(hi)]
    probes.extend(ends)
    if ends[0].passed == ends[1].passed:
        state = "pass" if ends[0].passed else "fail"
        raise NoBracketError(f"both ends of [{lo}, {hi}] {state}", probes)
    upper = ends[1].passed
    a, b = lo, hi  # invariant: verdict(a) != verdict(b)
    pool = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        while b - a > bisect_tol:
            n = max(1, jobs)
            xs = [a + (b - a) * (i + 1) / (n + 1) for i in range(n)]
            batch = list(pool.map(probe, xs)) if pool else [probe(x) for x in xs]
            probes.extend(batch)
            pts = [(a, not upper)] + [(p.param, p.passed) for p in batch] + [(b, upper)]
            for (x0, v0), (x1, v1) in zip(pts, pts[1:]):
                if v0 != v1:
                    a, b = x0, x1
                    break
    finally:
        if pool:
            pool.shutdown()
    threshold = b if upper else a
    return ScanResult(threshold, probes, "upper" if upper else "lower", _monotone(probes, upper))


def _monotone(probes, upper) -> bool:
    ps = sorted(probes, key=lambda p: p.param)
    if not upper:
        ps = ps[::-1]
    verdicts = [p.passed for p in ps]
    if any(v and not w for v, w in zip(verdicts, verdicts[1:])):
        return False
    margins = [p.margin for p in ps if np.isfinite(p.margin)]
    return all(m1 <= m0 + 1e-12 for m0, m1 in zip(margins, margins[1:]))
