"""Partitions and weighted product decompositions of (k-)separable operators."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .qmat import RANK_TOL, EigenSystem, ProductState, kron, rank_threshold


@dataclass(frozen=True)
class PartitionSpec:
    """Disjoint blocks of 0-based subsystem indices covering ``range(m)``."""

    blocks: tuple

    def __init__(self, blocks: Iterable[Iterable[int]], m: int | None = None):
        bl = tuple(tuple(sorted(int(i) for i in b)) for b in blocks)
        flat = [i for b in bl for i in b]
        if any(len(b) == 0 for b in bl):
            raise ValueError("partition blocks must be nonempty")
        if len(set(flat)) != len(flat):
            raise ValueError(f"partition blocks overlap: {bl}")
        m = len(flat) if m is None else m
        if sorted(flat) != list(range(m)):
            raise ValueError(f"blocks {bl} do not cover subsystems 0..{m - 1}")
        object.__setattr__(self, "blocks", bl)

    @property
    def m(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def order(self) -> list[int]:
        return [i for b in self.blocks for i in b]

    def block_dims(self, dims: Sequence[int]) -> tuple[int, ...]:
        return tuple(int(np.prod([dims[i] for i in b])) for b in self.blocks)

    def embed(self, factors: Sequence[np.ndarray], dims: Sequence[int]) -> np.ndarray:
        """Place block operators (in block order) into the natural subsystem ordering."""
        op = kron(*factors)
        order = self.order
        if order == list(range(len(order))):
            return op
        m = len(order)
        t = op.reshape([dims[i] for i in order] * 2)
        inv = list(np.argsort(order))
        return t.transpose(inv + [m + i for i in inv]).reshape(op.shape)

    def __str__(self) -> str:
        return "|".join("".join(str(i) for i in b) for b in self.blocks)


def full_partition(m: int) -> PartitionSpec:
    return PartitionSpec([[i] for i in range(m)])


def bipartitions(m: int) -> list[PartitionSpec]:
    """Every split of ``m`` subsystems into two nonempty blocks, block containing the smaller set first."""
    out = []
    for size in range(1, m // 2 + 1):
        for left in combinations(range(m), size):
            right = tuple(i for i in range(m) if i not in left)
            if size * 2 == m and left > right:
                continue
            out.append(PartitionSpec([left, right]))
    return out


def k_partitions(m: int, k: int) -> list[PartitionSpec]:
    """All partitions of ``range(m)`` into exactly ``k`` blocks."""

    def rec(items, k):
        if k == 1:
            yield [items]
            return
        if len(items) == k:
            yield [[i] for i in items]
            return
        first, rest = items[0], items[1:]
        for part in rec(rest, k - 1):
            yield [[first]] + part
        for part in rec(rest, k):
            for j in range(len(part)):
                yield part[:j] + [[first] + part[j]] + part[j + 1:]

    if not 1 <= k <= m:
        raise ValueError(f"cannot split {m} subsystems into {k} blocks")
    seen, out = set(), []
    for p in rec(list(range(m)), k):
        spec = PartitionSpec(sorted(p, key=lambda b: (len(b), sorted(b))))
        if spec.blocks not in seen:
            seen.add(spec.blocks)
            out.append(spec)
    return out


@dataclass(frozen=True)
class Term:
    weight: float
    product: ProductState
    partition: PartitionSpec

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("term weights must be nonnegative")
        if self.product.dims and len(self.product.factors) != self.partition.k:
            raise ValueError("product factors must match the partition blocks")

    def operator(self, dims: Sequence[int]) -> np.ndarray:
        if self.product.dims != self.partition.block_dims(dims):
            raise ValueError("factor dimensions do not match the partition blocks")
        return self.weight * self.partition.embed(self.product.factors, dims)

    def eigensystem(self, dims: Sequence[int], rank_tol: float = RANK_TOL) -> EigenSystem:
        """Spectrum of ``weight * embedded product``, computed factor-wise."""
        es = self.product.eigensystem(rank_tol)
        w = self.weight * es.eigenvalues
        order = self.partition.order
        v = es.eigenvectors
        if order != list(range(len(order))):
            m = len(order)
            D = v.shape[0]
            inv = list(np.argsort(order))
            v = v.reshape([dims[i] for i in order] + [D]).transpose(inv + [m]).reshape(D, D)
        rank = int(np.count_nonzero(w > rank_threshold(w, rank_tol)))
        return EigenSystem(w, v, rank, rank_tol)


@dataclass(frozen=True)
class SeparableDecomposition:
    """``K = sum_j w_j K_j`` with each ``K_j`` a product over its own partition."""

    dims: tuple
    terms: tuple

    def __init__(self, dims: Sequence[int], terms: Iterable[Term]):
        terms = tuple(terms)
        object.__setattr__(self, "dims", tuple(int(d) for d in dims))
        object.__setattr__(self, "terms", terms)
        ks = {t.partition.k for t in terms}
        if len(ks) > 1:
            raise ValueError(f"terms mix partitions with block counts {sorted(ks)}")
        for t in terms:
            if t.partition.m != len(self.dims):
                raise ValueError("term partition does not cover all subsystems")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def k(self) -> int:
        return self.terms[0].partition.k if self.terms else 0

    @cached_property
    def assembled(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for t in self.terms:
            out += t.operator(self.dims)
        out.setflags(write=False)
        return out

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "terms": [
                {
                    "weight": float(t.weight),
                    "partition": [list(b) for b in t.partition.blocks],
                    "factors": [_complex_rows(f) for f in t.product.factors],
                }
                for t in self.terms
            ],
        }


def _complex_rows(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(a)]
