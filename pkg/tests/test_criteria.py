import math

import numpy as np
import pytest

from sep_ellipsoid.criteria import (
    CERTIFIED,
    INCONCLUSIVE,
    ball_criterion,
    c_m_bound,
    ellipsoid_criterion,
    k_separability_criterion,
    neighborhood_criterion,
    trace_criterion,
)
from sep_ellipsoid.decomposition import SeparableDecomposition, Term, bipartitions, full_partition
from sep_ellipsoid.detect import natural_product_state
from sep_ellipsoid.models import dephased_x_state
from sep_ellipsoid.qmat import ProductState

from conftest import ghz, random_density, random_product, werner


def _x_outcome(fn, p):
    rho = dephased_x_state(p)
    return fn(rho, natural_product_state(rho, (2, 2, 2)))


class TestCmBound:
    def test_bipartite_is_exact(self):
        b = c_m_bound((2, 2))
        assert b.value == 1.0 and b.source == "BipartiteExact"
        assert c_m_bound((3, 5)).value == 1.0

    def test_three_qubits(self):
        b = c_m_bound((2, 2, 2))
        assert b.value == pytest.approx(math.sqrt(54 / 17) * (2 / 3) ** 1.5, rel=1e-15)
        assert b.value == pytest.approx(0.97014, abs=1e-5)
        assert b.source == "QubitBound"

    def test_three_qutrits(self):
        b = c_m_bound((3, 3, 3))
        assert b.value == pytest.approx(math.sqrt(27 / 41), rel=1e-15)
        assert b.value == pytest.approx(0.81150, abs=1e-5)
        assert b.source == "QuditBound"

    def test_mixed_dims_use_baseline(self):
        b = c_m_bound((2, 3, 2))
        assert b.source == "Baseline"
        assert b.value == pytest.approx(2 ** (1 - 1.5))

    def test_never_below_baseline(self):
        for m in range(3, 12):
            for d in (2, 3, 4):
                assert c_m_bound((d,) * m).value >= 2 ** (1 - m / 2) - 1e-15

    def test_bad_dims(self):
        with pytest.raises(ValueError):
            c_m_bound((2,))
        with pytest.raises(ValueError):
            c_m_bound((1, 2))


class TestEllipsoid:
    def test_center(self, rng):
        prod = random_product(rng, (2, 2, 2))
        out = ellipsoid_criterion(prod.assemble(), prod)
        assert out.verdict == CERTIFIED
        assert out.diagnostics["delta_norm"] == pytest.approx(0, abs=1e-12)

    def test_x_state(self):
        assert _x_outcome(ellipsoid_criterion, 0.5).certified
        out = _x_outcome(ellipsoid_criterion, 0.45)
        assert out.verdict == INCONCLUSIVE
        assert out.diagnostics["delta_norm"] > c_m_bound((2, 2, 2)).value

    def test_delta_norm_monotone_in_dephasing(self):
        norms = [_x_outcome(ellipsoid_criterion, p).diagnostics["delta_norm"] for p in np.linspace(0, 1, 41)]
        assert all(b <= a + 1e-13 for a, b in zip(norms, norms[1:]))

    def test_dimension_mismatch(self, rng):
        prod = random_product(rng, (2, 2))
        with pytest.raises(ValueError):
            ellipsoid_criterion(np.eye(8) / 8, prod)


class TestBall:
    def test_center_and_mixed(self, rng):
        prod = random_product(rng, (2, 3))
        assert ball_criterion(prod.assemble(), prod).certified
        uniform = ProductState([np.eye(2) / 2, np.eye(2) / 2])
        assert ball_criterion(np.eye(4) / 4, uniform).certified

    def test_x_state_never(self):
        assert not _x_outcome(ball_criterion, 1.0).certified

    def test_rank_deficient_reference(self):
        prod = ProductState([np.diag([1.0, 0.0]), np.eye(2) / 2])
        out = ball_criterion(prod.assemble(), prod)
        assert out.verdict == INCONCLUSIVE
        assert out.diagnostics["reason"] == "rank_deficient_reference"


class TestTrace:
    def test_x_state(self):
        assert _x_outcome(trace_criterion, 0.47).certified

    def test_maximally_mixed_reference_reduces_to_purity(self, rng):
        for dims in [(2, 2), (2, 2, 2), (3, 3), (2, 2, 2, 2)]:
            D = int(np.prod(dims))
            ref = ProductState([np.eye(d) / d for d in dims])
            cm = c_m_bound(dims).value
            for _ in range(20):
                rho = random_density(rng, D)
                purity = np.trace(rho @ rho).real
                out = trace_criterion(rho, ref)
                assert out.margin == pytest.approx(purity - 1 / (D - cm ** 2), abs=1e-12)

    def test_werner_boundary(self):
        ref = ProductState([np.eye(2) / 2, np.eye(2) / 2])
        rho = werner(1 / 3)
        assert np.trace(rho @ rho).real == pytest.approx(1 / 3, abs=1e-15)
        out = trace_criterion(rho, ref)
        assert out.verdict == CERTIFIED
        assert abs(out.margin) < 1e-9
        assert not trace_criterion(werner(1 / 3 + 1e-6), ref).certified

    def test_alpha_is_optimal_scale(self, rng):
        prod = random_product(rng, (2, 2, 2))
        rho = random_density(rng, 8)
        alpha = trace_criterion(rho, prod).diagnostics["alpha"]
        norms = [ellipsoid_criterion(s * rho, prod).diagnostics["delta_norm"] for s in (alpha * 0.99, alpha, alpha * 1.01)]
        assert norms[1] <= min(norms[0], norms[2])

    def test_nonpositive_input(self, rng):
        prod = random_product(rng, (2, 2))
        out = trace_criterion(-np.eye(4), prod)
        assert out.verdict == INCONCLUSIVE and out.diagnostics["reason"] == "nonpositive_trace"


def _single_term(prod, weight=1.0, partition=None):
    partition = partition or full_partition(len(prod.dims))
    return SeparableDecomposition(prod.dims, [Term(weight, prod, partition)])


class TestNeighborhood:
    def test_single_term_matches_trace(self, rng):
        for _ in range(30):
            prod = random_product(rng, (2, 2, 2))
            rho = random_density(rng, 8)
            a = neighborhood_criterion(rho, _single_term(prod, weight=0.7))
            b = trace_criterion(rho, prod)
            assert a.verdict == b.verdict
            assert a.margin == pytest.approx(b.margin, abs=1e-12)

    def test_exact_decomposition_certifies(self, rng):
        terms = [Term(w, random_product(rng, (2, 2, 2)), full_partition(3)) for w in (0.5, 0.3, 0.2)]
        dec = SeparableDecomposition((2, 2, 2), terms)
        out = neighborhood_criterion(dec.assembled, dec)
        assert out.certified
        assert out.diagnostics["delta_norm"] == pytest.approx(0, abs=1e-14)

    def test_pivot_selection(self, rng):
        # a singular term paired with a full-rank one: the full-rank pivot is tried first
        singular = ProductState([np.diag([1.0, 0]), np.diag([1.0, 0])])
        full = random_product(rng, (2, 2))
        dec = SeparableDecomposition((2, 2), [Term(0.2, singular, full_partition(2)), Term(0.8, full, full_partition(2))])
        out = neighborhood_criterion(dec.assembled, dec)
        assert out.certified and out.diagnostics["pivot"] == 1
        forced = neighborhood_criterion(dec.assembled, dec, pivot=0)
        assert forced.diagnostics["pivot"] == 0
        with pytest.raises(IndexError):
            neighborhood_criterion(dec.assembled, dec, pivot=5)

    def test_requires_full_split(self, rng):
        prod = ProductState([random_density(rng, 2), random_density(rng, 4)])
        dec = SeparableDecomposition((2, 2, 2), [Term(1.0, prod, bipartitions(3)[0])])
        with pytest.raises(ValueError):
            neighborhood_criterion(np.eye(8) / 8, dec)


class TestKSeparability:
    def test_k_equals_m_matches_neighborhood(self, rng):
        for _ in range(20):
            terms = [Term(rng.random(), random_product(rng, (2, 2, 2)), full_partition(3)) for _ in range(3)]
            dec = SeparableDecomposition((2, 2, 2), terms)
            rho = random_density(rng, 8)
            a = k_separability_criterion(rho, dec, 3)
            b = neighborhood_criterion(rho, dec)
            assert a.verdict == b.verdict
            assert a.margin == pytest.approx(b.margin, abs=1e-12)
            assert a.criterion == "neighborhood"

    def test_bisep_tag_and_center(self, rng):
        terms = []
        for part in bipartitions(3):
            bd = part.block_dims((2, 2, 2))
            terms.append(Term(1 / 3, ProductState([random_density(rng, d) for d in bd]), part))
        dec = SeparableDecomposition((2, 2, 2), terms)
        out = k_separability_criterion(dec.assembled, dec, 2)
        assert out.certified and out.criterion == "bisep"

    def test_ghz_never_certified(self, rng):
        rho = ghz(3)
        for _ in range(200):
            terms = []
            for part in bipartitions(3):
                bd = part.block_dims((2, 2, 2))
                rank = lambda d: int(rng.integers(1, d + 1))
                terms.append(Term(rng.random(), ProductState([random_density(rng, d, rank(d)) for d in bd]), part))
            dec = SeparableDecomposition((2, 2, 2), terms)
            assert not k_separability_criterion(rho, dec, 2).certified

    def test_block_count_checked(self, rng):
        dec = _single_term(random_product(rng, (2, 2, 2)))
        with pytest.raises(ValueError):
            k_separability_criterion(np.eye(8) / 8, dec, 2)


def test_outcome_serializes(rng):
    prod = random_product(rng, (2, 2))
    d = trace_criterion(np.eye(4) / 4, prod).to_dict()
    assert set(d) == {"verdict", "criterion", "margin", "diagnostics"}
    assert all(isinstance(v, (int, float, str, bool)) for v in d["diagnostics"].values())
