"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or directly with ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sep_ellipsoid.criteria import (  # noqa: E402
    CERTIFIED,
    ball_criterion,
    c_m_bound,
    ellipsoid_criterion,
    k_separability_criterion,
    neighborhood_criterion,
    trace_criterion,
)
from sep_ellipsoid.decomposition import SeparableDecomposition, Term, full_partition  # noqa: E402
from sep_ellipsoid.detect import (  # noqa: E402
    NoBracketError,
    certify,
    criterion_for,
    natural_product_state,
    negativities,
    threshold_scan,
)
from sep_ellipsoid.models import (  # noqa: E402
    REFERENCE_X_PARAMS,
    IsingSpec,
    dephased_x_state,
    ising_product_spectrum,
    ising_rdm,
    ising_single_site_spectrum,
    x_state,
)
from sep_ellipsoid.qmat import ProductState, frobenius_norm  # noqa: E402
from sep_ellipsoid.volume import eigenvalue_spread, log_volume_ratio  # noqa: E402

import test_properties as props  # noqa: E402
from conftest import random_density, random_product, werner  # noqa: E402

X_DIMS = (2, 2, 2)
RESULTS = {}


def record(key, title, ok, detail):
    RESULTS[key] = f"[{'PASS' if ok else 'FAIL'}] {key} {title}: {detail}"
    return ok


def _x_scan(name):
    t0 = time.perf_counter()
    res = threshold_scan(dephased_x_state, (0.0, 1.0), criterion_for(name, X_DIMS), 1e-3)
    return res, time.perf_counter() - t0


def check_ellipsoid_threshold():
    res, dt = _x_scan("ellipsoid")
    ok = abs(res.threshold - 0.50) <= 0.01 and dt < 10
    return record("AC1", "X-state ellipsoid threshold", ok, f"p*={res.threshold:.4f} (0.50+-0.01), {dt:.2f}s")


def check_trace_threshold():
    res, dt = _x_scan("trace")
    ok = abs(res.threshold - 0.47) <= 0.01 and dt < 10
    return record("AC2", "X-state trace threshold", ok, f"p*={res.threshold:.4f} (0.47+-0.01), {dt:.2f}s")


def check_ball_never():
    ps = np.round(np.linspace(0, 1, 11), 10)
    margins = []
    for p in ps:
        rho = dephased_x_state(p)
        out = ball_criterion(rho, natural_product_state(rho, X_DIMS))
        margins.append((out.certified, out.margin))
    try:
        threshold_scan(dephased_x_state, (0.0, 1.0), criterion_for("ball", X_DIMS))
        bracket = True
    except NoBracketError:
        bracket = False
    ok = not any(c for c, _ in margins) and not bracket
    return record("AC3", "ball criterion never certifies", ok, f"min margin {min(m for _, m in margins):.4f} > 0 on p=0..1")


def check_x_volume():
    prod = natural_product_state(x_state(REFERENCE_X_PARAMS), X_DIMS)
    v = log_volume_ratio(prod.eigensystem().eigenvalues).log10_ratio
    return record("AC4", "X-state volume ratio", abs(v - 24) <= 1, f"log10 R={v:.3f} (24+-1)")


def check_ising_volumes():
    exact = ising_product_spectrum([0.5 - 1 / math.pi, 0.5 + 1 / math.pi])
    h1 = log_volume_ratio(exact).log10_ratio_normalized
    h3 = log_volume_ratio(ising_product_spectrum(ising_single_site_spectrum(14, 3.0))).log10_ratio_normalized
    spread = eigenvalue_spread(exact)
    ok = abs(h1 - 62) <= 1 and abs(h3 - 174) <= 2 and abs(spread - 91) <= 1
    return record(
        "AC5", "Ising volume ratios", ok, f"h=1 {h1:.2f} (62+-1), h=3 L=14 {h3:.2f} (174+-2), l1/lmin={spread:.2f} (91+-1)"
    )


def check_ising_product_spectrum():
    expected = np.array([0.548] + [0.122] * 3 + [0.027] * 3 + [0.006])
    worst = 0.0
    for single in ([0.5 - 1 / math.pi, 0.5 + 1 / math.pi], ising_single_site_spectrum(14, 1.0)):
        worst = max(worst, float(np.max(np.abs(ising_product_spectrum(single) - expected))))
    return record("AC6", "Ising product spectrum", worst <= 0.002, f"max deviation {worst:.2e} (<=0.002), exact and L=14")


def check_ising_thermal():
    t0 = time.perf_counter()
    full = certify(ising_rdm(IsingSpec(12, 1.0, True, 1.8), 3), X_DIMS)
    bisep = certify(ising_rdm(IsingSpec(12, 1.0, True, 1.2), 3), X_DIMS, k=2)

    def family(T):
        return ising_rdm(IsingSpec(12, 1.0, True, T), 3)

    scan = threshold_scan(family, (1.0, 2.0), criterion_for("ppt", X_DIMS), 1e-3)
    # bracket's entangled end: the largest probed T with negativity above 1e-9
    t_neg = max(p.param for p in scan.probes if not p.passed)
    dt = time.perf_counter() - t0
    ok = full.verdict == CERTIFIED and bisep.verdict == CERTIFIED and bisep.criterion == "bisep"
    ok = ok and 1.25 <= t_neg <= 1.50 and dt < 600
    detail = (
        f"T=1.8 full-sep {full.verdict}/{full.criterion}, T=1.2 {bisep.verdict}/{bisep.criterion}, "
        f"negativity threshold {t_neg:.4f} in [1.25,1.50], {dt:.1f}s"
    )
    return record("AC7", "Ising thermal certification (L=12 proxy)", ok, detail)


def check_property_suite():
    checks = [
        props.test_ball_implies_ellipsoid,
        props.test_ellipsoid_implies_trace,
        props.test_trace_scale_invariance,
        props.test_local_unitary_invariance,
        props.test_center_certified_including_rank_deficient,
        props.test_certified_states_are_ppt,
    ]
    failed = []
    for fn in checks:
        try:
            fn(np.random.default_rng(2024))
        except AssertionError:
            failed.append(fn.__name__)
    try:
        props.test_two_qubit_soundness_against_ppt()
    except AssertionError:
        failed.append("two_qubit_soundness")
    detail = f"{len(checks) + 1} properties x {props.N}+ instances" + (f", failed: {failed}" if failed else "")
    return record("AC8", "property suite", not failed, detail)


def _same(x, y, tol=1e-12):
    return x == y or abs(x - y) <= tol


def check_reductions():
    rng = np.random.default_rng(9)
    worst = 0.0
    for dims in [(2, 2), (2, 2, 2), (3, 3), (2, 2, 2, 2)]:
        D = int(np.prod(dims))
        ref = ProductState([np.eye(d) / d for d in dims])
        cm = c_m_bound(dims).value
        for _ in range(50):
            rho = random_density(rng, D)
            purity = np.trace(rho @ rho).real
            worst = max(worst, abs(trace_criterion(rho, ref).margin - (purity - 1 / (D - cm * cm))))
    mixed_ok = worst <= 1e-12

    single_ok = kfull_ok = True
    for _ in range(100):
        prod = random_product(rng, X_DIMS)
        rho = random_density(rng, 8)
        dec = SeparableDecomposition(X_DIMS, [Term(rng.uniform(0.1, 1), prod, full_partition(3))])
        a, b = neighborhood_criterion(rho, dec), trace_criterion(rho, prod)
        single_ok &= a.verdict == b.verdict and _same(a.margin, b.margin)
        terms = [Term(rng.random(), random_product(rng, X_DIMS), full_partition(3)) for _ in range(3)]
        dec3 = SeparableDecomposition(X_DIMS, terms)
        c, d = k_separability_criterion(rho, dec3, 3), neighborhood_criterion(rho, dec3)
        kfull_ok &= c.verdict == d.verdict and _same(c.margin, d.margin)

    w = trace_criterion(werner(1 / 3), ProductState([np.eye(2) / 2, np.eye(2) / 2]))
    werner_ok = w.certified and abs(w.margin) < 1e-9
    ok = mixed_ok and single_ok and kfull_ok and werner_ok
    detail = (
        f"purity reduction err {worst:.1e}, u=1 match {single_ok}, k=m match {kfull_ok}, "
        f"Werner v=1/3 {w.verdict} margin {w.margin:.1e}"
    )
    return record("AC9", "reduction identities", ok, detail)


def _support_basis(a):
    w, v = np.linalg.eigh(a)
    keep = w > 1e-10 * w.max()
    return v[:, keep], w[keep]


def check_rank_deficient():
    rng = np.random.default_rng(11)
    leak_ok = True
    agree = 0.0
    n_leak = 0
    for i in range(300):
        dims = [(2, 2), (2, 2, 2), (2, 3), (3, 3)][i % 4]
        prod = random_product(rng, dims, deficient=True)
        A = prod.assemble()
        V, lam = _support_basis(A)
        r = V.shape[1]
        if r == A.shape[0]:
            continue
        cm = c_m_bound(dims).value
        sigma = random_density(rng, r)
        inside = V @ sigma @ V.conj().T

        # oracle: full-rank certificates inside the support, in the eigenbasis of A
        m = sigma / np.sqrt(lam)[:, None] / np.sqrt(lam)[None, :]
        delta = frobenius_norm(m - np.eye(r))
        ratio = np.trace(m @ m).real / np.trace(m).real ** 2
        e = ellipsoid_criterion(inside, prod)
        t = trace_criterion(inside, prod)
        agree = max(agree, abs(e.diagnostics["delta_norm"] - delta))
        if r - cm * cm > 0:
            agree = max(agree, abs(t.margin - (ratio - 1 / (r - cm * cm))))
        else:
            leak_ok &= t.certified

        eta = 10 ** rng.uniform(-7, -0.5)
        leaky = (1 - eta) * inside + eta * random_density(rng, A.shape[0])
        leakage = frobenius_norm(leaky - V @ (V.conj().T @ leaky @ V) @ V.conj().T)
        tol = 1e-9 * frobenius_norm(leaky)
        if leakage > 10 * tol:
            n_leak += 1
            dec = SeparableDecomposition(dims, [Term(1.0, prod, full_partition(len(dims)))])
            outs = [ellipsoid_criterion(leaky, prod), trace_criterion(leaky, prod), neighborhood_criterion(leaky, dec)]
            leak_ok &= not any(o.certified for o in outs)
    ok = leak_ok and agree <= 1e-9 and n_leak > 100
    return record(
        "AC10", "rank-deficient references", ok, f"{n_leak} leaking states all Inconclusive, in-support agreement {agree:.1e}"
    )


CHECKS = [
    check_ellipsoid_threshold,
    check_trace_threshold,
    check_ball_never,
    check_x_volume,
    check_ising_volumes,
    check_ising_product_spectrum,
    check_ising_thermal,
    check_property_suite,
    check_reductions,
    check_rank_deficient,
]


@pytest.mark.parametrize("check", CHECKS, ids=[f"AC{i + 1}_{c.__name__[6:]}" for i, c in enumerate(CHECKS)])
def test_acceptance(check):
    ok = check()
    print(list(RESULTS.values())[-1])
    assert ok, list(RESULTS.values())[-1]


if __name__ == "__main__":
    results = [c() for c in CHECKS]
    for line in RESULTS.values():
        print(line)
    sys.exit(0 if all(results) else 1)
