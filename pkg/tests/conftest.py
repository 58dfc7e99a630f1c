import numpy as np
import pytest

from sep_ellipsoid.qmat import ProductState


def random_density(rng, d, rank=None):
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_product(rng, dims, deficient=False):
    factors = []
    for d in dims:
        rank = int(rng.integers(1, d + 1)) if deficient else d
        factors.append(random_density(rng, d, rank))
    return ProductState(factors)


def pure(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def bell():
    return pure([1, 0, 0, 1])


def ghz(m=3):
    v = np.zeros(2 ** m)
    v[0] = v[-1] = 1
    return pure(v)


def werner(v):
    return v * bell() + (1 - v) * np.eye(4) / 4


@pytest.fixture
def rng():
    return np.random.default_rng(20241018)


def pytest_terminal_summary(terminalreporter):
    acc = __import__("sys").modules.get("test_acceptance")
    if acc is not None and acc.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acc.RESULTS.values():
            terminalreporter.write_line(line)
