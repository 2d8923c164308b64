import numpy as np
import pytest

from povm_coherence.errors import NotHermitian, NotPSD
from povm_coherence.matcore import (
    as_cmatrix,
    dagger,
    eigh,
    entropy_term,
    inverse_sqrt,
    is_hermitian,
    psd_log2,
    psd_power,
    psd_sqrt,
    trace_norm,
)
from povm_coherence.quantum import random_density, random_unitary


def _random_hermitian(rng, dim):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (g + dagger(g))


@pytest.mark.parametrize("dim", [1, 2, 3, 5, 8])
def test_eigh_descending_and_reconstruction(dim, rng):
    h = _random_hermitian(rng, dim)

    system = eigh(h)

    assert np.all(np.diff(system.eigenvalues) <= 0.0)
    u = system.eigenvectors
    assert np.allclose(dagger(u) @ u, np.eye(dim), atol=1e-12)
    assert np.linalg.norm(system.rebuild() - h) <= 1e-10 * max(1.0, np.linalg.norm(h))


def test_eigh_examples():
    assert np.allclose(eigh(np.diag([1.0, 0.0])).eigenvalues, [1.0, 0.0])
    values = eigh(np.array([[0.0, 1.0], [1.0, 0.0]])).eigenvalues
    assert np.allclose(values, [1.0, -1.0])


def test_eigh_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eigh_symmetrizes_small_residual(rng):
    h = _random_hermitian(rng, 3)
    skew = 1j * np.eye(3) * 5e-12
    system = eigh(h + skew)

    assert np.allclose(system.rebuild(), h, atol=1e-10)


def test_as_cmatrix_rejects_non_finite():
    with pytest.raises(ValueError):
        as_cmatrix([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        as_cmatrix([1.0, 2.0])


def test_is_hermitian():
    assert is_hermitian(np.array([[1.0, 1j], [-1j, 2.0]]))
    assert not is_hermitian(np.array([[1.0, 1j], [1j, 2.0]]))
    assert not is_hermitian(np.ones((2, 3)))


def test_trace_norm_examples():
    assert abs(trace_norm(np.diag([1.0, -2.0])) - 3.0) <= 1e-12
    assert trace_norm(np.zeros((2, 2))) == 0.0
    assert abs(trace_norm(np.array([[0.0, 0.5], [0.5, 0.0]])) - 1.0) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_trace_norm_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    u = random_unitary(4, seed=rng)
    w = random_unitary(4, seed=rng)

    assert abs(trace_norm(u @ m @ w) - trace_norm(m)) <= 1e-10 * max(1.0, trace_norm(m))


def test_psd_power_examples():
    assert np.allclose(psd_sqrt(np.diag([4.0, 0.0])), np.diag([2.0, 0.0]))
    assert np.allclose(psd_power(np.diag([4.0, 0.0]), -0.5), np.diag([0.5, 0.0]))
    assert np.allclose(psd_power(np.diag([3.0, 0.0]), 0.0), np.diag([1.0, 0.0]))
    assert np.allclose(inverse_sqrt(np.diag([4.0, 1.0])), np.diag([0.5, 1.0]))


def test_psd_power_floors_tiny_eigenvalues():
    h = np.diag([1.0, 1e-14])

    assert np.allclose(psd_power(h, -1.0), np.diag([1.0, 0.0]))


def test_psd_power_rejects_negative_spectrum():
    with pytest.raises(NotPSD):
        psd_power(np.diag([1.0, -1e-3]), 0.5)


@pytest.mark.parametrize("s, t", [(0.3, 0.7), (0.5, 0.5), (1.2, -0.4), (0.25, 1.5)])
def test_psd_power_additivity(s, t, rng):
    rho = random_density(4, seed=rng).mat

    product = psd_power(rho, s) @ psd_power(rho, t)

    assert np.allclose(product, psd_power(rho, s + t), atol=1e-8)


def test_psd_log2_and_entropy_term():
    assert np.allclose(psd_log2(np.eye(2) / 2), -np.eye(2))
    assert np.allclose(psd_log2(np.diag([1.0, 0.0])), np.zeros((2, 2)))
    assert abs(entropy_term(np.eye(4) / 4) + 2.0) <= 1e-12
    assert entropy_term(np.diag([1.0, 0.0])) == 0.0
