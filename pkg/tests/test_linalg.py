import numpy as np
import pytest
from scipy import linalg as sla

from shiftbench.common.errors import DomainError, ResourceError
from shiftbench.lab import linalg
from shiftbench.lab.linalg import (
    DenseOperator,
    DensityMatrix,
    basis_permutation,
    embed,
    embed_local,
    frobenius_norm,
    haar_unitary,
    hermitian_expm,
    operator_norm,
    override_tolerances,
    partial_trace,
    permutation_unitary,
    random_unitary,
    require_dense,
    sample_seed,
    trace_norm,
)

from conftest import random_hermitian

tol = 1e-10
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def test_lowest_site_is_most_significant():
    assert np.allclose(embed_local(Z, [0], [0, 1]), np.kron(Z, I2))
    assert np.allclose(embed_local(Z, [1], [0, 1]), np.kron(I2, Z))
    # out-of-order sites are reordered into target order
    assert np.allclose(embed_local(np.kron(X, Z), [2, 0], [0, 1, 2]), np.kron(np.kron(Z, I2), X))


def test_norms():
    A = np.diag([3.0, -1.0, 0.5, 0.0])
    assert operator_norm(A) == pytest.approx(3.0)
    assert frobenius_norm(np.eye(8)) == pytest.approx(1.0)
    assert trace_norm(A) == pytest.approx(4.5)


def test_operator_norm_large_dimension():
    A = np.diag(np.linspace(-3.0, 2.0, 2048))
    assert operator_norm(A) == pytest.approx(3.0, abs=1e-8)


def test_partial_trace_of_product(rng):
    A = random_hermitian(2, rng)
    B = random_hermitian(4, rng)
    op = DenseOperator((0, 1, 2), np.kron(A, B))
    assert np.allclose(partial_trace(op, (1, 2)).matrix, A * np.trace(B), atol=tol)
    assert partial_trace(op, (0,)).sites == (1, 2)


def test_embed_requires_support_inside_target():
    with pytest.raises(DomainError):
        embed(DenseOperator((3,), Z), (0, 1))


def test_operator_arithmetic_aligns_supports():
    out = DenseOperator((0,), Z) @ DenseOperator((1,), X)
    assert out.sites == (0, 1)
    assert np.allclose(out.matrix, np.kron(Z, X))


def test_hermitian_expm_matches_scipy(rng):
    H = random_hermitian(8, rng)
    assert np.allclose(hermitian_expm(H, 0.7), sla.expm(-0.7j * H), atol=tol)
    with pytest.raises(DomainError):
        hermitian_expm(H + 1j * np.eye(8))


def test_haar_unitary_is_unitary_and_seeded():
    U = haar_unitary(16, 3)
    assert np.allclose(U.conj().T @ U, np.eye(16), atol=tol)
    assert np.array_equal(U, haar_unitary(16, 3))
    assert not np.allclose(U, haar_unitary(16, 4))
    assert random_unitary((2, 0), 5).sites == (0, 2)


def test_sample_seeds_differ():
    assert sample_seed(7, 0) != sample_seed(7, 1)
    assert sample_seed(7, 0) == sample_seed(7, 0)


def test_permutation_moves_local_operators():
    mapping = [1, 2, 0]
    P = permutation_unitary(mapping)
    for s in range(3):
        Zs = embed_local(Z, [s], [0, 1, 2])
        Zt = embed_local(Z, [mapping[s]], [0, 1, 2])
        assert np.allclose(P @ Zs @ P.conj().T, Zt)
    with pytest.raises(DomainError):
        basis_permutation([0, 0, 1])


def test_density_matrix_validation():
    DensityMatrix((0,), np.diag([0.25, 0.75]))
    with pytest.raises(DomainError):
        DensityMatrix((0,), np.diag([0.5, 0.6]))
    with pytest.raises(DomainError):
        DensityMatrix((0,), np.diag([1.5, -0.5]))


def test_dense_cap():
    require_dense(12)
    with pytest.raises(ResourceError):
        require_dense(13)


def test_override_tolerances_restores():
    before = linalg.TOL.certificate
    with override_tolerances(certificate=1e-3) as tol_:
        assert tol_.certificate == 1e-3
        assert linalg.TOL.unitary == 1e-10
    assert linalg.TOL.certificate == before


def test_is_unitary_reads_current_tolerance():
    U = DenseOperator((0,), np.diag([1.0, 1.0 + 1e-6]))
    assert not U.is_unitary()
    with override_tolerances(unitary=1e-5):
        assert U.is_unitary()
