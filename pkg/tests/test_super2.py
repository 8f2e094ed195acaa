import numpy as np
import pytest

from shiftbench.common.errors import DomainError, ResourceError
from shiftbench.lab.evolution import CircuitApprox
from shiftbench.lab.lattice import RingLattice
from shiftbench.lab.linalg import DenseOperator, random_unitary
from shiftbench.lab.pauli import PauliString
from shiftbench.lab.shiftlab import build_shift
from shiftbench.lab.super2 import (
    LIOUVILLIAN_TOL,
    Copy,
    SiteFactor,
    SuperState,
    _all_slots,
    boundary_commutators,
    depth2_swap_circuit,
    doubled_shift,
    identity_block_expansion,
    inversion_map,
    inversion_unitary,
    liouvillian_identity_check,
    liouvillian_reality_check,
    reflection_string,
    separability_check,
    slot_index,
    super_apply,
    super_distance_on,
    super_distance_scan,
    super_lemma_certificate,
    superoperator_matrix,
    swap_string,
    symmetric_separable_model,
)

from conftest import random_hermitian

tol = 1e-12


def test_superoperator_is_real_orthogonal():
    R = superoperator_matrix(random_unitary((0, 1), 3))
    assert np.allclose(R.imag, 0.0, atol=tol)
    assert np.allclose(R.real.T @ R.real, np.eye(16), atol=1e-10)
    with pytest.raises(ResourceError):
        superoperator_matrix(random_unitary(range(5), 1))


def test_super_apply_conjugates():
    U = random_unitary((0, 1), 4)
    Z = PauliString.parse("Z1").to_operator()
    out = super_apply(U, Z)
    u = U.matrix
    assert np.allclose(out.matrix, u.conj().T @ np.kron(np.eye(2), np.diag([1, -1])) @ u)


def test_shift_has_zero_super_distance(ring1):
    sh = build_shift(ring1)
    for label in ("Z0", "X2 Y3", "Y1"):
        assert super_distance_on(sh.operator, PauliString.parse(label).to_operator(), sh) == pytest.approx(0.0, abs=tol)
    scan = super_distance_scan(sh.operator, [1, 2], sh)
    assert len(scan.values) == 16
    assert scan.max_value == pytest.approx(0.0, abs=tol)


def test_super_distance_of_identity(ring1):
    I = DenseOperator.identity(range(4))
    # Z0 and Z1 are orthogonal, so the normalized distance is sqrt(2)
    assert super_distance_on(I, PauliString.parse("Z0").to_operator()) == pytest.approx(np.sqrt(2.0))
    assert super_distance_on(I, DenseOperator.identity((0,))) == pytest.approx(0.0, abs=tol)
    with pytest.raises(DomainError):
        super_distance_on(I, PauliString.parse("Z0").to_operator() * 2.0)


def test_initial_and_final_super_states(ring2):
    R_i, R_f = SuperState.initial(ring2), SuperState.final(ring2)
    assert [R_i.factor(x) for x in (7, 0, 1, 2)] == [SiteFactor.IDENTITY] * 4
    assert R_i.factor(3) is SiteFactor.MIXED
    assert R_f.factor(3) is SiteFactor.IDENTITY
    assert R_f.factor(7) is SiteFactor.MIXED
    assert R_f.restrict([3, 4]).factors == (SiteFactor.IDENTITY, SiteFactor.MIXED)


def test_identity_block_expansion_matches_product():
    state = SuperState.product({0: "I", 1: "mixed", 2: "mixed"})
    dense = state.dense()
    assert np.allclose(identity_block_expansion(state), dense, atol=tol)
    assert np.trace(dense).real == pytest.approx(1.0)


def test_dense_super_state_is_capped():
    with pytest.raises(ResourceError):
        SuperState.product({s: "mixed" for s in range(5)}).dense()


def test_super_lemma_at_two(random_circuit):
    cert = super_lemma_certificate(random_circuit)
    assert cert.halfchain_value >= 0.5 - 1e-9
    assert 0.25 - 1e-9 <= cert.max_value <= 2.0 + 1e-9
    assert cert.n_strings == 256


def test_super_lemma_needs_two():
    with pytest.raises(ResourceError):
        super_lemma_certificate(CircuitApprox.random(RingLattice(3), 0))


def test_liouvillian_identity(rng):
    H = DenseOperator((0, 1), random_hermitian(4, rng))
    A = DenseOperator((2, 3), random_hermitian(4, rng))
    assert liouvillian_identity_check(H, A) <= LIOUVILLIAN_TOL
    with pytest.raises(DomainError):
        liouvillian_identity_check(H, DenseOperator((1, 2), random_hermitian(4, rng)))


def test_liouvillian_reality(rng):
    H = DenseOperator((0, 1, 2), random_hermitian(8, rng))
    O1 = DenseOperator((0, 1), random_hermitian(4, rng))
    O2 = DenseOperator((1, 2), random_hermitian(4, rng))
    assert liouvillian_reality_check(H, O1, O2) <= LIOUVILLIAN_TOL
    with pytest.raises(DomainError):
        liouvillian_reality_check(H, O1, DenseOperator((1,), np.array([[0, 1], [0, 0]], dtype=complex)))


def test_slot_layout(ring1):
    assert slot_index(ring1, (0, Copy.A)) == 0
    assert slot_index(ring1, (1, Copy.B)) == 5
    assert inversion_map(2, "A", ring1) == (3, Copy.B)
    for x, c in _all_slots(ring1):
        assert inversion_map(*inversion_map(x, c, ring1), ring1) == (x, c)


def test_two_copy_identities(ring1):
    D = doubled_shift(ring1).dense()
    R = inversion_unitary(ring1).dense()
    S_i = swap_string(1).dense()
    S_f = swap_string(1, shifted=True).dense()
    assert np.allclose(D.conj().T @ S_i @ D, S_f, atol=tol)
    assert np.allclose(R @ R, np.eye(256), atol=tol)
    assert np.allclose(R @ D @ R.conj().T, D, atol=tol)
    assert np.allclose(reflection_string(1), S_i, atol=tol)
    assert np.allclose(S_i, S_i.conj().T, atol=tol)


def test_depth2_circuit_is_doubled_shift(ring1):
    circuit = depth2_swap_circuit(ring1)
    assert np.allclose(circuit.unitary(), doubled_shift(ring1).dense(), atol=tol)
    assert not separability_check(circuit.model)
    assert swap_string(1).separable is False


def test_symmetric_model_commutes_in_the_interior(ring1):
    model = symmetric_separable_model(ring1, seed=3)
    assert separability_check(model)
    R = inversion_unitary(ring1).dense()
    H = model.dense()
    assert np.allclose(R @ H @ R.conj().T, H, atol=1e-10)
    rows = boundary_commutators(model)
    assert any(r["boundary"] for r in rows)
    assert all(r["commutator"] <= 1e-10 for r in rows if not r["boundary"])
    with pytest.raises(DomainError):
        boundary_commutators(model, L=2)
