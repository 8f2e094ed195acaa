import math

import numpy as np
import pytest

from shiftbench.common.errors import CertificateError, DomainError
from shiftbench.lab.evolution import CircuitApprox
from shiftbench.lab.hamiltonian import build_nearest_neighbor, build_powerlaw
from shiftbench.lab.lattice import RingLattice
from shiftbench.lab.linalg import DenseOperator, NormMode, trace_norm
from shiftbench.lab.pauli import PauliString
from shiftbench.lab.shiftlab import (
    build_shift,
    end_to_end,
    fidelity_chain,
    final_state,
    hard_state,
    jbasis_witness,
    lemma_shift_rho_certificate,
    parse_bits,
    shift_distance,
)

tol = 1e-12


def test_conjugation_moves_paulis_up(ring2):
    sh = build_shift(ring2)
    for letter in "XZ":
        for x in (0, 3, 7):
            moved = sh.conjugate(PauliString.parse(f"{letter}{x}").to_operator())
            expected = PauliString.parse(f"{letter}{(x + 1) % 8}").to_operator(range(8))
            assert np.allclose(moved.matrix, expected.matrix)


def test_shift_is_a_cyclic_permutation(ring1):
    sh = build_shift(ring1)
    assert sh.operator.is_unitary()
    assert np.allclose(sh.power(4).matrix, np.eye(16))
    assert not np.allclose(sh.power(2).matrix, np.eye(16))


def test_shift_distance_of_identity(ring2):
    I = DenseOperator.identity(range(8))
    assert shift_distance(I, NormMode.FROBENIUS) == pytest.approx(math.sqrt(1.984375), abs=1e-12)
    assert shift_distance(I, NormMode.OPERATOR) == pytest.approx(2.0, abs=1e-9)


def test_shift_distance_of_shift_is_zero(ring2):
    sh = build_shift(ring2)
    assert shift_distance(sh.operator, NormMode.OPERATOR) == pytest.approx(0.0, abs=tol)
    assert shift_distance(sh.operator, NormMode.FROBENIUS) == pytest.approx(0.0, abs=1e-7)


def test_shift_distance_rejects_non_unitary():
    with pytest.raises(DomainError):
        shift_distance(DenseOperator.identity(range(4)) * 2.0)
    with pytest.raises(DomainError):
        shift_distance(DenseOperator.identity((1, 2, 3)))


def test_parse_bits():
    assert parse_bits("0110", 4) == (0, 1, 1, 0)
    assert parse_bits([1, 0], 2) == (1, 0)
    with pytest.raises(DomainError):
        parse_bits("010", 4)
    with pytest.raises(DomainError):
        parse_bits("0120", 4)


@pytest.mark.parametrize("z", ["0000", "1011"])
def test_shift_maps_initial_to_final(ring2, z):
    sh = build_shift(ring2)
    rho_i = hard_state(ring2, z).rho.matrix
    rho_f = final_state(ring2, z).rho.matrix
    assert np.allclose(sh.matrix @ rho_i @ sh.matrix.conj().T, rho_f, atol=tol)


def test_hard_state_layout(ring2):
    st = hard_state(ring2, "1000")
    assert st.zero_block == (0, 1, 2, 7)
    assert st.purity == pytest.approx(2.0**-4)
    assert np.real(np.trace(st.rho.matrix)) == pytest.approx(1.0)
    assert trace_norm(st.rho.matrix - hard_state(ring2, "0000").rho.matrix) == pytest.approx(2.0)


def test_lemma_holds_for_random_circuits(random_circuit):
    for z in ("0000", "0110", "1111"):
        cert = lemma_shift_rho_certificate(random_circuit, z)
        assert cert.passed
        assert cert.distance >= 0.5 - 1e-9
        assert cert.spectral_norm <= 0.125 + 1e-9


def test_lemma_for_identity_circuit():
    cert = lemma_shift_rho_certificate(CircuitApprox.identity(RingLattice(2)))
    assert cert.halfchain_lower <= cert.distance + 1e-9


def test_jbasis_witness(random_circuit):
    w = jbasis_witness(random_circuit.u_l, 2, random_circuit.u_0, "0101")
    assert w.eigenvalues_ok
    assert w.n_support == 4
    assert w.lower >= 0.5 - 1e-9
    assert w.trace_distance >= w.sign_value - 1e-9


def test_jbasis_rejects_wrong_support(random_circuit):
    with pytest.raises(DomainError):
        jbasis_witness(random_circuit.u_r, 2)


def test_fidelity_chain(random_circuit):
    chain = fidelity_chain(random_circuit)
    assert len(chain.per_z) == 16
    assert abs(chain.frobenius_identity - chain.frobenius_direct) <= 1e-9
    assert chain.final >= 0.25 - 1e-9
    assert all(z["fidelity_gap"] >= 1 / 16 - 1e-9 for z in chain.per_z)


def test_certificate_error_names_violations(random_circuit):
    cert = lemma_shift_rho_certificate(random_circuit, strict=False)
    bad = type(cert)(l=cert.l, z=cert.z, distance=0.1, halfchain_lower=0.0, spectral_norm=0.0)
    with pytest.raises(CertificateError) as exc:
        bad.require()
    assert "distance >= 1/2" in str(exc.value)
    assert exc.value.exit_code == 1


@pytest.mark.slow
def test_end_to_end_at_zero_time(ring2):
    verdict = end_to_end(build_nearest_neighbor(ring2, seed=0), 0.0)
    assert verdict.passed
    assert verdict.err_operator == pytest.approx(0.0, abs=1e-12)
    assert verdict.shift_operator >= 0.125
    assert verdict.chain is not None and verdict.chain.passed
    assert verdict.to_dict()["verdict"] == "PASS"


def _assert_triangle(verdict):
    checks = verdict.checks()
    assert checks["triangle: ||U-U_sh|| >= ||U~-U_sh|| - ||U-U~||"]
    assert checks["triangle (F): ||U-U_sh||_F >= ||U~-U_sh||_F - ||U-U~||_F"]
    assert verdict.shift_operator >= verdict.approx_shift_operator - verdict.err_operator - 1e-9


@pytest.mark.slow
def test_end_to_end_nearest_neighbor_certifies(ring2):
    verdict = end_to_end(build_nearest_neighbor(ring2, seed=0), 0.25)
    _assert_triangle(verdict)
    assert verdict.premise
    assert 0.0 < verdict.err_operator <= 0.125
    assert verdict.approx_shift_operator >= 0.25
    assert verdict.shift_operator >= 0.125
    assert verdict.label == "PASS"


@pytest.mark.slow
def test_end_to_end_without_premise_is_inconclusive(ring2):
    verdict = end_to_end(build_nearest_neighbor(ring2, seed=0), 0.5)
    _assert_triangle(verdict)
    assert verdict.err_operator > 0.125
    assert not verdict.premise
    assert verdict.passed
    assert verdict.to_dict()["verdict"] == "INCONCLUSIVE"


@pytest.mark.slow
def test_end_to_end_saturated_powerlaw_is_inconclusive(ring2):
    verdict = end_to_end(build_powerlaw(ring2, 3.0, seed=0), 0.25)
    _assert_triangle(verdict)
    assert verdict.passed
    assert verdict.shift_operator >= 0.125
    assert verdict.err_operator == pytest.approx(0.1386, abs=5e-3)
    assert not verdict.premise
    assert verdict.label == "INCONCLUSIVE"
