import numpy as np
import pytest
from scipy import linalg as sla

from shiftbench.common.errors import DomainError
from shiftbench.lab.bounds import loglinear_fit
from shiftbench.lab.evolution import (
    CircuitApprox,
    Evolver,
    PropagatorPlan,
    circuitize,
    commutator_front,
    cut_interaction,
    haar_twirl,
    heisenberg,
    hhkl_scan,
    leakage_table,
    project_region,
    propagate,
)
from shiftbench.lab.hamiltonian import build_nearest_neighbor, build_powerlaw, random_schedule, split_cut
from shiftbench.lab.lattice import RingLattice
from shiftbench.lab.linalg import DenseOperator, NormMode, frobenius_norm, random_unitary
from shiftbench.lab.pauli import PauliString

from conftest import random_hermitian

tol = 1e-10


def test_plan_steps(ring1):
    H = build_nearest_neighbor(ring1)
    assert PropagatorPlan(H, 1.0, 0.25).steps == 4
    assert PropagatorPlan(H, 0.0).steps == 0
    assert PropagatorPlan(H, 0.5).dt <= 0.01
    with pytest.raises(DomainError):
        PropagatorPlan(H, 1.0, 0.3)
    with pytest.raises(DomainError):
        PropagatorPlan(H, -1.0)


def test_time_independent_propagator_is_exact(ring1):
    H = build_powerlaw(ring1, 2.5, seed=1)
    U = propagate(PropagatorPlan(H, 0.8))
    assert np.allclose(U.matrix, sla.expm(-0.8j * H.assemble().matrix), atol=tol)
    assert np.allclose(Evolver(H).at(0.8).matrix, U.matrix, atol=tol)


def test_time_ordering_puts_later_segments_left(ring1):
    H = random_schedule(build_nearest_neighbor(ring1, seed=2), [0.5], seed=3)
    U = propagate(PropagatorPlan(H, 1.0, 0.25))
    H1 = H.assemble(0.25).matrix
    H2 = H.assemble(0.75).matrix
    expected = sla.expm(-0.5j * H2) @ sla.expm(-0.5j * H1)
    assert np.allclose(U.matrix, expected, atol=tol)


def test_halving_dt_converges_quadratically(ring1):
    H = random_schedule(build_nearest_neighbor(ring1, seed=2), [1 / 3], seed=3)
    U = [propagate(PropagatorPlan(H, 1.0, dt)).matrix for dt in (0.1, 0.05, 0.025)]
    coarse = np.linalg.norm(U[0] - U[1], 2)
    fine = np.linalg.norm(U[1] - U[2], 2)
    assert fine > 0
    assert coarse / fine == pytest.approx(4.0, rel=0.05)


def test_heisenberg_at_zero_time(ring1):
    H = build_nearest_neighbor(ring1)
    A = PauliString.parse("X1").to_operator()
    out = heisenberg(Evolver(H).at(0.0), A)
    assert np.allclose(out.matrix, PauliString.parse("X1").to_operator(tuple(range(4))).matrix)


def test_commutator_front(ring2):
    H = build_nearest_neighbor(ring2, seed=5)
    Z0 = PauliString.parse("Z0")
    table = commutator_front(H, Z0, Z0, [0.0, 0.5, 1.0], range(5))
    assert table.values.shape == (3, 5)
    assert np.all(table.values[0] <= 1e-12)
    assert np.all(table.values <= 2.0 + 1e-9)
    # the front reaches the neighbour before the antipode
    assert table.values[1, 1] > table.values[1, 4]
    assert len(table.rows()) == 15


def test_leakage_frobenius_below_operator(ring2):
    H = build_powerlaw(ring2, 1.5, seed=0)
    A = PauliString.parse("Z0")
    frob = leakage_table(H, A, [0.0, 0.5], [0, 1, 2], NormMode.FROBENIUS)
    oper = leakage_table(H, A, [0.0, 0.5], [0, 1, 2], NormMode.OPERATOR)
    assert np.all(frob.values[0] == 0.0)
    assert np.all(frob.values <= oper.values + 1e-9)
    assert np.all(oper.values <= 2.0 + 1e-9)
    # leakage shrinks as the ball grows
    assert frob.values[1, 0] >= frob.values[1, 2]


def test_project_region():
    zz = PauliString.parse("Z0 Z2").to_operator()
    assert np.allclose(project_region(zz, [0, 1]).matrix, 0.0)
    z0 = PauliString.parse("Z0").to_operator((0, 1, 2))
    assert np.allclose(project_region(z0, [0]).matrix, z0.matrix)
    assert project_region(z0, [0], reduced=True).sites == (0,)


def test_haar_twirl_converges_to_projector(rng):
    m = random_hermitian(16, rng)
    A = DenseOperator((0, 1, 2, 3), m / np.linalg.norm(m, 2))
    exact = project_region(A, [0, 1])
    twirled = haar_twirl(A, [0, 1], 400, seed=11)
    assert frobenius_norm(twirled.matrix - exact.matrix) <= 5 * 4 / np.sqrt(400)
    with pytest.raises(DomainError):
        haar_twirl(A, [0, 1], 0, seed=1)


def test_cut_error_within_duhamel_bound(ring2):
    H = build_nearest_neighbor(ring2, seed=1)
    results = hhkl_scan(H, (0, 1), 0.3, [0, 1, 2])
    assert [r.r for r in results] == [0, 1, 2]
    assert all(r.passed for r in results)
    assert results[0].n_cut_terms == 1


def test_cut_region_may_not_cover_ring(ring2):
    H = build_nearest_neighbor(ring2)
    with pytest.raises(DomainError):
        hhkl_scan(H, (0, 1), 0.2, [3])


def test_cut_interaction_is_hermitian(ring1):
    H = build_nearest_neighbor(ring1, seed=3)
    op = cut_interaction(H, (0, 1), 0.4)
    assert np.allclose(op.matrix, op.matrix.conj().T, atol=tol)


@pytest.mark.slow
def test_cut_error_decays_with_radius():
    H = build_nearest_neighbor(RingLattice(3), seed=0)
    radii = [0, 1, 2, 3, 4]
    errs = [r.err for r in hhkl_scan(H, (0, 1), 0.5, radii)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    fit = loglinear_fit(radii, errs)
    assert fit.slope < 0
    assert fit.r_squared > 0.9


def test_circuit_blocks_are_validated(ring2):
    ca = CircuitApprox.identity(ring2)
    assert np.allclose(ca.assembled.matrix, np.eye(256))
    with pytest.raises(DomainError):
        CircuitApprox(ring2, random_unitary((0, 1), 1), ca.u_r, ca.u_0, ca.u_i)


def test_circuitize_nearest_neighbor(ring2):
    H = build_nearest_neighbor(ring2, seed=4)
    res = circuitize(H, 0.2)
    assert res.ell is None
    stage_sum = sum(s["measured"] for s in res.stages.values())
    assert res.err_total <= stage_sum + 1e-9
    assert res.approx.assembled.is_unitary()
    assert res.passed


def test_circuitize_at_zero_time(ring2):
    res = circuitize(build_nearest_neighbor(ring2), 0.0)
    assert res.err_total == pytest.approx(0.0, abs=1e-12)


def test_circuitize_power_law_ell_window(ring2):
    H = build_powerlaw(ring2, 3.0, seed=0)
    with pytest.raises(DomainError):
        circuitize(H, 0.05, strict_ell=True)
    res = circuitize(H, 0.05, strict_ell=False)
    assert res.ell == 3
    assert not res.ell_window_ok
    stage_sum = sum(s["measured"] for s in res.stages.values())
    assert res.err_total <= stage_sum + 1e-9


def test_cut_interaction_generates_the_cut_frame(ring1):
    H = build_nearest_neighbor(ring1, seed=3)
    full, open_ = Evolver(H), Evolver(split_cut(H, (0, 1))[1])

    def frame(s):
        return full.at(s).matrix @ open_.at(s).matrix.conj().T

    T, h = 0.4, 1e-5
    deriv = (frame(T + h) - frame(T - h)) / (2 * h)
    assert np.allclose(deriv, -1j * frame(T) @ cut_interaction(H, (0, 1), T).matrix, atol=1e-7)
