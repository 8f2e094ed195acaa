import math

import numpy as np
import pytest

from shiftbench.common.errors import DomainError
from shiftbench.lab.hamiltonian import (
    TWO_SITE_LABELS,
    HamiltonianModel,
    ModelKind,
    Schedule,
    Term,
    build_nearest_neighbor,
    build_powerlaw,
    crosses_bond,
    ell_rule,
    norm_tail,
    random_schedule,
    split_cut,
    split_far,
)
from shiftbench.lab.lattice import RingLattice, half_chains
from shiftbench.lab.linalg import NormMode, embed_local, is_hermitian
from shiftbench.lab.pauli import PAULI_MATRICES

tol = 1e-12


def _unit_term(pair, label):
    c = [0.0] * len(TWO_SITE_LABELS)
    c[TWO_SITE_LABELS.index(label)] = 1.0
    return Term(pair, tuple(c))


def test_powerlaw_has_one_term_per_pair(ring2):
    H = build_powerlaw(ring2, 2.0, seed=3)
    assert len(H) == 28
    norms = {t.pair: t.norm() for t in H.terms}
    assert norms[(0, 4)] == pytest.approx(1 / 16, abs=tol)
    assert norms[(0, 7)] == pytest.approx(1.0, abs=tol)


def test_powerlaw_unsaturated_stays_within_budget(ring2):
    H = build_powerlaw(ring2, 3.0, k=0.5, seed=1, saturate=False)
    for t in H.terms:
        assert t.norm() <= 0.5 * ring2.distance(*t.pair) ** -3.0 + 1e-12


def test_nearest_neighbor_model(ring2):
    H = build_nearest_neighbor(ring2, seed=0)
    assert len(H) == 8
    assert all(ring2.distance(*p) == 1 for p in H.pairs)
    assert all(t.norm() == pytest.approx(1.0) for t in H.terms)


def test_budget_enforced(ring1):
    with pytest.raises(DomainError):
        HamiltonianModel(ring1, (_unit_term((0, 1), "XX").scaled(2.0),), ModelKind.NEAREST_NEIGHBOR)
    with pytest.raises(DomainError):
        HamiltonianModel(ring1, (_unit_term((0, 2), "XX"),), ModelKind.NEAREST_NEIGHBOR)
    with pytest.raises(DomainError):
        build_powerlaw(ring1, 1.0)


def test_assemble_places_terms(ring1):
    term = _unit_term((1, 2), "YZ")
    H = HamiltonianModel(ring1, (term,), ModelKind.NEAREST_NEIGHBOR)
    expected = embed_local(np.kron(PAULI_MATRICES["Y"], PAULI_MATRICES["Z"]), [1, 2], range(4))
    assert np.allclose(H.assemble().matrix, expected)
    assert np.allclose(H.assemble().matrix, embed_local(term.matrix(), [1, 2], range(4)))


def test_assemble_wrapping_term(ring1):
    H = HamiltonianModel(ring1, (_unit_term((0, 3), "XY"),), ModelKind.NEAREST_NEIGHBOR)
    expected = embed_local(np.kron(PAULI_MATRICES["X"], PAULI_MATRICES["Y"]), [0, 3], range(4))
    assert np.allclose(H.assemble().matrix, expected)


def test_assembled_model_is_hermitian(ring2):
    assert is_hermitian(build_powerlaw(ring2, 2.5, seed=2).assemble().matrix)


def test_split_cut_small_ring(ring2):
    H = build_powerlaw(ring2, 3.0, seed=0)
    cut, rest = split_cut(H, (0, 1), ell=3)
    assert set(cut.pairs) == {(0, 1), (0, 2), (1, 7)}
    assert len(cut) + len(rest) == len(H)


def test_split_cut_without_ell_takes_every_crossing(ring2):
    H = build_nearest_neighbor(ring2)
    cut, rest = split_cut(H, (3, 4))
    assert cut.pairs == ((3, 4),)


def test_antipodal_pairs_cross_every_bond():
    assert all(crosses_bond((0, 4), b, 8) for b in range(8))
    assert crosses_bond((6, 1), 7, 8)
    assert not crosses_bond((1, 3), 0, 8)


def test_split_far(ring2):
    H = build_powerlaw(ring2, 2.0, seed=0)
    far, near = split_far(H, 3)
    left = half_chains(ring2)["left"]
    for x, y in far.pairs:
        assert (x in left) != (y in left)
        assert ring2.distance(x, y) >= 3
    assert len(far) + len(near) == len(H)
    assert norm_tail(far, NormMode.OPERATOR) == pytest.approx(sum(t.norm() for t in far.terms))
    assert norm_tail(far, NormMode.FROBENIUS) <= norm_tail(far, NormMode.OPERATOR) + tol


def test_norm_tail_bounds_every_schedule(ring2):
    far, _ = split_far(build_powerlaw(ring2, 2.0, seed=0), 3)
    scheduled = random_schedule(far, [0.25, 0.5], seed=4)
    bound = norm_tail(scheduled, NormMode.OPERATOR)
    assert bound == pytest.approx(norm_tail(far, NormMode.OPERATOR))
    for t in (0.1, 0.3, 0.7):
        assert np.linalg.norm(scheduled.assemble(t).matrix, 2) <= bound + tol


def test_ell_rule():
    assert ell_rule(1 / 16, 3.0, 1.0, NormMode.OPERATOR) == 1
    assert ell_rule(1.0, 2.0, 9 / 16, NormMode.FROBENIUS) == 9
    assert ell_rule(1.0, 4.0, 1.0, NormMode.OPERATOR) == math.ceil(math.sqrt(16.0))
    with pytest.raises(DomainError):
        ell_rule(1.0, 2.0, 1.0, NormMode.OPERATOR)
    with pytest.raises(DomainError):
        ell_rule(0.0, 3.0, 1.0, NormMode.OPERATOR)


def test_schedule_averaging():
    s = Schedule((0.5,), np.array([[1.0], [-1.0]]))
    assert s.multipliers_at(0.2)[0] == 1.0
    assert s.multipliers_at(0.7)[0] == -1.0
    assert s.averaged(0.0, 1.0)[0] == pytest.approx(0.0)
    with pytest.raises(DomainError):
        Schedule((0.5,), np.array([[2.0], [0.0]]))


def test_random_schedule_is_time_dependent(ring1):
    H = random_schedule(build_nearest_neighbor(ring1), [0.1, 0.2], seed=4)
    assert not H.is_time_independent
    assert np.all(np.abs(H.schedule.multipliers) <= 1.0)


def test_record_round_trip_keeps_fingerprint(ring1):
    H = random_schedule(build_powerlaw(ring1, 2.5, seed=9), [0.3], seed=1)
    again = HamiltonianModel.from_dict(H.to_dict())
    assert again.fingerprint() == H.fingerprint()
    assert again.fingerprint() != build_powerlaw(ring1, 2.5, seed=10).fingerprint()
