import pytest

from shiftbench.common.errors import DomainError
from shiftbench.lab.lattice import (
    RingLattice,
    half_chains,
    paper_regions,
    ring_distance,
    set_distance,
    state_regions,
)


def test_ring_size_is_four_l():
    assert RingLattice(2).n == 8
    assert RingLattice.from_sites(12).l == 3


@pytest.mark.parametrize("n", [0, 6, 14])
def test_ring_size_must_be_multiple_of_four(n):
    with pytest.raises(DomainError):
        RingLattice.from_sites(n)


def test_nonpositive_l_rejected():
    with pytest.raises(DomainError):
        RingLattice(0)
    with pytest.raises(DomainError):
        RingLattice(1.5)


def test_labels_reduce_mod_n(ring2):
    assert ring2.site(-1) == 7
    assert ring2.site(9) == 1
    assert ring2.region([-1, 0, 1]).sites == (0, 1, 7)


def test_duplicate_after_reduction_rejected(ring2):
    with pytest.raises(DomainError):
        ring2.region([0, 8])


def test_ring_distance(ring2):
    assert ring_distance(0, 7, ring2) == 1
    assert ring_distance(0, 4, ring2) == 4
    assert ring_distance(3, -3, ring2) == 2


def test_expand_and_set_distance(ring2):
    S = ring2.region([0])
    assert S.expand(1).sites == (0, 1, 7)
    assert S.expand(4).is_full
    assert set_distance(ring2.region([0, 1]), ring2.region([4])) == 3


def test_half_chains(ring2):
    halves = half_chains(ring2)
    assert halves["left"].sites == (1, 2, 3, 4)
    assert halves["right"].sites == (0, 5, 6, 7)


def test_state_blocks_at_l2(ring2):
    r = state_regions(ring2)
    assert r["zero_block_i"].sites == (0, 1, 2, 7)
    assert r["identity_block_i"].sites == (3, 4, 5, 6)
    assert r["zero_block_f"].sites == (0, 1, 6, 7)
    assert r["identity_block_f"].sites == (2, 3, 4, 5)


def test_state_blocks_partition_the_ring(ring1):
    r = state_regions(ring1)
    assert r["zero_block_i"].isdisjoint(r["identity_block_i"])
    assert r["zero_block_i"].union(r["identity_block_i"]).is_full


def test_circuit_supports(ring2):
    r = paper_regions(ring2)
    assert r["u0_support"].sites == (0, 1)
    assert r["uI_support"].sites == (4, 5)


def test_circuit_geometry_needs_l2(ring1):
    with pytest.raises(DomainError):
        paper_regions(ring1)


def test_check_bond(ring2):
    assert ring2.check_bond((7, 8)) == (7, 0)
    with pytest.raises(DomainError):
        ring2.check_bond((0, 2))
