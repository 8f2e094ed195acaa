"""Operator space as a Hilbert space: superunitaries, super-density matrices,
Liouvillian identities and the two-copy constructions of the reflection analogy.

Operators on k qubits are identified with states of k four-level qudits through the
Pauli basis in ``enumerate_paulis`` order, normalized so (P|Q) = delta_PQ. The
superunitary of U acts as U|O) = |U^dagger O U), so the super-shift moves |X_x) to
|X_{x+1}) and the final super-density matrix is R_f = U_sh R_i U_sh^dagger.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..common.errors import DomainError, ResourceError
from .certificate import Certificate
from .evolution import CircuitApprox
from .lattice import MIN_CIRCUIT_L, Region, RingLattice, paper_regions, state_regions
from .linalg import (
    TOL,
    DenseOperator,
    embed,
    embed_local,
    frobenius_norm,
    is_hermitian,
    operator_norm,
    permutation_unitary,
    require_dense,
    trace_local,
    trace_norm,
)
from .pauli import PauliString, enumerate_paulis, pauli_coefficients, pauli_inner
from .shiftlab import ShiftUnitary, build_shift

log = logging.getLogger(__name__)

MAX_SUPER_SITES = 4
SUPER_DIM = 4
LIOUVILLIAN_TOL = 1e-10
NORMALIZED_TOL = 1e-9

__all__ = [
    "SiteFactor",
    "SuperState",
    "PauliScan",
    "SuperLemmaCertificate",
    "superoperator_matrix",
    "super_apply",
    "super_distance_on",
    "super_distance_scan",
    "identity_block_expansion",
    "super_lemma_certificate",
    "liouvillian_identity_check",
    "liouvillian_reality_check",
    "Copy",
    "inversion_map",
    "inversion_unitary",
    "doubled_shift",
    "TwoCopyOperator",
    "swap_string",
    "reflection_string",
    "TwoCopyTerm",
    "TwoCopyModel",
    "separability_check",
    "Depth2Circuit",
    "depth2_swap_circuit",
    "symmetric_separable_model",
    "boundary_commutators",
]


def _union(*supports: Iterable[int]) -> Tuple[int, ...]:
    return tuple(sorted(set().union(*map(set, supports))))


# --- superunitaries ------------------------------------------------------------


def super_apply(U: DenseOperator, O: DenseOperator) -> DenseOperator:
    sites = _union(U.sites, O.sites)
    u, o = embed(U, sites).matrix, embed(O, sites).matrix
    return DenseOperator(sites, u.conj().T @ o @ u)


def superoperator_matrix(U: DenseOperator) -> np.ndarray:
    """Matrix of U|O) = |U^dagger O U) in the normalized Pauli basis (real orthogonal)."""
    k = len(U.sites)
    if k > MAX_SUPER_SITES:
        raise ResourceError(f"explicit superoperators stop at {MAX_SUPER_SITES} sites, got {k}")
    cols = [pauli_coefficients(super_apply(U, P.to_operator()).matrix) for P in enumerate_paulis(U.sites)]
    return np.stack(cols, axis=1)


def super_distance_on(U: DenseOperator, O: DenseOperator, shift: Optional[ShiftUnitary] = None) -> float:
    """||(U - U_sh)|O)||_F for a unit-norm O."""
    full = U.sites
    if abs(operator_norm(O.matrix) - 1.0) > NORMALIZED_TOL:
        raise DomainError("super_distance_on needs ||O|| = 1")
    sh = shift or build_shift(len(full))
    o = embed(O, full)
    return frobenius_norm(super_apply(U, o).matrix - sh.conjugate(o).matrix)


@dataclass(frozen=True)
class PauliScan:
    region: Tuple[int, ...]
    values: Tuple[float, ...]
    argmax: str
    max_value: float
    mean: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "region": list(self.region),
            "argmax": self.argmax,
            "max_value": self.max_value,
            "mean": self.mean,
            "n_strings": len(self.values),
        }


def super_distance_scan(
    U: DenseOperator,
    region: Region | Sequence[int],
    shift: Optional[ShiftUnitary] = None,
    workers: int = 1,
) -> PauliScan:
    """||(U - U_sh)|P)||_F for every Pauli string on ``region``; ties go to the first string."""
    sh = shift or build_shift(len(U.sites))
    paulis = list(enumerate_paulis(region))

    def one(P: PauliString) -> float:
        return super_distance_on(U, P.to_operator(), sh)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, paulis))
    else:
        values = [one(P) for P in paulis]
    best = int(np.argmax(values))
    return PauliScan(
        region=tuple(paulis[0].sites),
        values=tuple(values),
        argmax=str(paulis[best]),
        max_value=float(values[best]),
        mean=float(np.mean(values)),
    )


# --- super-density matrices ----------------------------------------------------


class SiteFactor(str, Enum):
    IDENTITY = "I"  # |I)(I|
    MIXED = "mixed"  # super-identity / 4


_FACTORS = {
    SiteFactor.IDENTITY: np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex),
    SiteFactor.MIXED: np.eye(SUPER_DIM, dtype=complex) / SUPER_DIM,
}


@dataclass(frozen=True)
class SuperState:
    """Product super-density matrix with one factor per site."""

    sites: Tuple[int, ...]
    factors: Tuple[SiteFactor, ...]

    def __post_init__(self) -> None:
        if len(self.sites) != len(self.factors):
            raise DomainError("one factor per site")

    @classmethod
    def product(cls, factors: Dict[int, SiteFactor | str]) -> SuperState:
        sites = tuple(sorted(factors))
        return cls(sites, tuple(SiteFactor(factors[s]) for s in sites))

    @classmethod
    def initial(cls, lat: RingLattice) -> SuperState:
        """R_i: |I)(I| on the zero block, super-identity/4 on the identity block."""
        zero = state_regions(lat)["zero_block_i"]
        return cls.product({x: SiteFactor.IDENTITY if x in zero else SiteFactor.MIXED for x in range(lat.n)})

    @classmethod
    def final(cls, lat: RingLattice) -> SuperState:
        return cls.initial(lat).shifted(lat.n)

    def factor(self, site: int) -> SiteFactor:
        return self.factors[self.sites.index(site)]

    def shifted(self, n: int, offset: int = 1) -> SuperState:
        return SuperState.product({(s + offset) % n: f for s, f in zip(self.sites, self.factors)})

    def restrict(self, sites: Iterable[int]) -> SuperState:
        """Super partial trace onto ``sites``; every factor has unit super-trace."""
        keep = set(sites)
        return SuperState.product({s: f for s, f in zip(self.sites, self.factors) if s in keep})

    def dense(self) -> np.ndarray:
        if len(self.sites) > MAX_SUPER_SITES:
            raise ResourceError(f"dense super-density matrices stop at {MAX_SUPER_SITES} sites")
        out = np.ones((1, 1), dtype=complex)
        for f in self.factors:
            out = np.kron(out, _FACTORS[f])
        return out


def identity_block_expansion(state: SuperState) -> np.ndarray:
    """4^-k sum_P |P)(P| over the Pauli strings P on the mixed sites, assembled from the
    Pauli decomposition of each string on the full support."""
    if len(state.sites) > MAX_SUPER_SITES:
        raise ResourceError(f"dense super-density matrices stop at {MAX_SUPER_SITES} sites")
    mixed = [s for s, f in zip(state.sites, state.factors) if f is SiteFactor.MIXED]
    dim = SUPER_DIM ** len(state.sites)
    out = np.zeros((dim, dim), dtype=complex)
    for P in enumerate_paulis(mixed):
        v = pauli_coefficients(P.to_operator(state.sites).matrix)
        out += np.outer(v, v.conj())
    return out / SUPER_DIM ** len(mixed)


def _conjugated_piece(state: SuperState, U: DenseOperator, keep: Sequence[int]) -> Tuple[Tuple[int, ...], np.ndarray]:
    """U R U^dagger on the support of U, super-traced down to ``keep``."""
    R = superoperator_matrix(U)
    rho = state.restrict(U.sites).dense()
    rho = R @ rho @ R.conj().T
    gone = [s for s in U.sites if s not in keep]
    kept = tuple(s for s in U.sites if s in keep)
    return kept, trace_local(rho, U.sites, gone, SUPER_DIM)


def _assemble(pieces: List[Tuple[Tuple[int, ...], np.ndarray]], target: Sequence[int]) -> np.ndarray:
    order: List[int] = []
    out = np.ones((1, 1), dtype=complex)
    for sites, m in pieces:
        order.extend(sites)
        out = np.kron(out, m)
    return embed_local(out, order, list(target), SUPER_DIM)


@dataclass(frozen=True, eq=False)
class SuperLemmaCertificate(Certificate):
    name = "super lemma"

    l: int
    halfchain_value: float
    max_pauli: str
    max_value: float
    mean_value: float
    min_value: float
    n_strings: int

    def checks(self) -> Dict[str, bool]:
        return {
            "halfchain >= 1/2": self.halfchain_value >= 0.5 - TOL.certificate,
            "halfchain <= 2*mean": self.halfchain_value <= 2 * self.mean_value + TOL.certificate,
            "mean <= max": self.mean_value <= self.max_value + TOL.certificate,
            "max_P ||(U~-U_sh)|P)||_F >= 1/4": self.max_value >= 0.25 - TOL.certificate,
            "every ||(U~-U_sh)|P)||_F <= 2": self.max_value <= 2.0 + TOL.certificate,
        }


def super_lemma_certificate(ca: CircuitApprox, strict: bool = True, workers: int = 1) -> SuperLemmaCertificate:
    """Half-chain super trace-norm witness at L = 2 plus the Pauli scan on the identity block.

    With U~ = (U_I x U_0)(U_L x U_R) the superunitary factors as U_LR U_I0, so the
    witness compares tr_R(U_I0 R_i U_I0^dagger) with U_L^dagger tr_R(R_f) U_L.
    """
    lat = ca.lattice
    if lat.l < MIN_CIRCUIT_L:
        raise DomainError(f"super lemma needs L = 2, got L={lat.l}")
    if lat.l > MIN_CIRCUIT_L:
        raise ResourceError(f"super lemma half-chain superspace is exact only at L = 2, got L={lat.l}")
    regions = paper_regions(lat)
    left = regions["left"]
    R_i, R_f = SuperState.initial(lat), SuperState.final(lat)

    pieces = [_conjugated_piece(R_i, ca.u_0, left), _conjugated_piece(R_i, ca.u_i, left)]
    covered = set(ca.u_0.sites) | set(ca.u_i.sites)
    rest = [s for s in left if s not in covered]
    if rest:
        pieces.append((tuple(rest), R_i.restrict(rest).dense()))
    A = _assemble(pieces, left.sites)

    R_L = superoperator_matrix(ca.u_l)
    B = R_L.conj().T @ R_f.restrict(left).dense() @ R_L
    halfchain = trace_norm(A - B)

    scan = super_distance_scan(ca.assembled, state_regions(lat)["identity_block_i"], workers=workers)
    cert = SuperLemmaCertificate(
        l=lat.l,
        halfchain_value=halfchain,
        max_pauli=scan.argmax,
        max_value=scan.max_value,
        mean_value=scan.mean,
        min_value=float(min(scan.values)),
        n_strings=len(scan.values),
    )
    log.info("super lemma: halfchain=%.6f max=%.6f at %s", halfchain, scan.max_value, scan.argmax)
    return cert.require() if strict else cert


# --- Liouvillian identities ----------------------------------------------------


def liouvillian_identity_check(H_term: DenseOperator, A: DenseOperator) -> float:
    """||i[H_S, I_S x A_{S^c}]||_F; zero for disjoint supports."""
    if set(H_term.sites) & set(A.sites):
        raise DomainError(f"supports overlap: {H_term.sites} and {A.sites}")
    sites = _union(H_term.sites, A.sites)
    h, a = embed(H_term, sites).matrix, embed(A, sites).matrix
    return frobenius_norm(1j * (h @ a - a @ h))


def liouvillian_reality_check(H: DenseOperator, O1: DenseOperator, O2: DenseOperator) -> float:
    """|Im (O1| i[H, O2])| for Hermitian H, O1, O2."""
    for name, op in (("H", H), ("O1", O1), ("O2", O2)):
        if not is_hermitian(op.matrix):
            raise DomainError(f"{name} is not Hermitian")
    sites = _union(H.sites, O1.sites, O2.sites)
    h, o1, o2 = (embed(op, sites) for op in (H, O1, O2))
    generated = DenseOperator(sites, 1j * (h.matrix @ o2.matrix - o2.matrix @ h.matrix))
    return abs(pauli_inner(o1, generated).imag)


# --- two copies ----------------------------------------------------------------


class Copy(str, Enum):
    A = "A"
    B = "B"

    @property
    def other(self) -> Copy:
        return Copy.B if self is Copy.A else Copy.A


Slot = Tuple[int, Copy]


def slot_index(lat: RingLattice, slot: Slot) -> int:
    """Copy A occupies slots 0..n-1, copy B slots n..2n-1."""
    x, c = slot
    return lat.site(x) + (lat.n if Copy(c) is Copy.B else 0)


def inversion_map(x: int, copy: Copy | str, lat: RingLattice) -> Slot:
    """R: [x]_A <-> [4L+1-x]_B."""
    return lat.site(1 - x), Copy(copy).other


def _slot_permutation(lat: RingLattice, moves: Dict[Slot, Slot]) -> np.ndarray:
    mapping = list(range(2 * lat.n))
    for src, dst in moves.items():
        mapping[slot_index(lat, src)] = slot_index(lat, dst)
    return permutation_unitary(mapping)


def _all_slots(lat: RingLattice) -> List[Slot]:
    return [(x, c) for c in Copy for x in range(lat.n)]


def inversion_unitary(lat: RingLattice) -> TwoCopyOperator:
    require_dense(2 * lat.n, "two-copy operator")
    P = _slot_permutation(lat, {s: inversion_map(*s, lat) for s in _all_slots(lat)})
    return TwoCopyOperator.from_dense(lat, P)


def doubled_shift(lat: RingLattice) -> TwoCopyOperator:
    """U_sh x U_sh^-1 on copies A and B."""
    require_dense(2 * lat.n, "two-copy operator")
    sh = build_shift(lat).matrix
    return TwoCopyOperator.from_dense(lat, np.kron(sh, sh.conj().T))


@dataclass(frozen=True, eq=False)
class TwoCopyOperator:
    """Tensor product of factors on disjoint slot groups; untouched slots carry identity."""

    lattice: RingLattice
    factors: Tuple[Tuple[Tuple[Slot, ...], np.ndarray], ...]

    @classmethod
    def from_dense(cls, lat: RingLattice, matrix: np.ndarray) -> TwoCopyOperator:
        return cls(lat, ((tuple(_all_slots(lat)), np.asarray(matrix, dtype=complex)),))

    @property
    def support_a(self) -> Tuple[int, ...]:
        return tuple(sorted({x for slots, _ in self.factors for x, c in slots if c is Copy.A}))

    @property
    def support_b(self) -> Tuple[int, ...]:
        return tuple(sorted({x for slots, _ in self.factors for x, c in slots if c is Copy.B}))

    @property
    def separable(self) -> bool:
        return all(len({c for _, c in slots}) == 1 for slots, _ in self.factors)

    def dense(self) -> np.ndarray:
        lat = self.lattice
        require_dense(2 * lat.n, "two-copy operator")
        order: List[int] = []
        out = np.ones((1, 1), dtype=complex)
        for slots, m in self.factors:
            order.extend(slot_index(lat, s) for s in slots)
            out = np.kron(out, m)
        return embed_local(out, order, list(range(2 * lat.n)))

    def is_hermitian(self) -> bool:
        return all(is_hermitian(m) for _, m in self.factors)


_SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
_HALF_ID = np.eye(2, dtype=complex) / 2


def swap_string(L: int, shifted: bool = False) -> TwoCopyOperator:
    """S_i: SWAP_{[x]_A, [4L+1-x]_B} on x in [L+1, 3L], (I/2) on every other slot.
    ``shifted`` gives S_f, with A labels moved up one site and B labels down one."""
    lat = RingLattice(L)
    da, db = (1, -1) if shifted else (0, 0)
    inside = set(lat.span(L + 1, 3 * L))
    factors = []
    used = set()
    for x in sorted(inside):
        a = (lat.site(x + da), Copy.A)
        b = (lat.site(1 - x + db), Copy.B)
        factors.append(((a, b), _SWAP))
        used.update((a, b))
    for s in _all_slots(lat):
        if s not in used:
            factors.append(((s,), _HALF_ID))
    return TwoCopyOperator(lat, tuple(factors))


def reflection_string(L: int) -> np.ndarray:
    """R applied to the slots of [L+1, 3L] in both copies, with I/2 on the rest."""
    lat = RingLattice(L)
    require_dense(2 * lat.n, "two-copy operator")
    inside = set(lat.span(L + 1, 3 * L))
    moves = {s: inversion_map(*s, lat) for s in _all_slots(lat) if s[0] in inside}
    n_out = 2 * lat.n - len(moves)
    return _slot_permutation(lat, moves) / 2.0**n_out


@dataclass(frozen=True, eq=False)
class TwoCopyTerm:
    slots: Tuple[Tuple[int, Optional[Copy]], ...]
    matrix: np.ndarray

    @property
    def tagged(self) -> bool:
        return all(c is not None for _, c in self.slots)

    @property
    def copies(self) -> frozenset:
        return frozenset(c for _, c in self.slots)


@dataclass(frozen=True, eq=False)
class TwoCopyModel:
    lattice: RingLattice
    terms: Tuple[TwoCopyTerm, ...] = ()

    def term_dense(self, term: TwoCopyTerm) -> np.ndarray:
        if not term.tagged:
            raise DomainError(f"term on {term.slots} has an untagged slot")
        idx = [slot_index(self.lattice, s) for s in term.slots]
        return embed_local(term.matrix, idx, list(range(2 * self.lattice.n)))

    def dense(self) -> np.ndarray:
        require_dense(2 * self.lattice.n, "two-copy model")
        dim = 4**self.lattice.n
        out = np.zeros((dim, dim), dtype=complex)
        for term in self.terms:
            out += self.term_dense(term)
        return out


def separability_check(model: TwoCopyModel) -> bool:
    """True iff no term couples copy A to copy B."""
    for term in model.terms:
        if not term.tagged:
            raise DomainError(f"term on {term.slots} has an untagged slot")
    return all(len(term.copies) == 1 for term in model.terms)


@dataclass(frozen=True, eq=False)
class Depth2Circuit:
    """Two layers of SWAPs, each generated by (pi/2)(SWAP - I) for unit time."""

    model: TwoCopyModel
    layers: Tuple[Tuple[Tuple[Slot, Slot], ...], Tuple[Tuple[Slot, Slot], ...]]

    def layer_unitary(self, index: int) -> np.ndarray:
        lat = self.model.lattice
        moves: Dict[Slot, Slot] = {}
        for a, b in self.layers[index]:
            moves[a], moves[b] = b, a
        return _slot_permutation(lat, moves)

    def unitary(self) -> np.ndarray:
        """W = P_rho1 P_rho2."""
        return self.layer_unitary(0) @ self.layer_unitary(1)


def depth2_swap_circuit(lat: RingLattice) -> Depth2Circuit:
    gen = (np.pi / 2) * (_SWAP - np.eye(4))
    rho1 = tuple(((x, Copy.A), (x, Copy.B)) for x in range(lat.n))
    rho2 = tuple(((x, Copy.A), (lat.site(x - 1), Copy.B)) for x in range(lat.n))
    terms = tuple(TwoCopyTerm((a, b), gen) for a, b in rho1 + rho2)
    return Depth2Circuit(TwoCopyModel(lat, terms), (rho1, rho2))


def _random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (g + g.conj().T) / 2
    return h / np.linalg.norm(h, 2)


def symmetric_separable_model(lat: RingLattice, seed: int = 0) -> TwoCopyModel:
    """Random nearest-neighbor terms on copy A, each paired with its R-image on copy B."""
    rng = np.random.default_rng(seed)
    terms = []
    for x in range(lat.n):
        h = _random_hermitian(4, rng)
        slots = ((x, Copy.A), (lat.site(x + 1), Copy.A))
        terms.append(TwoCopyTerm(slots, h))
        terms.append(TwoCopyTerm(tuple(inversion_map(y, c, lat) for y, c in slots), h))
    return TwoCopyModel(lat, tuple(terms))


def _straddles(term: TwoCopyTerm, inside: set) -> bool:
    return len({x in inside for x, _ in term.slots}) > 1


def boundary_commutators(model: TwoCopyModel, L: Optional[int] = None) -> List[Dict[str, object]]:
    """||i[H_orbit, S_i]||_F for every R-orbit of terms, with its boundary flag."""
    lat = model.lattice
    if L is not None and L != lat.l:
        raise DomainError(f"model lives at L={lat.l}, asked for L={L}")
    S = swap_string(lat.l).dense()
    inside = set(lat.span(lat.l + 1, 3 * lat.l))
    keyed = {frozenset(t.slots): i for i, t in enumerate(model.terms)}
    seen: set = set()
    rows = []
    for i, term in enumerate(model.terms):
        if i in seen:
            continue
        image = frozenset(inversion_map(x, c, lat) for x, c in term.slots)
        j = keyed.get(image, i)
        orbit = sorted({i, j})
        seen.update(orbit)
        h = sum(model.term_dense(model.terms[k]) for k in orbit)
        value = frobenius_norm(1j * (h @ S - S @ h))
        rows.append(
            {
                "terms": orbit,
                "slots": [f"{x}{c.value}" for x, c in term.slots],
                "boundary": any(_straddles(model.terms[k], inside) for k in orbit),
                "commutator": value,
            }
        )
    return rows
