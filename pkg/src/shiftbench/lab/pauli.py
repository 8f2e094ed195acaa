"""Pauli strings and the normalized operator inner product.

The coefficient transform treats every qubit's 2x2 block as a vector in C^4 and maps it
to the I, X, Y, Z coefficients with one 4x4 matrix per axis, so a k-site decomposition
costs O(k 4^(k+1)) instead of 4^k dense traces.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np

from ..common.errors import DomainError, ResourceError
from .lattice import Region
from .linalg import DenseOperator, _site_tuple

MAX_PAULI_SITES = 8
LETTERS = "IXYZ"

__all__ = [
    "MAX_PAULI_SITES",
    "LETTERS",
    "PAULI_MATRICES",
    "PauliString",
    "pauli_inner",
    "pauli_coefficients",
    "pauli_reconstruct",
    "pauli_decompose",
    "enumerate_paulis",
]

_SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
PAULI_MATRICES: Dict[str, np.ndarray] = {c: _SIGMA[i] for i, c in enumerate(LETTERS)}

# sigma_a sigma_b = phase * sigma_c
_PRODUCT: Dict[Tuple[str, str], Tuple[complex, str]] = {}
for _a, _b in itertools.product(LETTERS, repeat=2):
    _m = PAULI_MATRICES[_a] @ PAULI_MATRICES[_b]
    for _c in LETTERS:
        _ph = np.trace(PAULI_MATRICES[_c] @ _m) / 2
        if abs(_ph) > 0.5:
            _PRODUCT[(_a, _b)] = (complex(np.round(_ph.real) + 1j * np.round(_ph.imag)), _c)
            break

_PHASES = (1, -1, 1j, -1j)
_PHASE_TEXT = {1: "", -1: "-", 1j: "i", -1j: "-i"}
_TOKEN = re.compile(r"^([IXYZ])(\d+)$")

# forward: vec(2x2) indexed 2r+c -> coefficient a ; inverse: coefficient a -> vec
_FWD = _SIGMA.transpose(0, 2, 1).reshape(4, 4) / 2
_INV = _SIGMA.transpose(1, 2, 0).reshape(4, 4)


def _check_phase(phase: complex) -> complex:
    for p in _PHASES:
        if abs(phase - p) < 1e-12:
            return complex(p)
    raise DomainError(f"Pauli phase must be one of +-1, +-i, got {phase!r}")


@dataclass(frozen=True)
class PauliString:
    letters: str
    sites: Tuple[int, ...]
    phase: complex = 1

    def __post_init__(self) -> None:
        sites = _site_tuple(self.sites)
        letters = str(self.letters).upper()
        if len(letters) != len(sites):
            raise DomainError(f"{len(letters)} letters for {len(sites)} sites")
        if any(c not in LETTERS for c in letters):
            raise DomainError(f"letters must come from {LETTERS}: {self.letters!r}")
        if list(sites) != sorted(set(sites)):
            raise DomainError(f"Pauli sites must be ascending and distinct: {sites}")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "phase", _check_phase(self.phase))

    @classmethod
    def parse(cls, text: str, sites: Optional[Iterable[int]] = None) -> PauliString:
        """Read the "X0 Z3" form. Letters absent from ``sites`` are identities."""
        text = text.strip()
        phase: complex = 1
        for prefix, p in (("-i", -1j), ("+i", 1j), ("i", 1j), ("-", -1), ("+", 1)):
            if text.startswith(prefix):
                phase, text = p, text[len(prefix):].strip()
                break
        placed: Dict[int, str] = {}
        for tok in text.split():
            if tok == "I":
                continue
            m = _TOKEN.match(tok)
            if not m:
                raise DomainError(f"bad Pauli token {tok!r} in {text!r}")
            site = int(m.group(2))
            if site in placed:
                raise DomainError(f"site {site} appears twice in {text!r}")
            if m.group(1) != "I":
                placed[site] = m.group(1)
        all_sites = sorted(set(placed) | set(int(s) for s in (sites or ())))
        if sites is not None and not set(placed) <= set(int(s) for s in sites):
            raise DomainError(f"{text!r} acts outside sites {sorted(sites)}")
        return cls("".join(placed.get(s, "I") for s in all_sites), tuple(all_sites), phase)

    @classmethod
    def identity(cls, sites: Iterable[int]) -> PauliString:
        sites = _site_tuple(sites)
        return cls("I" * len(sites), sites)

    def __str__(self) -> str:
        body = " ".join(f"{c}{s}" for c, s in zip(self.letters, self.sites) if c != "I")
        return _PHASE_TEXT[self.phase] + (body or "I")

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(s for c, s in zip(self.letters, self.sites) if c != "I")

    @property
    def weight(self) -> int:
        return len(self.support)

    def letter_at(self, site: int) -> str:
        try:
            return self.letters[self.sites.index(site)]
        except ValueError:
            return "I"

    def on(self, sites: Iterable[int]) -> PauliString:
        """The same string over a larger site set, padded with identities."""
        sites = tuple(sorted(_site_tuple(sites)))
        if not set(self.support) <= set(sites):
            raise DomainError(f"{self} does not fit on sites {sites}")
        return PauliString("".join(self.letter_at(s) for s in sites), sites, self.phase)

    def __mul__(self, other: PauliString) -> PauliString:
        sites = tuple(sorted(set(self.sites) | set(other.sites)))
        phase = self.phase * other.phase
        out = []
        for s in sites:
            ph, c = _PRODUCT[(self.letter_at(s), other.letter_at(s))]
            phase *= ph
            out.append(c)
        return PauliString("".join(out), sites, phase)

    def shifted(self, offset: int, n: int) -> PauliString:
        moved = sorted(((s + offset) % n, c) for c, s in zip(self.letters, self.sites))
        return PauliString("".join(c for _, c in moved), tuple(s for s, _ in moved), self.phase)

    def to_operator(self, sites: Optional[Iterable[int]] = None) -> DenseOperator:
        p = self.on(sites) if sites is not None else self
        m = np.ones((1, 1), dtype=complex)
        for c in p.letters:
            m = np.kron(m, PAULI_MATRICES[c])
        return DenseOperator(p.sites, p.phase * m)


def _as_operator(O: DenseOperator | PauliString) -> DenseOperator:
    return O.to_operator() if isinstance(O, PauliString) else O


def pauli_inner(O1: DenseOperator | PauliString, O2: DenseOperator | PauliString) -> complex:
    """(O1|O2) = 2^-k tr(O1^dagger O2)."""
    a, b = _as_operator(O1), _as_operator(O2)
    if a.sites != b.sites:
        raise DomainError(f"pauli_inner needs equal supports: {a.sites} vs {b.sites}")
    return complex(np.vdot(a.matrix, b.matrix) / a.dim)


def _require_sites(k: int) -> None:
    if k > MAX_PAULI_SITES:
        raise ResourceError(f"Pauli basis on {k} sites exceeds the cap of {MAX_PAULI_SITES}")


def _apply_per_axis(M: np.ndarray, t: np.ndarray) -> np.ndarray:
    for j in range(t.ndim):
        t = np.moveaxis(np.tensordot(M, t, axes=(1, j)), 0, j)
    return t


def pauli_coefficients(matrix: np.ndarray) -> np.ndarray:
    """All 4^k coefficients of a 2^k x 2^k matrix, in enumerate_paulis order."""
    dim = matrix.shape[0]
    k = dim.bit_length() - 1
    if 2**k != dim:
        raise DomainError(f"dimension {dim} is not a power of two")
    _require_sites(k)
    if k == 0:
        return matrix.reshape(1).astype(complex)
    axes = [a for j in range(k) for a in (j, k + j)]
    t = np.asarray(matrix, dtype=complex).reshape((2,) * (2 * k)).transpose(axes)
    return _apply_per_axis(_FWD, t.reshape((4,) * k)).reshape(-1)


def pauli_reconstruct(coefficients: Sequence[complex]) -> np.ndarray:
    c = np.asarray(coefficients, dtype=complex)
    k = (c.size.bit_length() - 1) // 2
    if 4**k != c.size:
        raise DomainError(f"{c.size} coefficients is not a power of four")
    if k == 0:
        return c.reshape(1, 1)
    t = _apply_per_axis(_INV, c.reshape((4,) * k)).reshape((2,) * (2 * k))
    back = list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2))
    return t.transpose(back).reshape(2**k, 2**k)


def enumerate_paulis(region: Region | Iterable[int]) -> Iterator[PauliString]:
    sites = tuple(sorted(_site_tuple(region)))
    _require_sites(len(sites))
    for letters in itertools.product(LETTERS, repeat=len(sites)):
        yield PauliString("".join(letters), sites)


def pauli_decompose(A: DenseOperator) -> Dict[PauliString, complex]:
    coeffs = pauli_coefficients(A.matrix)
    return {p: complex(c) for p, c in zip(enumerate_paulis(A.sites), coeffs)}
