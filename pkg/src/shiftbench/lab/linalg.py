"""Dense operators on sets of ring sites.

Tensor convention: the lowest site label is the most significant qubit. Every helper
here also takes a ``local_dim`` so the same code serves the d = 4 operator-space
(qudit) picture used by the Super2 certificates.
"""
from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg as sla
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, svds

from ..common.errors import DomainError, NumericError, ResourceError
from .lattice import Region

log = logging.getLogger(__name__)

MAX_DENSE_SITES = 12
HERMITIAN_TOL = 1e-10
DENSITY_TOL = 1e-12
ITERATIVE_NORM_DIM = 1024

__all__ = [
    "MAX_DENSE_SITES",
    "NormMode",
    "HERMITIAN_TOL",
    "Tolerances",
    "TOL",
    "override_tolerances",
    "DenseOperator",
    "DensityMatrix",
    "require_dense",
    "operator_norm",
    "frobenius_norm",
    "trace_norm",
    "partial_trace",
    "embed",
    "embed_local",
    "trace_local",
    "hermitian_expm",
    "expm_from_eigh",
    "haar_unitary",
    "random_unitary",
    "sample_seed",
    "basis_permutation",
    "permutation_unitary",
    "is_hermitian",
]


class NormMode(str, Enum):
    OPERATOR = "operator"
    FROBENIUS = "frobenius"


@dataclass
class Tolerances:
    """Slack for certificate inequalities and unitarity checks, read at call time."""

    certificate: float = 1e-9
    unitary: float = 1e-10


TOL = Tolerances()


@contextmanager
def override_tolerances(certificate: Optional[float] = None, unitary: Optional[float] = None) -> Iterator[Tolerances]:
    saved = (TOL.certificate, TOL.unitary)
    if certificate is not None:
        TOL.certificate = float(certificate)
    if unitary is not None:
        TOL.unitary = float(unitary)
    try:
        yield TOL
    finally:
        TOL.certificate, TOL.unitary = saved


SiteSpec = Union[Region, Iterable[int]]
Matrixish = Union["DenseOperator", np.ndarray]


def _site_tuple(sites: SiteSpec) -> Tuple[int, ...]:
    if isinstance(sites, Region):
        return sites.sites
    return tuple(int(s) for s in sites)


def require_dense(n_sites: int, what: str = "operator", cap: int = MAX_DENSE_SITES) -> None:
    if n_sites > cap:
        raise ResourceError(f"{what} on {n_sites} sites exceeds the dense cap of {cap}")


# --- raw kernels on arrays -------------------------------------------------


def embed_local(
    matrix: np.ndarray, sites: Sequence[int], target: Sequence[int], local_dim: int = 2
) -> np.ndarray:
    """Tensor ``matrix`` (ordered by ``sites``, any order) with identity on the rest of
    ``target`` and return it in ``target`` order."""
    sites, target = list(sites), list(target)
    missing = [s for s in sites if s not in target]
    if missing:
        raise DomainError(f"sites {missing} not in target {target}")
    rest = [s for s in target if s not in sites]
    k = len(target)
    big = np.kron(matrix, np.eye(local_dim ** len(rest)))
    current = sites + rest
    if current == target:
        return big
    perm = [current.index(s) for s in target]
    shape = (local_dim,) * (2 * k)
    return (
        big.reshape(shape)
        .transpose(perm + [k + p for p in perm])
        .reshape(local_dim**k, local_dim**k)
    )


def trace_local(
    matrix: np.ndarray, sites: Sequence[int], traced: Iterable[int], local_dim: int = 2
) -> np.ndarray:
    """Partial trace over ``traced``; the result is ordered like the kept ``sites``."""
    sites = list(sites)
    traced = set(traced)
    keep = [s for s in sites if s not in traced]
    gone = [s for s in sites if s in traced]
    if not gone:
        return matrix
    k = len(sites)
    order = [sites.index(s) for s in keep + gone]
    dk, dt = local_dim ** len(keep), local_dim ** len(gone)
    t = matrix.reshape((local_dim,) * (2 * k)).transpose(order + [k + i for i in order])
    return np.einsum("ajbj->ab", t.reshape(dk, dt, dk, dt))


def _mat(A: Matrixish) -> np.ndarray:
    return A.matrix if isinstance(A, DenseOperator) else np.asarray(A, dtype=complex)


def _finite(A: Matrixish) -> np.ndarray:
    m = _mat(A)
    if not np.all(np.isfinite(m)):
        raise NumericError("operator has non-finite entries")
    return m


def is_hermitian(A: Matrixish, tol: float = HERMITIAN_TOL) -> bool:
    m = _mat(A)
    return bool(m.size == 0 or np.max(np.abs(m - m.conj().T)) <= tol)


# --- operators -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DenseOperator:
    sites: Tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        sites = _site_tuple(self.sites)
        if list(sites) != sorted(set(sites)):
            raise DomainError(f"operator sites must be ascending and distinct: {sites}")
        m = np.asarray(self.matrix, dtype=complex)
        dim = 2 ** len(sites)
        if m.shape != (dim, dim):
            raise DomainError(f"matrix shape {m.shape} does not match {len(sites)} sites")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, sites: SiteSpec) -> DenseOperator:
        sites = _site_tuple(sites)
        return cls(sites, np.eye(2 ** len(sites), dtype=complex))

    @classmethod
    def zeros(cls, sites: SiteSpec) -> DenseOperator:
        sites = _site_tuple(sites)
        d = 2 ** len(sites)
        return cls(sites, np.zeros((d, d), dtype=complex))

    @property
    def support(self) -> Tuple[int, ...]:
        return self.sites

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> DenseOperator:
        return DenseOperator(self.sites, self.matrix.conj().T)

    def on(self, target: SiteSpec) -> DenseOperator:
        return embed(self, target)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return is_hermitian(self.matrix, tol)

    def is_unitary(self, tol: Optional[float] = None) -> bool:
        m = self.matrix
        return operator_norm(m.conj().T @ m - np.eye(self.dim)) <= (TOL.unitary if tol is None else tol)

    def _aligned(self, other: DenseOperator) -> Tuple[Tuple[int, ...], np.ndarray, np.ndarray]:
        if other.sites == self.sites:
            return self.sites, self.matrix, other.matrix
        union = tuple(sorted(set(self.sites) | set(other.sites)))
        return union, embed_local(self.matrix, self.sites, union), embed_local(
            other.matrix, other.sites, union
        )

    def __matmul__(self, other: DenseOperator) -> DenseOperator:
        sites, a, b = self._aligned(other)
        return DenseOperator(sites, a @ b)

    def __add__(self, other: DenseOperator) -> DenseOperator:
        sites, a, b = self._aligned(other)
        return DenseOperator(sites, a + b)

    def __sub__(self, other: DenseOperator) -> DenseOperator:
        sites, a, b = self._aligned(other)
        return DenseOperator(sites, a - b)

    def __neg__(self) -> DenseOperator:
        return DenseOperator(self.sites, -self.matrix)

    def __mul__(self, scalar: complex) -> DenseOperator:
        return DenseOperator(self.sites, self.matrix * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> DenseOperator:
        return DenseOperator(self.sites, self.matrix / scalar)

    def commutator(self, other: DenseOperator) -> DenseOperator:
        return self @ other - other @ self


@dataclass(frozen=True, eq=False)
class DensityMatrix(DenseOperator):
    """Hermitian, unit trace, positive (positivity checked up to 1024 dimensions)."""

    def __post_init__(self) -> None:
        super().__post_init__()
        m = self.matrix
        if not is_hermitian(m, DENSITY_TOL):
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > DENSITY_TOL:
            raise DomainError(f"density matrix trace {np.trace(m).real:.3e} != 1")
        if self.dim <= ITERATIVE_NORM_DIM and sla.eigvalsh(m).min() < -TOL.unitary:
            raise DomainError("density matrix has a negative eigenvalue")


def _wrap(A: Matrixish, m: np.ndarray) -> Matrixish:
    return DenseOperator(A.sites, m) if isinstance(A, DenseOperator) else m


# --- norms -----------------------------------------------------------------

_V0_RNG_SEED = 20240607


def _start_vector(dim: int) -> np.ndarray:
    rng = np.random.default_rng(_V0_RNG_SEED)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def operator_norm(A: Matrixish) -> float:
    """Largest singular value. Large matrices go through ARPACK with a fixed start
    vector; a dense SVD is the fallback."""
    m = _finite(A)
    if m.size == 0:
        return 0.0
    dim = m.shape[0]
    if dim > ITERATIVE_NORM_DIM:
        try:
            if is_hermitian(m):
                vals = eigsh(m, k=1, which="LM", v0=_start_vector(dim), return_eigenvectors=False)
                return float(abs(vals[0]))
            vals = svds(m, k=1, v0=_start_vector(dim), return_singular_vectors=False)
            return float(vals[0])
        except ArpackNoConvergence:
            log.warning("ARPACK did not converge on a %dx%d norm; using dense SVD", dim, dim)
    return float(sla.svdvals(m)[0])


def frobenius_norm(A: Matrixish) -> float:
    """Normalized: sqrt(tr(A^dagger A) / dim)."""
    m = _finite(A)
    return float(np.linalg.norm(m) / np.sqrt(m.shape[0]))


def trace_norm(A: Matrixish) -> float:
    m = _finite(A)
    if is_hermitian(m, 1e-12):
        return float(np.abs(sla.eigvalsh((m + m.conj().T) / 2)).sum())
    return float(sla.svdvals(m).sum())


# --- structure -------------------------------------------------------------


def partial_trace(A: DenseOperator, traced: SiteSpec) -> DenseOperator:
    traced = _site_tuple(traced)
    extra = set(traced) - set(A.sites)
    if extra:
        raise DomainError(f"cannot trace sites {sorted(extra)} outside support {A.sites}")
    keep = tuple(s for s in A.sites if s not in traced)
    return DenseOperator(keep, trace_local(A.matrix, A.sites, traced))


def embed(A: DenseOperator, target: SiteSpec) -> DenseOperator:
    target = tuple(sorted(_site_tuple(target)))
    if not set(A.sites) <= set(target):
        raise DomainError(f"support {A.sites} is not inside target {target}")
    if target == A.sites:
        return A
    return DenseOperator(target, embed_local(A.matrix, A.sites, target))


# --- exponentials and sampling --------------------------------------------


def expm_from_eigh(w: np.ndarray, V: np.ndarray, t: float) -> np.ndarray:
    return (V * np.exp(-1j * w * t)) @ V.conj().T


def hermitian_expm(H: Matrixish, t: float = 1.0, tol: float = HERMITIAN_TOL) -> Matrixish:
    """exp(-iHt) through the eigendecomposition of H."""
    m = _finite(H)
    if not is_hermitian(m, tol):
        raise DomainError("hermitian_expm needs a Hermitian generator")
    w, V = sla.eigh((m + m.conj().T) / 2)
    return _wrap(H, expm_from_eigh(w, V, t))


def haar_unitary(dim: int, seed: int | np.random.Generator | None) -> np.ndarray:
    """QR of a complex Ginibre matrix with the phases of R's diagonal divided out."""
    if isinstance(dim, bool) or int(dim) != dim or dim < 1:
        raise DomainError(f"Haar dimension must be a positive integer, got {dim!r}")
    rng = np.random.default_rng(seed)
    dim = int(dim)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_unitary(sites: SiteSpec, seed: int | np.random.Generator | None) -> DenseOperator:
    sites = tuple(sorted(_site_tuple(sites)))
    return DenseOperator(sites, haar_unitary(2 ** len(sites), seed))


def sample_seed(master: int, index: int) -> int:
    """Per-sample seed derived from a master seed by counting."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1)[0])


# --- permutations ----------------------------------------------------------


def basis_permutation(mapping: Sequence[int]) -> np.ndarray:
    """Index map ``out`` with P|b> = |out[b]>, where the bit in slot s moves to slot
    mapping[s]; then P O_s P^dagger = O_{mapping[s]}."""
    m = len(mapping)
    if sorted(mapping) != list(range(m)):
        raise DomainError(f"not a permutation of {m} slots: {list(mapping)}")
    idx = np.arange(2**m, dtype=np.int64)
    out = np.zeros_like(idx)
    for s, target in enumerate(mapping):
        bit = (idx >> (m - 1 - s)) & 1
        out |= bit << (m - 1 - target)
    return out


def permutation_unitary(mapping: Sequence[int]) -> np.ndarray:
    out = basis_permutation(mapping)
    P = np.zeros((out.size, out.size), dtype=complex)
    P[out, np.arange(out.size)] = 1.0
    return P
