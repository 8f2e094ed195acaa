"""The shift unitary, the hard states and the exact certificates built on them."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg as sla

from ..common.errors import DomainError, NumericError
from .bounds import BoundParams
from .certificate import Certificate, unreported
from .evolution import CircuitApprox, circuitize
from .hamiltonian import HamiltonianModel
from .lattice import RingLattice, half_chains, state_regions
from .linalg import (
    TOL,
    DenseOperator,
    DensityMatrix,
    NormMode,
    basis_permutation,
    embed,
    frobenius_norm,
    operator_norm,
    partial_trace,
    permutation_unitary,
    require_dense,
    trace_norm,
)

log = logging.getLogger(__name__)

IDENTITY_CHECK_TOL = 1e-9

__all__ = [
    "ShiftUnitary",
    "HardState",
    "build_shift",
    "parse_bits",
    "hard_state",
    "final_state",
    "LemmaCertificate",
    "lemma_shift_rho_certificate",
    "JBasisWitness",
    "jbasis_witness",
    "shift_distance",
    "FidelityChain",
    "fidelity_chain",
    "Verdict",
    "end_to_end",
]

Bits = Union[str, Sequence[int]]


@dataclass(frozen=True, eq=False)
class ShiftUnitary:
    n: int
    operator: DenseOperator
    permutation: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix

    def conjugate(self, A: DenseOperator) -> DenseOperator:
        """U_sh^dagger A U_sh, which moves A one site up."""
        a = embed(A, self.operator.sites).matrix
        return DenseOperator(self.operator.sites, self.matrix.conj().T @ a @ self.matrix)

    def power(self, k: int) -> DenseOperator:
        return DenseOperator(self.operator.sites, np.linalg.matrix_power(self.matrix, k))

    def overlap(self, U: DenseOperator) -> complex:
        """tr(U_sh^dagger U) read off the permuted diagonal."""
        idx = np.arange(self.permutation.size)
        return complex(U.matrix[self.permutation, idx].sum())


def _conjugation_moves_up(out: np.ndarray, n: int) -> bool:
    """P^dagger X_x P = X_{x+1} and P^dagger Z_x P = Z_{x+1} for every x, by index arithmetic."""
    idx = np.arange(out.size, dtype=np.int64)
    inv = np.empty_like(out)
    inv[out] = idx
    for x in range(n):
        m_x = 1 << (n - 1 - x)
        m_next = 1 << (n - 1 - (x + 1) % n)
        if not np.array_equal(inv[out ^ m_x], idx ^ m_next):
            return False
        if not np.array_equal((out & m_x) != 0, (idx & m_next) != 0):
            return False
    return True


def build_shift(lat: RingLattice | int) -> ShiftUnitary:
    n = lat.n if isinstance(lat, RingLattice) else int(lat)
    if n < 2:
        raise DomainError(f"the shift needs at least two sites, got {n}")
    require_dense(n, "shift unitary")
    for step in (-1, 1):
        out = basis_permutation([(s + step) % n for s in range(n)])
        if _conjugation_moves_up(out, n):
            break
    else:
        raise NumericError("no basis relabelling conjugates X_x to X_{x+1}")
    P = permutation_unitary([(s + step) % n for s in range(n)])
    return ShiftUnitary(n, DenseOperator(tuple(range(n)), P), out)


def parse_bits(z: Bits, length: int) -> Tuple[int, ...]:
    bits = tuple(int(c) for c in z) if isinstance(z, str) else tuple(int(b) for b in z)
    if len(bits) != length:
        raise DomainError(f"bit string must have length {length}, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise DomainError(f"bit string must contain only 0/1: {z!r}")
    return bits


@dataclass(frozen=True, eq=False)
class HardState:
    lattice: RingLattice
    z: Tuple[int, ...]
    rho: DensityMatrix
    zero_block: Tuple[int, ...]

    @property
    def purity(self) -> float:
        return float(np.real(np.sum(np.abs(self.rho.matrix) ** 2)))


def _product_state(lat: RingLattice, assignment: Dict[int, int]) -> DensityMatrix:
    """Diagonal state: fixed bits on the assigned sites, I/2 elsewhere."""
    n = lat.n
    require_dense(n, "hard state")
    idx = np.arange(2**n, dtype=np.int64)
    ok = np.ones(idx.size, dtype=bool)
    for site, bit in assignment.items():
        ok &= ((idx >> (n - 1 - site)) & 1) == bit
    diag = ok / 2.0 ** (n - len(assignment))
    return DensityMatrix(tuple(range(n)), np.diag(diag.astype(complex)))


def hard_state(lat: RingLattice, z: Bits = None) -> HardState:
    """rho_i(z): z on the zero block {1-L..L} (z[k] at site 1-L+k), I/2 on {L+1..3L}."""
    L = lat.l
    bits = parse_bits(z if z is not None else "0" * 2 * L, 2 * L)
    sites = [lat.site(1 - L + k) for k in range(2 * L)]
    rho = _product_state(lat, dict(zip(sites, bits)))
    return HardState(lat, bits, rho, state_regions(lat)["zero_block_i"].sites)


def final_state(lat: RingLattice, z: Bits = None) -> HardState:
    """rho_f(z) = U_sh rho_i(z) U_sh^dagger: the zero block moved down to {-L..L-1}."""
    L = lat.l
    bits = parse_bits(z if z is not None else "0" * 2 * L, 2 * L)
    sites = [lat.site(-L + k) for k in range(2 * L)]
    rho = _product_state(lat, dict(zip(sites, bits)))
    return HardState(lat, bits, rho, state_regions(lat)["zero_block_f"].sites)


def _conj(U: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return U @ rho @ U.conj().T


@dataclass(frozen=True, eq=False)
class LemmaCertificate(Certificate):
    name = "shift-rho lemma"

    l: int
    z: str
    distance: float
    halfchain_lower: float
    spectral_norm: float

    def checks(self) -> Dict[str, bool]:
        return {
            "||tr_R(U_0^dag rho_f U_0)|| <= 2^(-L-1)": self.spectral_norm <= 2.0 ** (-self.l - 1) + TOL.certificate,
            "halfchain <= distance": self.halfchain_lower <= self.distance + TOL.certificate,
            "distance >= 1/2": self.distance >= 0.5 - TOL.certificate,
        }


def _reduced_final(ca: CircuitApprox, rho_f: DensityMatrix) -> DenseOperator:
    """tr_R(U_0^dagger rho_f U_0) on the left half."""
    full = rho_f.sites
    u0 = embed(ca.u_0, full).matrix
    right = half_chains(ca.lattice)["right"].sites
    return partial_trace(DenseOperator(full, u0.conj().T @ rho_f.matrix @ u0), right)


def lemma_shift_rho_certificate(ca: CircuitApprox, z: Bits = None, strict: bool = True) -> LemmaCertificate:
    lat = ca.lattice
    L = lat.l
    rho_i = hard_state(lat, z)
    rho_f = final_state(lat, z)
    Ut = ca.assembled.matrix
    distance = trace_norm(_conj(Ut, rho_i.rho.matrix) - rho_f.rho.matrix)
    right = half_chains(lat)["right"].sites
    rho_iL = partial_trace(rho_i.rho, right)
    sigma = _reduced_final(ca, rho_f.rho)
    halfchain = trace_norm(_conj(ca.u_l.matrix, rho_iL.matrix) - sigma.matrix)
    cert = LemmaCertificate(
        l=L,
        z="".join(map(str, rho_i.z)),
        distance=distance,
        halfchain_lower=halfchain,
        spectral_norm=operator_norm(sigma.matrix),
    )
    log.debug("lemma z=%s: distance=%.6f halfchain=%.6f", cert.z, distance, halfchain)
    return cert.require() if strict else cert


@dataclass(frozen=True, eq=False)
class JBasisWitness(Certificate):
    name = "j-basis witness"

    l: int
    n_support: int
    eigenvalues_ok: bool
    lower: float
    sign_value: float
    trace_distance: float

    def checks(self) -> Dict[str, bool]:
        return {
            "2^L eigenvalues equal 2^-L": self.eigenvalues_ok,
            "trace distance >= sign-unitary value": self.trace_distance >= self.sign_value - TOL.certificate,
            "sign-unitary value >= diagonal sum": self.sign_value >= self.lower - TOL.certificate,
            "diagonal sum >= 1/2": self.lower >= 0.5 - TOL.certificate,
        }


def jbasis_witness(
    u_l: DenseOperator,
    L: int,
    u_0: Optional[DenseOperator] = None,
    z: Bits = None,
    strict: bool = True,
) -> JBasisWitness:
    """Spectrum of U_L rho_{i,L} U_L^dagger and the diagonal-sum lower bound against
    tr_R(U_0^dagger rho_f U_0) in its eigenbasis."""
    lat = RingLattice(L)
    left = half_chains(lat)["left"]
    if u_l.sites != left.sites:
        raise DomainError(f"u_l acts on {u_l.sites}, expected the left half {left.sites}")
    rho_i = hard_state(lat, z)
    right = half_chains(lat)["right"].sites
    rho_L = _conj(u_l.matrix, partial_trace(rho_i.rho, right).matrix)
    w, V = sla.eigh((rho_L + rho_L.conj().T) / 2)
    k = 2**L
    top, rest = w[-k:], w[:-k]
    ok = bool(np.all(np.abs(top - 2.0**-L) <= TOL.unitary) and np.all(np.abs(rest) <= TOL.unitary))
    rho_f = final_state(lat, z).rho
    if u_0 is None:
        sigma = partial_trace(rho_f, right).matrix
    else:
        u0 = embed(u_0, rho_f.sites).matrix
        sigma = partial_trace(DenseOperator(rho_f.sites, u0.conj().T @ rho_f.matrix @ u0), right).matrix
    diag = np.real(np.einsum("ij,ik,kj->j", V.conj(), sigma, V))
    lower = float(np.sum(2.0**-L - diag[-k:]))
    S = V @ np.diag(np.where(np.arange(w.size) >= w.size - k, 1.0, -1.0)) @ V.conj().T
    sign_value = float(np.real(np.trace(S @ (rho_L - sigma))))
    cert = JBasisWitness(
        l=L,
        n_support=int(np.sum(w > 1e-10)),
        eigenvalues_ok=ok,
        lower=lower,
        sign_value=sign_value,
        trace_distance=trace_norm(rho_L - sigma),
    )
    return cert.require() if strict else cert


def shift_distance(
    U: DenseOperator, mode: NormMode | str = NormMode.OPERATOR, shift: Optional[ShiftUnitary] = None
) -> float:
    mode = NormMode(mode)
    n = len(U.sites)
    if U.sites != tuple(range(n)):
        raise DomainError("shift_distance needs an operator on the whole ring")
    if not U.is_unitary():
        raise DomainError("shift_distance needs a unitary")
    sh = shift or build_shift(n)
    if mode is NormMode.OPERATOR:
        return operator_norm(U.matrix - sh.matrix)
    sq = 2.0 - 2.0 ** (1 - n) * sh.overlap(U).real
    direct = frobenius_norm(U.matrix - sh.matrix)
    value = math.sqrt(max(sq, 0.0))
    if abs(value - direct) > IDENTITY_CHECK_TOL:
        raise NumericError(f"Frobenius trace identity {value:.12e} disagrees with direct {direct:.12e}")
    return value


@dataclass(frozen=True, eq=False)
class FidelityChain(Certificate):
    name = "fidelity chain"

    l: int
    per_z: List[Dict[str, object]]
    frobenius_identity: float
    frobenius_direct: float
    sum_re: float
    sum_abs: float
    final: float

    def checks(self) -> Dict[str, bool]:
        links_c = all(z["link_c"] for z in self.per_z)
        links_d = all(z["link_d"] for z in self.per_z)
        return {
            "trace identity matches direct norm": abs(self.frobenius_identity - self.frobenius_direct) <= IDENTITY_CHECK_TOL,
            "2(1-Re f) >= 2(1-|f|) summed": self.sum_re >= self.sum_abs - TOL.certificate,
            "per-z 2(1-|f|) >= D^2/4": links_c,
            "per-z D >= 1/2": links_d,
            "per-z 2(1-|f|) >= 1/16": all(z["fidelity_gap"] >= 1 / 16 - TOL.certificate for z in self.per_z),
            "||U~ - U_sh||_F >= 1/4": self.final >= 0.25 - TOL.certificate,
        }


def fidelity_chain(ca: CircuitApprox, strict: bool = True) -> FidelityChain:
    """Ancilla-free evaluation: f_z = tr(U_sh^dagger U~ rho_i(z))."""
    lat = ca.lattice
    L, n = lat.l, lat.n
    sh = build_shift(lat)
    Ut = ca.assembled
    w_diag = Ut.matrix[sh.permutation, np.arange(sh.permutation.size)]
    zero_sites = [lat.site(1 - L + k) for k in range(2 * L)]
    idx = np.arange(2**n, dtype=np.int64)
    z_index = np.zeros(idx.size, dtype=np.int64)
    for k, site in enumerate(zero_sites):
        z_index = (z_index << 1) | ((idx >> (n - 1 - site)) & 1)
    f = np.bincount(z_index, weights=w_diag.real, minlength=4**L) + 1j * np.bincount(
        z_index, weights=w_diag.imag, minlength=4**L
    )
    f /= 2.0 ** (2 * L)
    per_z = []
    for zi in range(4**L):
        bits = format(zi, f"0{2 * L}b")
        D = lemma_shift_rho_certificate(ca, bits, strict=False).distance
        gap = 2.0 * (1.0 - abs(f[zi]))
        per_z.append(
            {
                "z": bits,
                "f_re": float(f[zi].real),
                "f_abs": float(abs(f[zi])),
                "fidelity_gap": gap,
                "distance": D,
                "link_c": gap >= D**2 / 4.0 - TOL.certificate,
                "link_d": D >= 0.5 - TOL.certificate,
            }
        )
    norm = 2.0 ** (-2 * L)
    sum_re = float(norm * np.sum(2.0 * (1.0 - f.real)))
    sum_abs = float(norm * np.sum(2.0 * (1.0 - np.abs(f))))
    cert = FidelityChain(
        l=L,
        per_z=per_z,
        frobenius_identity=math.sqrt(max(sum_re, 0.0)),
        frobenius_direct=frobenius_norm(Ut.matrix - sh.matrix),
        sum_re=sum_re,
        sum_abs=sum_abs,
        final=math.sqrt(max(sum_abs, 0.0)),
    )
    return cert.require() if strict else cert


@dataclass(frozen=True, eq=False)
class Verdict(Certificate):
    name = "end-to-end"

    l: int
    t_total: float
    err_operator: float
    err_frobenius: float
    approx_shift_operator: float
    approx_shift_frobenius: float
    shift_operator: float
    shift_frobenius: float
    premise: bool
    ell: Optional[int]
    ell_window_ok: bool
    stages: Dict[str, Dict[str, float]]
    lemma: LemmaCertificate
    chain: Optional[FidelityChain] = None
    super_max: Optional[float] = None
    super_argmax: Optional[str] = None
    circuit: object = unreported(default=None)

    def checks(self) -> Dict[str, bool]:
        out = {
            "triangle: ||U-U_sh|| >= ||U~-U_sh|| - ||U-U~||": self.shift_operator
            >= self.approx_shift_operator - self.err_operator - TOL.certificate,
            "triangle (F): ||U-U_sh||_F >= ||U~-U_sh||_F - ||U-U~||_F": self.shift_frobenius
            >= self.approx_shift_frobenius - self.err_frobenius - TOL.certificate,
            "||U~-U_sh|| >= 1/4": self.approx_shift_operator >= 0.25 - TOL.certificate,
            "||U-U_sh|| >= 1/8 when ||U-U~|| <= 1/8": (not self.premise)
            or self.shift_operator >= 0.125 - TOL.certificate,
            "lemma": self.lemma.passed,
        }
        if self.chain is not None:
            out["fidelity chain"] = self.chain.passed
        return out

    @property
    def label(self) -> str:
        """PASS only when the 1/8 conclusion is certified; INCONCLUSIVE when ||U-U~|| > 1/8."""
        if not self.passed:
            return "FAIL"
        return "PASS" if self.premise else "INCONCLUSIVE"

    def to_dict(self) -> Dict[str, object]:
        out = super().to_dict()
        out["verdict"] = self.label
        return out


def end_to_end(
    model: HamiltonianModel,
    T: float,
    params: Optional[BoundParams] = None,
    dt: Optional[float] = None,
    u_full: Optional[DenseOperator] = None,
) -> Verdict:
    from .super2 import super_distance_scan

    params = params or BoundParams()
    lat = model.lattice
    cz = circuitize(model, T, params, dt, strict_ell=False, u_full=u_full)
    U, Ut = cz.propagator, cz.approx.assembled
    sh = build_shift(lat)
    chain = fidelity_chain(cz.approx, strict=False) if lat.l == 2 else None
    super_max = super_arg = None
    if lat.l == 2:
        scan = super_distance_scan(U, state_regions(lat)["identity_block_i"], sh)
        super_max, super_arg = scan.max_value, scan.argmax
    verdict = Verdict(
        l=lat.l,
        t_total=cz.t_total,
        err_operator=cz.err_total,
        err_frobenius=frobenius_norm(U.matrix - Ut.matrix),
        approx_shift_operator=shift_distance(Ut, NormMode.OPERATOR, sh),
        approx_shift_frobenius=shift_distance(Ut, NormMode.FROBENIUS, sh),
        shift_operator=shift_distance(U, NormMode.OPERATOR, sh),
        shift_frobenius=shift_distance(U, NormMode.FROBENIUS, sh),
        premise=cz.err_total <= 0.125,
        ell=cz.ell,
        ell_window_ok=cz.ell_window_ok,
        stages=cz.stages,
        lemma=lemma_shift_rho_certificate(cz.approx, None, strict=False),
        chain=chain,
        super_max=super_max,
        super_argmax=super_arg,
        circuit=cz,
    )
    log.info("end-to-end T=%g: ||U-U_sh||=%.4f (%s)", T, verdict.shift_operator, verdict.label)
    return verdict
