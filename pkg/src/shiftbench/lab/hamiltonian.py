"""Two-site Hamiltonian ensembles on the ring and their far/cut decompositions."""
from __future__ import annotations

import bisect
import hashlib
import itertools
import json
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from ..common.errors import DomainError
from .lattice import Region, RingLattice, _as_int, half_chains
from .linalg import DenseOperator, NormMode, operator_norm, require_dense
from .pauli import PAULI_MATRICES

log = logging.getLogger(__name__)

NORM_SLACK = 1e-12
ELL_ROUNDING = 1e-9

# the 15 traceless two-site Pauli strings, lower site first
TWO_SITE_LABELS: Tuple[str, ...] = tuple(
    a + b for a, b in itertools.product("IXYZ", repeat=2) if a + b != "II"
)
_TWO_SITE = np.array(
    [np.kron(PAULI_MATRICES[lbl[0]], PAULI_MATRICES[lbl[1]]) for lbl in TWO_SITE_LABELS]
)

__all__ = [
    "TWO_SITE_LABELS",
    "ModelKind",
    "Term",
    "Schedule",
    "HamiltonianModel",
    "build_powerlaw",
    "build_nearest_neighbor",
    "random_schedule",
    "with_schedule",
    "split_far",
    "split_cut",
    "crosses_bond",
    "ell_rule",
    "norm_tail",
]


class ModelKind(str, Enum):
    NEAREST_NEIGHBOR = "nearest-neighbor"
    POWER_LAW = "power-law"


@dataclass(frozen=True)
class Term:
    """Real combination of the 15 traceless two-site Paulis on ``pair`` (ascending)."""

    pair: Tuple[int, int]
    coefficients: Tuple[float, ...]

    def __post_init__(self) -> None:
        x, y = (_as_int(s) for s in self.pair)
        if x == y:
            raise DomainError(f"a term needs two distinct sites, got ({x}, {y})")
        c = tuple(float(v) for v in self.coefficients)
        if len(c) != len(TWO_SITE_LABELS):
            raise DomainError(f"a term has {len(TWO_SITE_LABELS)} coefficients, got {len(c)}")
        if not all(math.isfinite(v) for v in c):
            raise DomainError("term coefficients must be finite")
        object.__setattr__(self, "pair", (min(x, y), max(x, y)))
        object.__setattr__(self, "coefficients", c)

    def matrix(self) -> np.ndarray:
        return np.tensordot(np.asarray(self.coefficients), _TWO_SITE, axes=1)

    def operator(self) -> DenseOperator:
        return DenseOperator(self.pair, self.matrix())

    def norm(self) -> float:
        return operator_norm(self.matrix())

    def frobenius(self) -> float:
        # the two-site Paulis are orthonormal under the normalized inner product
        return float(np.linalg.norm(self.coefficients))

    def scaled(self, factor: float) -> Term:
        return Term(self.pair, tuple(factor * c for c in self.coefficients))


@dataclass(frozen=True, eq=False)
class Schedule:
    """Piecewise-constant multipliers, one row per interval between breakpoints."""

    breakpoints: Tuple[float, ...]
    multipliers: np.ndarray

    def __post_init__(self) -> None:
        bp = tuple(float(b) for b in self.breakpoints)
        if any(b <= 0 for b in bp) or any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise DomainError(f"breakpoints must be positive and increasing: {bp}")
        m = np.atleast_2d(np.asarray(self.multipliers, dtype=float))
        if m.shape[0] != len(bp) + 1:
            raise DomainError(f"{len(bp)} breakpoints need {len(bp) + 1} multiplier rows")
        if np.any(np.abs(m) > 1.0 + NORM_SLACK):
            raise DomainError("schedule multipliers must lie in [-1, 1]")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "multipliers", m)

    @classmethod
    def constant(cls, n_terms: int) -> Schedule:
        return cls((), np.ones((1, n_terms)))

    @property
    def n_terms(self) -> int:
        return self.multipliers.shape[1]

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.multipliers == self.multipliers[0]))

    def multipliers_at(self, t: float) -> np.ndarray:
        return self.multipliers[bisect.bisect_right(self.breakpoints, t)]

    def averaged(self, t0: float, t1: float) -> np.ndarray:
        """Time-weighted mean multipliers over [t0, t1]."""
        if t1 <= t0:
            return self.multipliers_at(t0)
        edges = [t0] + [b for b in self.breakpoints if t0 < b < t1] + [t1]
        acc = np.zeros(self.n_terms)
        for a, b in zip(edges, edges[1:]):
            acc += (b - a) * self.multipliers_at(0.5 * (a + b))
        return acc / (t1 - t0)

    def columns(self, idx: Sequence[int]) -> Schedule:
        return Schedule(self.breakpoints, self.multipliers[:, list(idx)])


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    lattice: RingLattice
    terms: Tuple[Term, ...]
    kind: ModelKind
    alpha: Optional[float] = None
    k: float = 1.0
    schedule: Optional[Schedule] = None

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        kind = ModelKind(self.kind)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "kind", kind)
        if self.schedule is None:
            object.__setattr__(self, "schedule", Schedule.constant(len(terms)))
        elif self.schedule.n_terms != len(terms):
            raise DomainError(
                f"schedule covers {self.schedule.n_terms} terms, model has {len(terms)}"
            )
        lat = self.lattice
        for term in terms:
            x, y = term.pair
            if not (0 <= x < lat.n and 0 <= y < lat.n):
                raise DomainError(f"term {term.pair} lies outside the ring of {lat.n} sites")
            d = lat.distance(x, y)
            norm = term.norm()
            if kind is ModelKind.NEAREST_NEIGHBOR:
                if d != 1:
                    raise DomainError(f"nearest-neighbour term on distance-{d} pair {term.pair}")
                budget = 1.0
            else:
                if self.alpha is None:
                    raise DomainError("power-law model needs alpha")
                budget = self.k * d ** (-self.alpha)
            if norm > budget + NORM_SLACK:
                raise DomainError(f"term {term.pair} has norm {norm:.6g} > budget {budget:.6g}")

    @property
    def n(self) -> int:
        return self.lattice.n

    @property
    def pairs(self) -> Tuple[Tuple[int, int], ...]:
        return tuple(t.pair for t in self.terms)

    @property
    def is_time_independent(self) -> bool:
        return self.schedule.is_constant

    def __len__(self) -> int:
        return len(self.terms)

    def subset(self, idx: Iterable[int]) -> HamiltonianModel:
        idx = sorted(set(idx))
        return replace(
            self,
            terms=tuple(self.terms[i] for i in idx),
            schedule=self.schedule.columns(idx),
        )

    def without(self, idx: Iterable[int]) -> HamiltonianModel:
        drop = set(idx)
        return self.subset(i for i in range(len(self.terms)) if i not in drop)

    def restrict(self, region: Region) -> HamiltonianModel:
        """Terms with both endpoints inside ``region``."""
        return self.subset(
            i for i, t in enumerate(self.terms) if t.pair[0] in region and t.pair[1] in region
        )

    def assemble(
        self,
        t: float = 0.0,
        sites: Optional[Iterable[int]] = None,
        multipliers: Optional[np.ndarray] = None,
    ) -> DenseOperator:
        """Dense H(t) on ``sites`` (default the whole ring) by scattering each Pauli term."""
        sites = tuple(range(self.n)) if sites is None else tuple(sorted(sites))
        k = len(sites)
        require_dense(k, "Hamiltonian")
        pos = {s: i for i, s in enumerate(sites)}
        mult = self.schedule.multipliers_at(t) if multipliers is None else np.asarray(multipliers)
        dim = 2**k
        idx = np.arange(dim, dtype=np.int64)
        H = np.zeros((dim, dim), dtype=complex)
        for term, m in zip(self.terms, mult):
            if m == 0.0:
                continue
            try:
                weights = [1 << (k - 1 - pos[s]) for s in term.pair]
            except KeyError:
                raise DomainError(f"term {term.pair} is not inside sites {sites}") from None
            bits = [(idx & w) != 0 for w in weights]
            for label, c in zip(TWO_SITE_LABELS, term.coefficients):
                if c == 0.0:
                    continue
                flip = 0
                sign = np.ones(dim)
                n_y = 0
                for letter, w, b in zip(label, weights, bits):
                    if letter in "XY":
                        flip |= w
                    if letter in "YZ":
                        sign = np.where(b, -sign, sign)
                    n_y += letter == "Y"
                # Y|b> = i (-1)^b |1-b>
                H[idx ^ flip, idx] += (m * c * 1j**n_y) * sign
        return DenseOperator(sites, H)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "l": self.lattice.l,
            "kind": self.kind.value,
            "alpha": self.alpha,
            "k": self.k,
            "terms": [
                {"pair": list(t.pair), "coefficients": list(t.coefficients)} for t in self.terms
            ],
            "schedule": {
                "breakpoints": list(self.schedule.breakpoints),
                "multipliers": self.schedule.multipliers.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> HamiltonianModel:
        try:
            sched = data.get("schedule") or {}
            terms = tuple(Term(tuple(t["pair"]), tuple(t["coefficients"])) for t in data["terms"])
            schedule = (
                Schedule(tuple(sched["breakpoints"]), np.asarray(sched["multipliers"]))
                if sched
                else None
            )
            return cls(
                RingLattice(data["l"]),
                terms,
                ModelKind(data["kind"]),
                data.get("alpha"),
                data.get("k", 1.0),
                schedule,
            )
        except (KeyError, TypeError) as e:
            raise DomainError(f"malformed model record: {e}") from e

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _check_alpha_k(alpha: float, k: float) -> None:
    if not alpha > 1:
        raise DomainError(f"power-law exponent must exceed 1, got alpha={alpha}")
    if not k > 0:
        raise DomainError(f"K must be positive, got {k}")


def _random_term(pair: Tuple[int, int], rng: np.random.Generator, norm: float) -> Term:
    c = rng.standard_normal(len(TWO_SITE_LABELS))
    raw = Term(pair, tuple(c))
    return raw.scaled(norm / raw.norm())


def build_powerlaw(
    lat: RingLattice, alpha: float, k: float = 1.0, seed: int = 0, saturate: bool = True
) -> HamiltonianModel:
    """One random term per unordered pair with norm K d^-alpha (or a uniform fraction)."""
    _check_alpha_k(alpha, k)
    rng = np.random.default_rng(seed)
    terms = []
    for x, y in itertools.combinations(range(lat.n), 2):
        budget = k * lat.distance(x, y) ** (-alpha)
        if not saturate:
            budget *= 1.0 - rng.random()
        terms.append(_random_term((x, y), rng, budget))
    log.debug("power-law model: n=%d alpha=%g K=%g, %d terms", lat.n, alpha, k, len(terms))
    return HamiltonianModel(lat, tuple(terms), ModelKind.POWER_LAW, float(alpha), float(k))


def build_nearest_neighbor(lat: RingLattice, seed: int = 0) -> HamiltonianModel:
    rng = np.random.default_rng(seed)
    terms = tuple(_random_term(lat.bond(x), rng, 1.0) for x in range(lat.n))
    return HamiltonianModel(lat, terms, ModelKind.NEAREST_NEIGHBOR)


def random_schedule(
    model: HamiltonianModel, breakpoints: Sequence[float], seed: int = 0
) -> HamiltonianModel:
    rng = np.random.default_rng(seed)
    m = rng.uniform(-1.0, 1.0, size=(len(breakpoints) + 1, len(model.terms)))
    return with_schedule(model, Schedule(tuple(breakpoints), m))


def with_schedule(model: HamiltonianModel, schedule: Schedule) -> HamiltonianModel:
    return replace(model, schedule=schedule)


def _positive_ell(ell: int) -> int:
    ell = _as_int(ell, "ell")
    if ell <= 0:
        raise DomainError(f"ell must be a positive integer, got {ell}")
    return ell


def split_far(H: HamiltonianModel, ell: int) -> Tuple[HamiltonianModel, HamiltonianModel]:
    """(H_far, H_rest): H_far couples the left and right half-chains at distance >= ell."""
    ell = _positive_ell(ell)
    left = half_chains(H.lattice)["left"]
    far = [
        i
        for i, t in enumerate(H.terms)
        if (t.pair[0] in left) != (t.pair[1] in left)
        and H.lattice.distance(*t.pair) >= ell
    ]
    return H.subset(far), H.without(far)


def crosses_bond(pair: Tuple[int, int], bond: int, n: int) -> bool:
    """Whether the shorter arc between the pair passes over bond (bond, bond+1).

    Antipodal pairs have two shortest arcs and count as crossing every bond."""
    x, y = pair
    m = (y - x) % n
    if 2 * m == n:
        return True
    u, m = (x, m) if 2 * m < n else (y, n - m)
    return (bond - u) % n < m


def split_cut(
    H: HamiltonianModel, cut: Tuple[int, int], ell: Optional[int] = None
) -> Tuple[HamiltonianModel, HamiltonianModel]:
    """(H_cut, H_rest): H_cut holds the terms straddling ``cut`` at distance < ell.

    ``ell=None`` cuts every straddling term."""
    a, _ = H.lattice.check_bond(cut)
    if ell is not None:
        ell = _positive_ell(ell)
    idx = [
        i
        for i, t in enumerate(H.terms)
        if crosses_bond(t.pair, a, H.n) and (ell is None or H.lattice.distance(*t.pair) < ell)
    ]
    return H.subset(idx), H.without(idx)


def ell_rule(T: float, alpha: float, c_alpha: float, mode: NormMode | str) -> int:
    """ceil((16 c_alpha T)^(1/(alpha-2))) in operator mode, 1/(alpha-1) in frobenius mode."""
    mode = NormMode(mode)
    if not T > 0:
        raise DomainError(f"ell_rule needs T > 0, got {T}")
    if not c_alpha > 0:
        raise DomainError(f"c_alpha must be positive, got {c_alpha}")
    if mode is NormMode.OPERATOR:
        if not alpha > 2:
            raise DomainError(f"operator-mode ell needs alpha > 2, got {alpha}")
        exponent = 1.0 / (alpha - 2.0)
    else:
        if not alpha > 1:
            raise DomainError(f"frobenius-mode ell needs alpha > 1, got {alpha}")
        exponent = 1.0 / (alpha - 1.0)
    try:
        value = (16.0 * c_alpha * T) ** exponent
    except OverflowError:
        value = math.inf
    if not math.isfinite(value):
        raise DomainError(f"ell overflows for T={T}, alpha={alpha} in {mode.value} mode")
    return max(1, math.ceil(value - ELL_ROUNDING))


def norm_tail(H_far: HamiltonianModel, mode: NormMode | str) -> float:
    """Worst case over schedules: every multiplier taken at |m| = 1."""
    if NormMode(mode) is NormMode.OPERATOR:
        return float(sum(t.norm() for t in H_far.terms))
    return float(math.sqrt(sum(t.frobenius() ** 2 for t in H_far.terms)))
