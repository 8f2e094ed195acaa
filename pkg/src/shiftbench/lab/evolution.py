"""Time-ordered propagators, Heisenberg evolution, the region projector and the
interaction-picture cut circuitization with its Duhamel certificate.

Cut frames are built in the reversed time s = T - t: U U_op^dagger is the
anti-time-ordered exponential (in s) of U_op(s) H_cut U_op(s)^dagger, so the block
u_0 is accumulated by right-multiplying step factors while s increases.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from ..common.errors import DomainError
from .bounds import BoundParams
from .certificate import Certificate, unreported
from .hamiltonian import (
    HamiltonianModel,
    ModelKind,
    ell_rule,
    norm_tail,
    split_cut,
    split_far,
)
from .lattice import Region, RingLattice, paper_regions
from .linalg import (
    TOL,
    DenseOperator,
    NormMode,
    embed,
    embed_local,
    expm_from_eigh,
    frobenius_norm,
    haar_unitary,
    hermitian_expm,
    operator_norm,
    partial_trace,
    random_unitary,
    require_dense,
    sample_seed,
)
from .pauli import PauliString

log = logging.getLogger(__name__)

DEFAULT_MAX_DT = 0.01
DT_MATCH_TOL = 1e-9
SLACK_PER_DT = 10.0
STAGE_BUDGET = 1.0 / 16.0
ELL_WINDOW = 0.1

__all__ = [
    "Ordering",
    "PropagatorPlan",
    "Evolver",
    "propagate",
    "heisenberg",
    "project_region",
    "haar_twirl",
    "FrontTable",
    "commutator_front",
    "frobenius_leakage",
    "operator_leakage",
    "leakage_table",
    "HHKLResult",
    "hhkl_scan",
    "hhkl_cut",
    "cut_interaction",
    "CircuitApprox",
    "CircuitizeResult",
    "circuitize",
]


class Ordering(str, Enum):
    FORWARD = "forward"
    ANTI = "anti"


@dataclass(frozen=True, eq=False)
class PropagatorPlan:
    model: HamiltonianModel
    t_total: float
    dt: Optional[float] = None
    ordering: Ordering = Ordering.FORWARD
    steps: int = field(init=False)

    def __post_init__(self) -> None:
        T = float(self.t_total)
        if not (math.isfinite(T) and T >= 0):
            raise DomainError(f"evolution time must be finite and >= 0, got {self.t_total}")
        object.__setattr__(self, "t_total", T)
        object.__setattr__(self, "ordering", Ordering(self.ordering))
        if T == 0:
            object.__setattr__(self, "dt", float(self.dt or DEFAULT_MAX_DT))
            object.__setattr__(self, "steps", 0)
            return
        if self.dt is None:
            steps = math.ceil(T / min(DEFAULT_MAX_DT, T / 100.0) - DT_MATCH_TOL)
        else:
            if not self.dt > 0:
                raise DomainError(f"dt must be positive, got {self.dt}")
            ratio = T / self.dt
            steps = round(ratio)
            if steps == 0 or abs(ratio - steps) > DT_MATCH_TOL * max(1.0, ratio):
                raise DomainError(f"dt={self.dt} does not divide T={T}")
        object.__setattr__(self, "steps", int(steps))
        object.__setattr__(self, "dt", T / steps)

    def intervals(self) -> List[Tuple[float, float]]:
        return [(j * self.dt, (j + 1) * self.dt) for j in range(self.steps)]

    def segments(self, model: Optional[HamiltonianModel] = None) -> List[Tuple[float, np.ndarray]]:
        """(duration, averaged multipliers) with equal consecutive steps merged."""
        sched = (model or self.model).schedule
        out: List[Tuple[float, np.ndarray]] = []
        for t0, t1 in self.intervals():
            m = sched.averaged(t0, t1)
            if out and np.array_equal(out[-1][1], m):
                out[-1] = (out[-1][0] + (t1 - t0), m)
            else:
                out.append((t1 - t0, m))
        return out


def propagate(plan: PropagatorPlan, sites: Optional[Sequence[int] | Region] = None) -> DenseOperator:
    model = plan.model
    sites = tuple(range(model.n)) if sites is None else tuple(sorted(sites))
    require_dense(len(sites), "propagator")
    U = np.eye(2 ** len(sites), dtype=complex)
    for duration, mult in plan.segments():
        F = hermitian_expm(model.assemble(sites=sites, multipliers=mult).matrix, duration)
        U = F @ U if plan.ordering is Ordering.FORWARD else U @ F
    log.debug("propagated %d terms over T=%g in %d steps", len(model.terms), plan.t_total, plan.steps)
    return DenseOperator(sites, U)


class Evolver:
    """U(t) for one model; time-independent models reuse a single eigendecomposition."""

    def __init__(
        self,
        model: HamiltonianModel,
        dt: Optional[float] = None,
        sites: Optional[Sequence[int]] = None,
    ):
        self.model = model
        self.dt = dt
        self.sites = tuple(range(model.n)) if sites is None else tuple(sorted(sites))
        require_dense(len(self.sites), "propagator")
        self._eig: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def eig(self) -> Tuple[np.ndarray, np.ndarray]:
        if not self.model.is_time_independent:
            raise DomainError("eigendecomposition needs a time-independent model")
        if self._eig is None:
            H = self.model.assemble(sites=self.sites).matrix
            self._eig = sla.eigh((H + H.conj().T) / 2)
        return self._eig

    def at(self, t: float) -> DenseOperator:
        if self.model.is_time_independent:
            w, V = self.eig()
            return DenseOperator(self.sites, expm_from_eigh(w, V, t))
        dt = self.dt if self.dt is not None and t > 0 and _divides(self.dt, t) else None
        return propagate(PropagatorPlan(self.model, t, dt), self.sites)


def _divides(dt: float, t: float) -> bool:
    ratio = t / dt
    return round(ratio) > 0 and abs(ratio - round(ratio)) <= DT_MATCH_TOL * max(1.0, ratio)


def heisenberg(U: DenseOperator, A: DenseOperator) -> DenseOperator:
    """U^dagger A U with A embedded on U's sites."""
    a = embed(A, U.sites).matrix
    return DenseOperator(U.sites, U.matrix.conj().T @ a @ U.matrix)


def project_region(A: DenseOperator, S: Region | Sequence[int], reduced: bool = False) -> DenseOperator:
    """Normalized partial trace over the complement of S, embedded back unless ``reduced``."""
    keep = set(S)
    traced = tuple(s for s in A.sites if s not in keep)
    if not traced:
        return A
    B = partial_trace(A, traced) / 2 ** len(traced)
    return B if reduced else embed(B, A.sites)


def haar_twirl(
    A: DenseOperator, S: Region | Sequence[int], samples: int, seed: int
) -> DenseOperator:
    """Monte Carlo mean of V^dagger A V over Haar V on the complement of S."""
    if samples < 1:
        raise DomainError(f"need at least one sample, got {samples}")
    keep = set(S)
    comp = [s for s in A.sites if s not in keep]
    acc = np.zeros_like(A.matrix)
    for i in range(samples):
        V = haar_unitary(2 ** len(comp), sample_seed(seed, i))
        V = embed_local(V, comp, A.sites)
        acc += V.conj().T @ A.matrix @ V
    return DenseOperator(A.sites, acc / samples)


@dataclass(frozen=True, eq=False)
class FrontTable:
    axis: str
    tgrid: np.ndarray
    grid: np.ndarray
    values: np.ndarray
    norm: NormMode = NormMode.OPERATOR

    def rows(self) -> List[Tuple[float, float, float]]:
        return [
            (float(t), float(g), float(self.values[i, j]))
            for i, t in enumerate(self.tgrid)
            for j, g in enumerate(self.grid)
        ]


def commutator_front(
    H: HamiltonianModel,
    A0: PauliString,
    B0: PauliString,
    tgrid: Sequence[float],
    xgrid: Sequence[int],
    dt: Optional[float] = None,
) -> FrontTable:
    """C(x, t) = ||[A_x(t), B_0]|| with A_x the string A0 translated by x."""
    ev = Evolver(H, dt)
    n = H.n
    B = B0.to_operator().on(ev.sites).matrix
    values = np.zeros((len(tgrid), len(xgrid)))
    for i, t in enumerate(tgrid):
        U = ev.at(t)
        for j, x in enumerate(xgrid):
            At = heisenberg(U, A0.shifted(int(x), n).to_operator()).matrix
            values[i, j] = operator_norm(At @ B - B @ At)
        log.debug("front row t=%g done", t)
    return FrontTable("x", np.asarray(tgrid, float), np.asarray(xgrid, float), values)


def _leakage_region(lat: RingLattice, A: PauliString, r: int) -> Region:
    return lat.region(A.support).expand(r)


def _leakage(At: DenseOperator, S: Region, mode: NormMode) -> float:
    if S.is_full:
        return 0.0
    diff = At - project_region(At, S)
    return frobenius_norm(diff) if mode is NormMode.FROBENIUS else operator_norm(diff)


def leakage_table(
    H: HamiltonianModel,
    A: PauliString,
    tgrid: Sequence[float],
    rgrid: Sequence[int],
    norm: NormMode | str = NormMode.FROBENIUS,
    dt: Optional[float] = None,
) -> FrontTable:
    """||A(t) - P_r A(t)|| over a (t, r) grid; one propagator per t."""
    norm = NormMode(norm)
    ev = Evolver(H, dt)
    regions = [_leakage_region(H.lattice, A, r) for r in rgrid]
    A_op = A.to_operator()
    values = np.zeros((len(tgrid), len(rgrid)))
    for i, t in enumerate(tgrid):
        At = heisenberg(ev.at(t), A_op)
        for j, S in enumerate(regions):
            values[i, j] = _leakage(At, S, norm)
    return FrontTable("r", np.asarray(tgrid, float), np.asarray(rgrid, float), values, norm)


def frobenius_leakage(
    H: HamiltonianModel, A: PauliString, r: int, t: float, dt: Optional[float] = None
) -> float:
    return float(leakage_table(H, A, [t], [r], NormMode.FROBENIUS, dt).values[0, 0])


def operator_leakage(
    H: HamiltonianModel, A: PauliString, r: int, t: float, dt: Optional[float] = None
) -> float:
    return float(leakage_table(H, A, [t], [r], NormMode.OPERATOR, dt).values[0, 0])


# --- interaction-picture cuts ---------------------------------------------


@dataclass(frozen=True, eq=False)
class HHKLResult(Certificate):
    name = "duhamel"

    cut: Tuple[int, int]
    r: int
    region: Tuple[int, ...]
    t_total: float
    dt: float
    steps: int
    n_cut_terms: int
    err: float
    bound: float
    slack: float
    u_op: DenseOperator = unreported()
    u_0: DenseOperator = unreported()
    open_model: HamiltonianModel = unreported()

    def checks(self) -> Dict[str, bool]:
        return {"err <= duhamel bound + slack": self.err <= self.bound + self.slack + TOL.certificate}


def _cut_frames(
    plan: PropagatorPlan, open_model: HamiltonianModel, cut_model: HamiltonianModel
) -> Iterator[np.ndarray]:
    """H~_j for j = N-1 .. 0, i.e. s = T - t_mid increasing."""
    sites = tuple(range(plan.model.n))
    T, dt = plan.t_total, plan.dt
    intervals = plan.intervals()
    if plan.model.is_time_independent:
        w, V = Evolver(open_model).eig()
        Hc = cut_model.assemble(sites=sites).matrix
        M = V.conj().T @ Hc @ V
        for t0, t1 in reversed(intervals):
            ph = np.exp(-1j * w * (T - 0.5 * (t0 + t1)))
            yield V @ (ph[:, None] * M * ph.conj()[None, :]) @ V.conj().T
        return
    P = np.eye(2 ** len(sites), dtype=complex)
    for t0, t1 in reversed(intervals):
        h_op = open_model.assemble(sites=sites, multipliers=open_model.schedule.averaged(t0, t1))
        h_cut = cut_model.assemble(sites=sites, multipliers=cut_model.schedule.averaged(t0, t1))
        frame = P @ hermitian_expm(h_op.matrix, 0.5 * dt)
        yield frame @ h_cut.matrix @ frame.conj().T
        P = P @ hermitian_expm(h_op.matrix, dt)


def hhkl_scan(
    H: HamiltonianModel,
    cut: Tuple[int, int],
    T: float,
    radii: Sequence[int],
    dt: Optional[float] = None,
    ell: Optional[int] = None,
    u_full: Optional[DenseOperator] = None,
) -> List[HHKLResult]:
    """Cut ``H`` at ``cut`` and approximate U U_op^dagger by a block on S_r for every r.

    Interaction-picture frames are shared across radii."""
    lat = H.lattice
    require_dense(lat.n, "cut circuitization")
    a, b = lat.check_bond(cut)
    if H.kind is ModelKind.POWER_LAW and H.alpha is not None and H.alpha <= 2:
        log.info("alpha=%g: no operator-norm light cone, cut errors need not decay", H.alpha)
    regions = []
    for r in radii:
        S = lat.region((a, b)).expand(r)
        if S.is_full:
            raise DomainError(f"radius {r} makes the cut region cover the whole ring of {lat.n}")
        regions.append(S)
    H_cut, H_open = split_cut(H, (a, b), ell)
    plan = PropagatorPlan(H, T, dt)
    U = u_full if u_full is not None else propagate(plan)
    u_op = propagate(PropagatorPlan(H_open, plan.t_total, plan.dt if plan.steps else None))
    u0 = [np.eye(2 ** len(S), dtype=complex) for S in regions]
    bound = [0.0] * len(regions)
    if H_cut.terms and plan.steps:
        for j, Ht in enumerate(_cut_frames(plan, H_open, H_cut)):
            Ht_op = DenseOperator(U.sites, Ht)
            for k, S in enumerate(regions):
                proj = project_region(Ht_op, S, reduced=True)
                u0[k] = u0[k] @ hermitian_expm(proj.matrix, plan.dt)
                bound[k] += plan.dt * operator_norm(Ht - embed(proj, U.sites).matrix)
            log.debug("cut %s frame %d/%d", (a, b), j + 1, plan.steps)
    W = U.matrix @ u_op.matrix.conj().T
    out = []
    for k, (r, S) in enumerate(zip(radii, regions)):
        block = DenseOperator(S.sites, u0[k])
        err = operator_norm(W - embed(block, U.sites).matrix)
        res = HHKLResult(
            cut=(a, b),
            r=int(r),
            region=S.sites,
            t_total=plan.t_total,
            dt=plan.dt,
            steps=plan.steps,
            n_cut_terms=len(H_cut.terms),
            err=err,
            bound=bound[k],
            slack=SLACK_PER_DT * plan.dt if plan.steps else 0.0,
            u_op=u_op,
            u_0=block,
            open_model=H_open,
        )
        log.info("cut %s r=%d: err=%.3e bound=%.3e", (a, b), r, err, bound[k])
        out.append(res)
    return out


def hhkl_cut(
    H: HamiltonianModel,
    cut: Tuple[int, int],
    T: float,
    r: int,
    dt: Optional[float] = None,
    ell: Optional[int] = None,
    u_full: Optional[DenseOperator] = None,
) -> HHKLResult:
    return hhkl_scan(H, cut, T, [r], dt, ell, u_full)[0]


def cut_interaction(
    H: HamiltonianModel, cut: Tuple[int, int], s: float, ell: Optional[int] = None
) -> DenseOperator:
    """U_op(s) H_cut U_op(s)^dagger for a time-independent model."""
    if not H.is_time_independent:
        raise DomainError("cut_interaction needs a time-independent model")
    H_cut, H_open = split_cut(H, cut, ell)
    w, V = Evolver(H_open).eig()
    Uop = expm_from_eigh(w, V, s)
    Hc = H_cut.assemble(sites=range(H.n)).matrix
    return DenseOperator(tuple(range(H.n)), Uop @ Hc @ Uop.conj().T)


# --- four-block circuits -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CircuitApprox:
    """U~ = (U_I x U_0)(U_L x U_R) on the four-block geometry of paper_regions."""

    lattice: RingLattice
    u_l: DenseOperator
    u_r: DenseOperator
    u_0: DenseOperator
    u_i: DenseOperator

    def __post_init__(self) -> None:
        regions = paper_regions(self.lattice)
        for name, key in (("u_l", "left"), ("u_r", "right"), ("u_0", "u0_support"), ("u_i", "uI_support")):
            block: DenseOperator = getattr(self, name)
            if block.sites != regions[key].sites:
                raise DomainError(f"{name} acts on {block.sites}, expected {regions[key].sites}")
            if not block.is_unitary():
                raise DomainError(f"{name} is not unitary")

    @classmethod
    def identity(cls, lat: RingLattice) -> CircuitApprox:
        regions = paper_regions(lat)
        return cls(
            lat,
            *(DenseOperator.identity(regions[k]) for k in ("left", "right", "u0_support", "uI_support")),
        )

    @classmethod
    def random(cls, lat: RingLattice, seed: int | np.random.Generator) -> CircuitApprox:
        regions = paper_regions(lat)
        rng = np.random.default_rng(seed)
        return cls(
            lat,
            *(random_unitary(regions[k], rng) for k in ("left", "right", "u0_support", "uI_support")),
        )

    @property
    def l(self) -> int:
        return self.lattice.l

    @cached_property
    def assembled(self) -> DenseOperator:
        full = tuple(range(self.lattice.n))
        require_dense(len(full), "assembled circuit")
        out = embed(self.u_i, full).matrix @ embed(self.u_0, full).matrix
        out = out @ embed(self.u_l, full).matrix @ embed(self.u_r, full).matrix
        return DenseOperator(full, out)


@dataclass(frozen=True, eq=False)
class CircuitizeResult(Certificate):
    name = "circuitize"

    t_total: float
    ell: Optional[int]
    ell_window_ok: bool
    err_total: float
    stages: Dict[str, Dict[str, float]]
    approx: CircuitApprox = unreported()
    propagator: DenseOperator = unreported()
    cuts: Tuple[HHKLResult, ...] = ()

    @property
    def budget_total(self) -> float:
        return float(sum(s["budget"] for s in self.stages.values()))

    def checks(self) -> Dict[str, bool]:
        out = {}
        for cert in self.cuts:
            out[f"{cert.name} at {cert.cut}"] = cert.passed
        return out


def circuitize(
    H: HamiltonianModel,
    T: float,
    params: Optional[BoundParams] = None,
    dt: Optional[float] = None,
    strict_ell: bool = True,
    u_full: Optional[DenseOperator] = None,
) -> CircuitizeResult:
    """Far-coupling removal (power-law only), then cuts at (0,1) and (2L,2L+1)."""
    params = params or BoundParams()
    lat = H.lattice
    regions = paper_regions(lat)
    L = lat.l
    plan = PropagatorPlan(H, T, dt)
    U = u_full if u_full is not None else propagate(plan)

    ell: Optional[int] = None
    window_ok = True
    H_near = H
    far_stage = {"measured": 0.0, "bound": 0.0, "frobenius_bound": 0.0, "budget": STAGE_BUDGET}
    if H.kind is ModelKind.POWER_LAW and plan.t_total > 0:
        mode = NormMode.OPERATOR if H.alpha > 2 else NormMode.FROBENIUS
        ell = ell_rule(H.k * plan.t_total, H.alpha, params.resolve_c_alpha(H.alpha, mode), mode)
        window_ok = ell <= ELL_WINDOW * L
        if not window_ok:
            msg = f"ell={ell} exceeds {ELL_WINDOW}*L={ELL_WINDOW * L:g}"
            if strict_ell:
                raise DomainError(msg)
            log.warning("%s; continuing with measured errors only", msg)
        H_far, H_near = split_far(H, ell)
        if H_far.terms:
            U_near = propagate(PropagatorPlan(H_near, plan.t_total, plan.dt))
            far_stage["measured"] = operator_norm(U.matrix - U_near.matrix)
        else:
            U_near = U
        far_stage["bound"] = plan.t_total * norm_tail(H_far, NormMode.OPERATOR)
        far_stage["frobenius_bound"] = plan.t_total * norm_tail(H_far, NormMode.FROBENIUS)
    else:
        U_near = U
    cut_ell = ell if H.kind is ModelKind.POWER_LAW else 2
    r = L - 2
    step_dt = plan.dt if plan.steps else None
    res0 = hhkl_cut(H_near, (0, 1), plan.t_total, r, step_dt, cut_ell, u_full=U_near)
    res1 = hhkl_cut(
        res0.open_model, lat.bond(2 * L), plan.t_total, r, step_dt, cut_ell, u_full=res0.u_op
    )
    rest = res1.open_model
    left, right = regions["left"], regions["right"]
    stray = [p for p in rest.pairs if (p[0] in left) != (p[1] in left)]
    if stray:
        raise DomainError(f"terms {stray} still couple the half-chains after both cuts")
    blocks = {}
    for key, region in (("u_l", left), ("u_r", right)):
        sub = rest.restrict(region)
        blocks[key] = propagate(PropagatorPlan(sub, plan.t_total, step_dt), region)
    approx = CircuitApprox(lat, blocks["u_l"], blocks["u_r"], res0.u_0, res1.u_0)
    err_total = operator_norm(U.matrix - approx.assembled.matrix)
    stages = {
        "far": far_stage,
        "cut_0": {"measured": res0.err, "bound": res0.bound + res0.slack, "budget": STAGE_BUDGET},
        "cut_I": {"measured": res1.err, "bound": res1.bound + res1.slack, "budget": STAGE_BUDGET},
    }
    log.info("circuitize T=%g: ||U - U~|| = %.3e (ell=%s)", plan.t_total, err_total, ell)
    return CircuitizeResult(
        t_total=plan.t_total,
        ell=ell,
        ell_window_ok=window_ok,
        err_total=err_total,
        stages=stages,
        approx=approx,
        propagator=U,
        cuts=(res0, res1),
    )
