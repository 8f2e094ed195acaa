from __future__ import annotations

import numpy as np

from ..common.config import ExperimentConfig
from ..lab.super2 import (
    _all_slots,
    boundary_commutators,
    depth2_swap_circuit,
    doubled_shift,
    inversion_map,
    inversion_unitary,
    reflection_string,
    separability_check,
    swap_string,
    symmetric_separable_model,
)
from .base import RunResult, lattice_of
from .registry import register

EXPERIMENT = "spt-swap"
EXACT_TOL = 1e-12
COMMUTATOR_TOL = 1e-10


@register(
    EXPERIMENT,
    help="Two-copy swap strings: shift covariance, reflection involution, boundary-only evolution",
    defaults={"lattice.l": 1},
)
def run(cfg: ExperimentConfig) -> RunResult:
    lat = lattice_of(cfg)
    L = lat.l
    D = doubled_shift(lat).dense()
    S_i, S_f = swap_string(L).dense(), swap_string(L, shifted=True).dense()
    R = inversion_unitary(lat).dense()
    depth2 = depth2_swap_circuit(lat)
    model = symmetric_separable_model(lat, cfg.model.seed)
    H = model.dense()
    rows = boundary_commutators(model, L)
    interior = [r["commutator"] for r in rows if not r["boundary"]]
    covariance = float(np.max(np.abs(D.conj().T @ S_i @ D - S_f)))
    checks = {
        "(U_sh x U_sh^-1)^dag S_i (U_sh x U_sh^-1) = S_f": covariance <= EXACT_TOL,
        "R is an involution on slots": all(inversion_map(*inversion_map(x, c, lat), lat) == (x, c) for x, c in _all_slots(lat)),
        "R^2 = I": np.allclose(R @ R, np.eye(R.shape[0]), atol=EXACT_TOL),
        "R commutes with U_sh x U_sh^-1": np.allclose(R @ D @ R.conj().T, D, atol=EXACT_TOL),
        "S_i is R on the inversion region": np.allclose(reflection_string(L), S_i, atol=EXACT_TOL),
        "S_i Hermitian": np.allclose(S_i, S_i.conj().T, atol=EXACT_TOL),
        "depth-2 SWAP circuit equals U_sh x U_sh^-1": np.allclose(depth2.unitary(), D, atol=EXACT_TOL),
        "depth-2 SWAP generator is not separable": not separability_check(depth2.model),
        "symmetric model is separable": separability_check(model),
        "symmetric model is R-invariant": np.allclose(R @ H @ R.conj().T, H, atol=1e-10),
        "interior orbits commute with S_i": all(v <= COMMUTATOR_TOL for v in interior),
    }
    summary = {
        "l": L,
        "slots": 2 * lat.n,
        "covariance_error": covariance,
        "boundary_orbits": sum(1 for r in rows if r["boundary"]),
        "interior_orbits": len(interior),
        "max_boundary_commutator": max((r["commutator"] for r in rows if r["boundary"]), default=0.0),
    }
    return RunResult(summary, {k: bool(v) for k, v in checks.items()}, rows, ["terms", "slots", "boundary", "commutator"])
