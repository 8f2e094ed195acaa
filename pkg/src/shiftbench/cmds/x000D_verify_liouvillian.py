from __future__ import annotations

import numpy as np

from ..common.config import ExperimentConfig
from ..lab.linalg import DenseOperator, random_unitary
from ..lab.pauli import pauli_inner
from ..lab.super2 import LIOUVILLIAN_TOL, liouvillian_identity_check, liouvillian_reality_check, super_apply
from .base import RunResult
from .registry import register

EXPERIMENT = "verify-liouvillian"


def _hermitian(sites, rng: np.random.Generator) -> DenseOperator:
    dim = 2 ** len(sites)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return DenseOperator(tuple(sites), (g + g.conj().T) / 2)


@register(
    EXPERIMENT,
    help="Liouvillians annihilate the identity on their support, give real matrix elements, and superunitaries preserve (O|O')",
    default_format="csv",
    defaults={"samples": 50, "options.n_sites": 6},
)
def run(cfg: ExperimentConfig) -> RunResult:
    rng = np.random.default_rng(cfg.seed)
    n_sites = int(cfg.option("n_sites", 6))
    rows = []
    for i in range(cfg.samples):
        sites = rng.permutation(n_sites)
        S, rest = sorted(sites[:2]), sorted(sites[2:4])
        value = liouvillian_identity_check(_hermitian(S, rng), _hermitian(rest, rng))
        rows.append({"case": "identity", "index": i, "value": value})
    for i in range(cfg.samples):
        ops = [_hermitian((0, 1, 2), rng) for _ in range(3)]
        rows.append({"case": "reality", "index": i, "value": liouvillian_reality_check(*ops)})
    for i in range(cfg.samples):
        U = random_unitary((0, 1, 2), rng)
        O1, O2 = _hermitian((0, 1, 2), rng), _hermitian((0, 1, 2), rng)
        drift = abs(pauli_inner(super_apply(U, O1), super_apply(U, O2)) - pauli_inner(O1, O2))
        rows.append({"case": "superunitary", "index": i, "value": drift})
    worst = {case: max(r["value"] for r in rows if r["case"] == case) for case in ("identity", "reality", "superunitary")}
    checks = {
        "L_S|I_S x A) = 0": worst["identity"] <= LIOUVILLIAN_TOL,
        "(O|L|O') real for Hermitian O, O', H": worst["reality"] <= LIOUVILLIAN_TOL,
        "superunitaries preserve (O|O')": worst["superunitary"] <= LIOUVILLIAN_TOL,
    }
    return RunResult({"samples": cfg.samples, "worst": worst}, checks, rows, ["case", "index", "value"])
