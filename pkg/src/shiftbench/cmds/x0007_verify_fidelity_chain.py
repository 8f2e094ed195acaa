from __future__ import annotations

from ..common.config import ExperimentConfig
from ..lab.evolution import CircuitApprox
from ..lab.shiftlab import fidelity_chain
from .base import RunResult, fan_out, lattice_of, merge_checks, sample_seeds
from .registry import register

EXPERIMENT = "verify-fidelity-chain"


@register(
    EXPERIMENT,
    help="Per-z fidelity links and the assembled Frobenius lower bound ||U~ - U_sh||_F >= 1/4",
    default_format="csv",
    defaults={"lattice.l": 2, "samples": 20},
)
def run(cfg: ExperimentConfig) -> RunResult:
    lat = lattice_of(cfg)

    def one(seed: int):
        return fidelity_chain(CircuitApprox.random(lat, seed), strict=False)

    chains = fan_out(one, sample_seeds(cfg), cfg.workers)
    rows = [
        {
            "sample": i,
            "final": c.final,
            "frobenius_identity": c.frobenius_identity,
            "frobenius_direct": c.frobenius_direct,
            "min_fidelity_gap": min(z["fidelity_gap"] for z in c.per_z),
            "min_distance": min(z["distance"] for z in c.per_z),
            "passed": c.passed,
        }
        for i, c in enumerate(chains)
    ]
    summary = {
        "samples": len(chains),
        "min_final": min(c.final for c in chains),
        "max_identity_gap": max(abs(c.frobenius_identity - c.frobenius_direct) for c in chains),
    }
    columns = list(rows[0]) if rows else []
    return RunResult(summary, merge_checks(c.checks() for c in chains), rows, columns)
