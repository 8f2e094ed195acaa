from __future__ import annotations

from ..common.config import ExperimentConfig
from ..lab.evolution import CircuitApprox
from ..lab.super2 import super_lemma_certificate
from .base import RunResult, fan_out, lattice_of, merge_checks, sample_seeds
from .registry import register

EXPERIMENT = "verify-super2"


@register(
    EXPERIMENT,
    help="Superspace half-chain witness and the identity-block Pauli scan at L=2",
    default_format="csv",
    defaults={"lattice.l": 2, "samples": 20},
)
def run(cfg: ExperimentConfig) -> RunResult:
    lat = lattice_of(cfg)

    def one(seed: int):
        return super_lemma_certificate(CircuitApprox.random(lat, seed), strict=False)

    certs = fan_out(one, sample_seeds(cfg), cfg.workers)
    rows = [{"sample": i, **c.to_dict()} for i, c in enumerate(certs)]
    for row in rows:
        row.pop("checks", None)
    summary = {
        "samples": len(certs),
        "min_halfchain": min(c.halfchain_value for c in certs),
        "min_max_value": min(c.max_value for c in certs),
        "argmax_first": certs[0].max_pauli,
    }
    columns = ["sample", "halfchain_value", "max_pauli", "max_value", "mean_value", "min_value", "passed"]
    return RunResult(summary, merge_checks(c.checks() for c in certs), rows, columns)
