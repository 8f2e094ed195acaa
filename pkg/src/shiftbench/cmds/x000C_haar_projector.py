from __future__ import annotations

import math

from ..common.config import ExperimentConfig
from ..lab.evolution import haar_twirl, project_region
from ..lab.linalg import frobenius_norm, random_unitary
from .base import RunResult
from .registry import register

EXPERIMENT = "haar-projector"


@register(
    EXPERIMENT,
    help="Monte Carlo Haar twirl on the complement against the exact partial-trace projector",
    defaults={"samples": 1000, "options.n_sites": 6, "options.region": [0, 1, 2]},
)
def run(cfg: ExperimentConfig) -> RunResult:
    """The operator lives on ``options.n_sites`` qubits, independent of the ring size."""
    n_sites = int(cfg.option("n_sites", 6))
    region = [int(s) for s in cfg.option("region", [0, 1, 2])]
    A = random_unitary(range(n_sites), cfg.seed)
    exact = project_region(A, region)
    twirled = haar_twirl(A, region, cfg.samples, cfg.seed)
    dim = 2 ** (n_sites - len(set(region)))
    err = frobenius_norm(twirled.matrix - exact.matrix)
    tol = 5.0 * dim / math.sqrt(cfg.samples)
    summary = {"n_sites": n_sites, "region": region, "samples": cfg.samples, "frobenius_error": err, "tolerance": tol}
    checks = {"||twirl - P_S A||_F <= 5 dim / sqrt(M)": err <= tol}
    return RunResult(summary, checks)
