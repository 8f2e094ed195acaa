from __future__ import annotations

import numpy as np

from ..common.config import ExperimentConfig
from ..lab.evolution import leakage_table
from ..lab.linalg import TOL, NormMode
from ..lab.pauli import PauliString
from .base import RunResult, lattice_of, model_of, time_grid
from .registry import register

EXPERIMENT = "scan-frobenius"


@register(
    EXPERIMENT,
    help="Frobenius and operator-norm leakage ||A(t) - P_r A(t)|| over a (t, r) grid",
    default_format="csv",
    defaults={"model.alpha": 1.5, "time.t": 1.0},
)
def run(cfg: ExperimentConfig) -> RunResult:
    lat = lattice_of(cfg)
    H = model_of(cfg, lat)
    A = PauliString.parse(str(cfg.option("a", "Z0")))
    radii = [int(r) for r in cfg.option("radii", range(lat.n // 2))]
    tgrid = time_grid(cfg)
    frob = leakage_table(H, A, tgrid, radii, NormMode.FROBENIUS, cfg.time.dt)
    oper = leakage_table(H, A, tgrid, radii, NormMode.OPERATOR, cfg.time.dt)
    rows = [
        {"t": t, "r": int(r), "frobenius": f, "operator": o}
        for (t, r, f), (_, _, o) in zip(frob.rows(), oper.rows())
    ]
    checks = {
        "frobenius leakage <= operator leakage": bool(np.all(frob.values <= oper.values + TOL.certificate)),
        "leakage <= 2||A||": bool(np.all(oper.values <= 2.0 + TOL.certificate)),
    }
    summary = {"n": lat.n, "a": str(A), "max_frobenius": float(frob.values.max()), "max_operator": float(oper.values.max())}
    return RunResult(summary, checks, rows, ["t", "r", "frobenius", "operator"])
