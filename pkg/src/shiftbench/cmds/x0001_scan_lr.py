from __future__ import annotations

import numpy as np

from ..common.config import ExperimentConfig
from ..lab.evolution import commutator_front
from ..lab.linalg import TOL
from ..lab.pauli import PauliString
from .base import RunResult, lattice_of, model_of, time_grid
from .registry import register

EXPERIMENT = "scan-lr"


@register(
    EXPERIMENT,
    help="Commutator front ||[A_x(t), B_0]|| over a (t, x) grid",
    default_format="csv",
    defaults={"model.alpha": 3.0, "time.t": 1.0},
)
def run(cfg: ExperimentConfig) -> RunResult:
    """
    Options:
      a, b     Pauli strings for the probe and the fixed operator (default "Z0", "Z0")
      x        translations of the probe (default 0..n/2)
    """
    lat = lattice_of(cfg)
    H = model_of(cfg, lat)
    A0 = PauliString.parse(str(cfg.option("a", "Z0")))
    B0 = PauliString.parse(str(cfg.option("b", "Z0")))
    xgrid = [int(x) for x in cfg.option("x", range(lat.n // 2 + 1))]
    table = commutator_front(H, A0, B0, time_grid(cfg), xgrid, cfg.time.dt)
    rows = [{"t": t, "x": int(x), "commutator": v} for t, x, v in table.rows()]
    first = table.values[0] if table.tgrid[0] == 0 else np.zeros(0)
    disjoint = [j for j, x in enumerate(xgrid) if not set(A0.shifted(x, lat.n).support) & set(B0.support)]
    checks = {
        "||[A_x(t), B_0]|| <= 2": bool(np.all(table.values <= 2.0 + TOL.certificate)),
        "commutator vanishes at t=0 for disjoint supports": bool(np.all(first[disjoint] <= 1e-12)) if first.size else True,
    }
    summary = {
        "n": lat.n,
        "a": str(A0),
        "b": str(B0),
        "max_by_t": {f"{t:g}": float(v) for t, v in zip(table.tgrid, table.values.max(axis=1))},
    }
    return RunResult(summary, checks, rows, ["t", "x", "commutator"])
