from __future__ import annotations

from ..common.config import ExperimentConfig
from ..common.errors import ConfigError
from ..lab.bounds import FrontModel, fit_front, lemma1_constant
from ..lab.evolution import leakage_table
from ..lab.linalg import NormMode
from ..lab.pauli import PauliString
from .base import RunResult, lattice_of, model_of, time_grid
from .registry import register

EXPERIMENT = "fit-front"


@register(
    EXPERIMENT,
    help="Fit and inflate light-cone constants until the bound majorizes a leakage scan",
    defaults={"model.alpha": 3.0, "time.t": 1.0},
)
def run(cfg: ExperimentConfig) -> RunResult:
    """
    Options:
      front   exponential-front | powerlaw-front | powerlaw-lr-front
      a       probe Pauli string (default "Z0")
      radii   radius grid (default 0..n/2-1)
      points  number of times in [0, T] when time.grid is empty (default 6)
    """
    lat = lattice_of(cfg)
    H = model_of(cfg, lat)
    try:
        front = FrontModel(cfg.option("front", FrontModel.EXPONENTIAL.value))
    except ValueError:
        raise ConfigError(f"unknown front model {cfg.option('front')!r}")
    norm = NormMode.FROBENIUS if front is FrontModel.POWERLAW else NormMode.OPERATOR
    A = PauliString.parse(str(cfg.option("a", "Z0")))
    radii = [int(r) for r in cfg.option("radii", range(lat.n // 2))]
    scan = leakage_table(H, A, time_grid(cfg, int(cfg.option("points", 6))), radii, norm, cfg.time.dt)
    report = fit_front(scan, front, H.alpha, cfg.params)
    summary = report.to_dict()
    summary["norm"] = norm.value
    if front is FrontModel.EXPONENTIAL:
        summary["lemma1_constant"] = lemma1_constant(report.params)
    rows = [{"t": t, "r": int(r), "leakage": v} for t, r, v in scan.rows()]
    return RunResult(summary, report.checks(), rows, ["t", "r", "leakage"])
