from __future__ import annotations

from ..common.cache import cached_propagator
from ..common.config import ExperimentConfig
from ..lab.evolution import circuitize
from ..lab.linalg import TOL
from .base import RunResult, lattice_of, model_of, operator_cache
from .registry import register

EXPERIMENT = "circuitize"


@register(
    EXPERIMENT,
    help="Far-coupling removal and two interaction-picture cuts; stage errors vs budgets",
    defaults={"model.alpha": 3.0, "time.t": 0.25},
)
def run(cfg: ExperimentConfig) -> RunResult:
    lat = lattice_of(cfg)
    H = model_of(cfg, lat)
    U = cached_propagator(H, cfg.time.t, cfg.time.dt, operator_cache())
    res = circuitize(H, cfg.time.t, cfg.params, cfg.time.dt, bool(cfg.option("strict_ell", False)), u_full=U)
    stage_sum = sum(s["measured"] for s in res.stages.values())
    checks = dict(res.checks())
    checks["||U - U~|| <= sum of stage errors"] = res.err_total <= stage_sum + TOL.certificate
    rows = [{"stage": name, **stage} for name, stage in res.stages.items()]
    summary = res.to_dict()
    summary["stage_sum"] = stage_sum
    summary["within_total_budget"] = res.err_total <= res.budget_total
    return RunResult(summary, checks, rows, ["stage", "measured", "bound", "budget"])
