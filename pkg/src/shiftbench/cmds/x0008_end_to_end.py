from __future__ import annotations

from ..common.cache import cached_propagator
from ..common.config import ExperimentConfig
from ..lab.shiftlab import end_to_end
from .base import RunResult, lattice_of, merge_checks, model_of, operator_cache
from .registry import register

EXPERIMENT = "end-to-end"


@register(
    EXPERIMENT,
    help="Circuitize, certify the approximation and conclude ||U - U_sh|| >= 1/8",
    default_format="csv",
    defaults={"lattice.l": 2, "model.kind": "nearest-neighbor", "time.grid": [0.0, 0.25, 0.5]},
)
def run(cfg: ExperimentConfig) -> RunResult:
    lat = lattice_of(cfg)
    H = model_of(cfg, lat)
    times = [float(t) for t in cfg.time.grid] or [cfg.time.t]
    cache = operator_cache()
    verdicts = []
    for T in times:
        U = cached_propagator(H, T, cfg.time.dt, cache)
        verdicts.append(end_to_end(H, T, cfg.params, cfg.time.dt, u_full=U))
    rows = [
        {
            "T": v.t_total,
            "err_operator": v.err_operator,
            "approx_shift_operator": v.approx_shift_operator,
            "shift_operator": v.shift_operator,
            "shift_frobenius": v.shift_frobenius,
            "premise": v.premise,
            "ell": "" if v.ell is None else v.ell,
            "verdict": v.label,
        }
        for v in verdicts
    ]
    summary = {"kind": H.kind.value, "alpha": H.alpha, "verdicts": [v.to_dict() for v in verdicts]}
    return RunResult(summary, merge_checks(v.checks() for v in verdicts), rows, list(rows[0]))
