from __future__ import annotations

from ..common.cache import cached_propagator
from ..common.config import ExperimentConfig
from ..common.errors import FitError
from ..lab.bounds import loglinear_fit
from ..lab.evolution import hhkl_scan
from .base import RunResult, lattice_of, merge_checks, model_of, operator_cache
from .registry import register

EXPERIMENT = "hhkl-scan"
MIN_R_SQUARED = 0.9


@register(
    EXPERIMENT,
    help="Cut error err(r) of the interaction-picture block against the Duhamel bound",
    default_format="csv",
    defaults={"model.kind": "nearest-neighbor", "time.t": 0.5},
)
def run(cfg: ExperimentConfig) -> RunResult:
    """
    Options:
      cut         bond to cut (default [0, 1])
      radii       radii of S_r (default every radius that leaves the ring uncovered)
      ell         far-coupling cutoff for power-law models
      gate_decay  require strictly decreasing err(r) and a clean log-linear fit (default true)
    """
    lat = lattice_of(cfg)
    H = model_of(cfg, lat)
    cut = tuple(int(x) for x in cfg.option("cut", (0, 1)))
    radii = [int(r) for r in cfg.option("radii", range((lat.n - 3) // 2 + 1))]
    ell = cfg.option("ell")
    U = cached_propagator(H, cfg.time.t, cfg.time.dt, operator_cache())
    results = hhkl_scan(H, cut, cfg.time.t, radii, cfg.time.dt, None if ell is None else int(ell), u_full=U)
    rows = [{"r": res.r, "err": res.err, "bound": res.bound, "slack": res.slack} for res in results]
    checks = merge_checks((res.checks() for res in results), prefix="every r: ")
    errs = [res.err for res in results]
    summary = {"cut": list(cut), "t_total": cfg.time.t, "dt": results[0].dt, "n_cut_terms": results[0].n_cut_terms}
    try:
        fit = loglinear_fit(radii, errs)
        summary.update(slope=fit.slope, intercept=fit.intercept, r_squared=fit.r_squared)
    except FitError as e:
        fit = None
        summary["fit_error"] = str(e)
    if cfg.option("gate_decay", True):
        checks["err(r) strictly decreasing"] = all(b < a for a, b in zip(errs, errs[1:]))
        checks["log-linear slope < 0"] = fit is not None and fit.slope < 0
        checks[f"log-linear R^2 > {MIN_R_SQUARED}"] = fit is not None and fit.r_squared > MIN_R_SQUARED
    return RunResult(summary, checks, rows, ["r", "err", "bound", "slack"])
