from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
import typer

from ..common.cache import OperatorCache, RunCache
from ..common.config import ExperimentConfig
from ..common.errors import ConfigError, ResourceError
from ..common.io_utils import TOOL, tool_version, write_csv, write_json
from ..lab.hamiltonian import (
    HamiltonianModel,
    ModelKind,
    build_nearest_neighbor,
    build_powerlaw,
    random_schedule,
)
from ..lab.lattice import RingLattice
from ..lab.linalg import MAX_DENSE_SITES, override_tolerances, sample_seed
from .registry import lookup

log = logging.getLogger(__name__)

T = TypeVar("T")

__all__ = [
    "RunResult",
    "execute",
    "fan_out",
    "lattice_of",
    "model_of",
    "sample_seeds",
    "operator_cache",
    "time_grid",
    "merge_checks",
]


@dataclass
class RunResult:
    """What an experiment hands back to the harness."""

    summary: Dict[str, Any]
    checks: Dict[str, bool]
    rows: Optional[List[Dict[str, Any]]] = None
    columns: Optional[Sequence[str]] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def violated(self) -> List[str]:
        return [k for k, ok in self.checks.items() if not ok]

    @property
    def passed(self) -> bool:
        return not self.violated


# --- helpers shared by the experiments -------------------------------------------


def lattice_of(cfg: ExperimentConfig) -> RingLattice:
    return RingLattice(cfg.lattice.l)


def model_of(cfg: ExperimentConfig, lat: Optional[RingLattice] = None) -> HamiltonianModel:
    lat = lat or lattice_of(cfg)
    m = cfg.model
    if m.kind is ModelKind.NEAREST_NEIGHBOR:
        model = build_nearest_neighbor(lat, m.seed)
    else:
        if m.alpha is None:
            raise ConfigError("power-law models need model.alpha")
        model = build_powerlaw(lat, m.alpha, m.k, m.seed, m.saturate)
    if m.breakpoints:
        model = random_schedule(model, m.breakpoints, m.seed)
    return model


def sample_seeds(cfg: ExperimentConfig, count: Optional[int] = None) -> List[int]:
    return [sample_seed(cfg.seed, i) for i in range(cfg.samples if count is None else count)]


def fan_out(fn: Callable[[Any], T], items: Sequence[Any], workers: int = 1) -> List[T]:
    """Map ``fn`` over ``items``; results come back in item order for any worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def operator_cache() -> OperatorCache:
    return OperatorCache()


def time_grid(cfg: ExperimentConfig, points: int = 5) -> List[float]:
    if cfg.time.grid:
        return [float(t) for t in cfg.time.grid]
    return [float(t) for t in np.linspace(0.0, cfg.time.t, points)]


def merge_checks(per_item: Iterable[Dict[str, bool]], prefix: str = "") -> Dict[str, bool]:
    """A check passes when it passes for every item."""
    out: Dict[str, bool] = {}
    for checks in per_item:
        for name, ok in checks.items():
            out[prefix + name] = out.get(prefix + name, True) and bool(ok)
    return out


# --- harness ---------------------------------------------------------------------


def _output_path(cfg: ExperimentConfig, fmt: str) -> Path:
    return Path(cfg.output.path) if cfg.output.path else Path(f"{cfg.experiment}.{fmt}")


def _record(cfg: ExperimentConfig, key: str, result: RunResult, artifact: Path) -> Dict[str, Any]:
    out = {
        "tool": TOOL,
        "version": tool_version(),
        "experiment": cfg.experiment,
        "config_hash": key,
        "config": cfg.model_dump(mode="json"),
        "passed": result.passed,
        "violated": result.violated,
        "summary": result.summary,
        "checks": result.checks,
        "artifact": artifact.name,
    }
    if result.rows is not None:
        out["rows"] = result.rows
    out.update(result.extra)
    return out


def execute(cfg: ExperimentConfig, force: bool = False, cache: Optional[RunCache] = None) -> int:
    """Run one experiment, write its artifact and sidecar, and return the exit status."""
    exp = lookup(cfg.experiment)
    if exp.dense and cfg.lattice.n > MAX_DENSE_SITES:
        raise ResourceError(f"n={cfg.lattice.n} exceeds the dense cap of {MAX_DENSE_SITES} sites")
    fmt = cfg.output.format or exp.default_format
    artifact = _output_path(cfg, fmt)
    key = cfg.config_hash()
    cache = cache or RunCache()

    hit = None if force else cache.lookup(key)
    if hit is not None and cache.restore(key, hit, artifact):
        status = 0 if hit.get("passed") else 1
        typer.secho(f"cache hit {key[:12]}: restored {artifact} (use --force to recompute)", fg="yellow")
        return status

    typer.secho(f"$ {TOOL} run {cfg.experiment}  (config_hash={key[:12]})", fg="cyan")
    t0 = time.monotonic()
    with override_tolerances(cfg.tolerance.certificate, cfg.tolerance.unitary):
        result: RunResult = exp.runner(cfg)
    seconds = time.monotonic() - t0
    record = _record(cfg, key, result, artifact)

    if fmt == "csv":
        if result.rows is None or not result.columns:
            raise ConfigError(f"{cfg.experiment} has no tabular output; use --format json")
        write_csv(artifact, result.columns, result.rows, key)
    else:
        write_json(artifact, record)
    write_json(artifact.with_name(artifact.name + ".run.json"), record)
    cache.store(key, record, artifact)
    log.info("%s finished in %.2fs", cfg.experiment, seconds)

    if result.violated:
        typer.secho(f"FAIL {cfg.experiment}: violated {', '.join(result.violated)}", fg="red")
        return 1
    typer.secho(f"PASS {cfg.experiment} -> {artifact}", fg="green")
    return 0
